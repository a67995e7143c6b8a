#pragma once

#include "gcnstab/activation.hpp"
#include "gcnstab/ego.hpp"
#include "gcnstab/graph.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace gcnstab {

/// Full-graph forward σ(g(L) X θ).
template <typename Scalar>
Vector<Scalar> forward_full(const FilterMatrix<Scalar>& f, const FeatureMatrix<Scalar>& x, const Vector<Scalar>& theta,
                            ActivationKind act) {
  if (x.rows() != f.size()) throw std::invalid_argument("forward_full: feature rows do not match filter size");
  if (x.cols() != theta.size()) throw std::invalid_argument("forward_full: theta dimension does not match features");
  const Vector<Scalar> xt = x * theta;
  Vector<Scalar> u = f.matrix * xt;
  return u.unaryExpr([act](Scalar v) { return activate(act, v); });
}

/// ∇_θ ℓ(σ(a·θ), y) = ℓ'(f, y) σ'(a·θ) a for an aggregated feature vector a.
template <typename Scalar>
Vector<Scalar> loss_grad(const Vector<Scalar>& aggregate, const Vector<Scalar>& theta, ActivationKind act,
                         const Loss& loss, int y) {
  loss.check_label(y);
  if (aggregate.size() != theta.size()) throw std::invalid_argument("loss_grad: dimension mismatch");
  const Scalar u = aggregate.dot(theta);
  const Scalar fval = activate(act, u);
  return (loss.derivative(fval, y) * activation_derivative(act, u)) * aggregate;
}

/// Closed-form gradient of the node loss for one ego-graph sample.
template <typename Scalar>
Vector<Scalar> node_loss_grad(const EgoGraph<Scalar>& e, const Vector<Scalar>& theta, ActivationKind act,
                              const Loss& loss, int y) {
  return loss_grad<Scalar>(e.aggregate(), theta, act, loss, y);
}

template <typename Scalar>
Scalar loss_value(const Vector<Scalar>& aggregate, const Vector<Scalar>& theta, ActivationKind act, const Loss& loss,
                  int y) {
  loss.check_label(y);
  return loss.value(activate(act, aggregate.dot(theta)), y);
}

}  // namespace gcnstab
