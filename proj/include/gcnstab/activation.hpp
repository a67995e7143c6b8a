#pragma once

#include "gcnstab/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gcnstab {

// ReLU is intentionally not offered: its derivative is not Lipschitz.
enum class ActivationKind { Elu1, Sigmoid, Tanh };

enum class LossKind { Logistic, ClampedCrossEntropy };

std::string_view to_string(ActivationKind kind);
std::string_view to_string(LossKind kind);
ActivationKind parse_activation(std::string_view name);
LossKind parse_loss(std::string_view name);

/// σ(x). ELU uses α = 1; the x <= 0 branch owns the kink so σ'(0) = σ''(0) = 1.
template <typename Scalar>
Scalar activate(ActivationKind kind, Scalar x) {
  switch (kind) {
    case ActivationKind::Elu1: return x > Scalar(0) ? x : std::expm1(x);
    case ActivationKind::Sigmoid: return Scalar(1) / (Scalar(1) + std::exp(-x));
    case ActivationKind::Tanh: return std::tanh(x);
  }
  return x;
}

template <typename Scalar>
Scalar activation_derivative(ActivationKind kind, Scalar x) {
  switch (kind) {
    case ActivationKind::Elu1: return x > Scalar(0) ? Scalar(1) : std::exp(x);
    case ActivationKind::Sigmoid: {
      const Scalar s = activate(kind, x);
      return s * (Scalar(1) - s);
    }
    case ActivationKind::Tanh: {
      const Scalar t = std::tanh(x);
      return Scalar(1) - t * t;
    }
  }
  return Scalar(1);
}

template <typename Scalar>
Scalar activation_second_derivative(ActivationKind kind, Scalar x) {
  switch (kind) {
    case ActivationKind::Elu1: return x > Scalar(0) ? Scalar(0) : std::exp(x);
    case ActivationKind::Sigmoid: {
      const Scalar s = activate(kind, x);
      return s * (Scalar(1) - s) * (Scalar(1) - Scalar(2) * s);
    }
    case ActivationKind::Tanh: {
      const Scalar t = std::tanh(x);
      return Scalar(-2) * t * (Scalar(1) - t * t);
    }
  }
  return Scalar(0);
}

/// Loss on the activated output f.
///   Logistic:             log(1 + exp(-y f)), y in {-1, +1}
///   ClampedCrossEntropy:  -[y log p + (1-y) log(1-p)], p = clamp(f, ε, 1-ε), y in {0, 1}
struct Loss {
  LossKind kind = LossKind::Logistic;
  double epsilon = 1e-6;

  bool valid_label(int y) const {
    return kind == LossKind::Logistic ? (y == -1 || y == 1) : (y == 0 || y == 1);
  }

  void check_label(int y) const {
    if (!valid_label(y)) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside the domain of the " +
                                  std::string(to_string(kind)) + " loss");
    }
  }

  /// Maps a stored ±1 label into this loss's label domain.
  int from_signed(int y) const { return kind == LossKind::Logistic ? y : (y > 0 ? 1 : 0); }

  template <typename Scalar>
  Scalar value(Scalar f, int y) const {
    if (kind == LossKind::Logistic) {
      const Scalar z = -Scalar(y) * f;
      // log1p(exp(z)) without overflow
      return z > Scalar(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    const Scalar eps = static_cast<Scalar>(epsilon);
    const Scalar p = std::clamp(f, eps, Scalar(1) - eps);
    return y == 1 ? -std::log(p) : -std::log1p(-p);
  }

  /// ∂ℓ/∂f.
  template <typename Scalar>
  Scalar derivative(Scalar f, int y) const {
    if (kind == LossKind::Logistic) {
      const Scalar yf = Scalar(y) * f;
      // -y / (1 + e^{yf}) = -y σ(-yf)
      const Scalar s = yf >= Scalar(0) ? std::exp(-yf) / (Scalar(1) + std::exp(-yf)) : Scalar(1) / (Scalar(1) + std::exp(yf));
      return -Scalar(y) * s;
    }
    const Scalar eps = static_cast<Scalar>(epsilon);
    if (f < eps || f > Scalar(1) - eps) return Scalar(0);
    return y == 1 ? -Scalar(1) / f : Scalar(1) / (Scalar(1) - f);
  }

  /// ∂²ℓ/∂f².
  template <typename Scalar>
  Scalar second_derivative(Scalar f, int y) const {
    if (kind == LossKind::Logistic) {
      const Scalar yf = Scalar(y) * f;
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-std::abs(yf)));
      return s * (Scalar(1) - s);
    }
    const Scalar eps = static_cast<Scalar>(epsilon);
    if (f < eps || f > Scalar(1) - eps) return Scalar(0);
    return y == 1 ? Scalar(1) / (f * f) : Scalar(1) / ((Scalar(1) - f) * (Scalar(1) - f));
  }

  /// Classification rule matching the loss: ℓ(f,+) < ℓ(f,-) for logistic, p > 1/2 for cross-entropy.
  template <typename Scalar>
  int predict(Scalar f) const {
    if (kind == LossKind::Logistic) return f > Scalar(0) ? 1 : -1;
    return f > Scalar(0.5) ? 1 : 0;
  }

  /// Cross-entropy breaks the global Lipschitz/smoothness assumptions behind the bounds.
  bool satisfies_assumptions() const { return kind == LossKind::Logistic; }
};

/// Lipschitz constant of a function (alpha) and of its derivative (nu).
struct Constants {
  double alpha = 0;
  double nu = 0;
};

/// Certifies (α_σ, ν_σ) by maximizing |σ'| and |σ''| on a 1e-4 grid over [-50, 50],
/// rounded up at the sixth decimal.
Constants derive_constants(ActivationKind kind);

/// Logistic: grid maximization of |ℓ'| and |ℓ''| in f over [-50, 50] for both labels,
/// rounded up at the sixth decimal. Clamped cross-entropy: closed form from the
/// clamp, α_ℓ = 1/ε and ν_ℓ = 1/ε².
Constants derive_constants(const Loss& loss);

}  // namespace gcnstab
