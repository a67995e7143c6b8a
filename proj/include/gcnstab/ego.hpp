#pragma once

#include "gcnstab/activation.hpp"
#include "gcnstab/graph.hpp"
#include "gcnstab/parallel.hpp"
#include "gcnstab/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gcnstab {

template <typename Scalar>
struct NormalizedFeatures {
  FeatureMatrix<Scalar> features;
  /// All-zero rows, left unchanged.
  Index zero_rows = 0;
};

/// Scales every nonzero row to unit L2 norm.
template <typename Scalar>
NormalizedFeatures<Scalar> normalize_features(const FeatureMatrix<Scalar>& x) {
  if (!x.allFinite()) throw std::invalid_argument("normalize_features: non-finite feature entries");
  NormalizedFeatures<Scalar> out{x, 0};
  for (Index i = 0; i < x.rows(); ++i) {
    const Scalar norm = x.row(i).norm();
    if (norm == Scalar(0)) {
      ++out.zero_rows;
      continue;
    }
    out.features.row(i) /= norm;
  }
  return out;
}

/// True when every row has ‖row‖₂ ≤ 1 + tol.
template <typename Scalar>
bool rows_within_unit_ball(const FeatureMatrix<Scalar>& x, Scalar tol = Scalar(1e-12)) {
  for (Index i = 0; i < x.rows(); ++i) {
    if (x.row(i).norm() > Scalar(1) + tol) return false;
  }
  return true;
}

/// The ego-graph G_x of one node: the principal block g_x(L) over 𝒩(x) and the
/// matching feature rows h_x. Local index 0 is the center; the remaining nodes
/// follow in ascending global order.
template <typename Scalar = double>
struct EgoGraph {
  Index center = 0;
  std::vector<Index> nodes;  // local -> global
  DenseMatrix<Scalar> filter_block;
  FeatureMatrix<Scalar> features_block;

  Index size() const noexcept { return static_cast<Index>(nodes.size()); }

  /// Local index of a global node, or -1 when it is not in the ego-graph.
  Index local_index(Index global) const {
    const auto it = std::find(nodes.begin(), nodes.end(), global);
    return it == nodes.end() ? Index(-1) : static_cast<Index>(it - nodes.begin());
  }

  /// Σ_j e_{·j} x_j = [g_x(L) h_x]_0, the graph-convolved feature vector at the center.
  Vector<Scalar> aggregate() const { return (filter_block.row(0) * features_block).transpose(); }
};

template <typename Scalar>
EgoGraph<Scalar> extract_ego(const FilterMatrix<Scalar>& f, const FeatureMatrix<Scalar>& x, Index node) {
  if (node < 0 || node >= f.size()) throw std::out_of_range("extract_ego: node index out of range");
  if (x.rows() != f.size()) throw std::invalid_argument("extract_ego: feature rows do not match filter size");

  const std::vector<Index> sorted = neighborhood(f, node);
  const DenseMatrix<Scalar> block = principal_submatrix(f, sorted);

  // Permutation putting the center first; the rest keep ascending order.
  const auto q = static_cast<Index>(sorted.size());
  const auto center_pos = static_cast<Index>(std::lower_bound(sorted.begin(), sorted.end(), node) - sorted.begin());
  std::vector<Index> perm;  // local -> position in `sorted`
  perm.reserve(sorted.size());
  perm.push_back(center_pos);
  for (Index k = 0; k < q; ++k) {
    if (k != center_pos) perm.push_back(k);
  }

  EgoGraph<Scalar> e;
  e.center = node;
  e.nodes.resize(sorted.size());
  e.filter_block.resize(q, q);
  e.features_block.resize(q, x.cols());
  for (Index a = 0; a < q; ++a) {
    const Index pa = perm[static_cast<std::size_t>(a)];
    e.nodes[static_cast<std::size_t>(a)] = sorted[static_cast<std::size_t>(pa)];
    e.features_block.row(a) = x.row(sorted[static_cast<std::size_t>(pa)]);
    for (Index b = 0; b < q; ++b) e.filter_block(a, b) = block(pa, perm[static_cast<std::size_t>(b)]);
  }
  return e;
}

/// Single-node output σ(Σ_j e_{·j} x_jᵀ θ).
template <typename Scalar>
Scalar node_output(const EgoGraph<Scalar>& e, const Vector<Scalar>& theta, ActivationKind act) {
  if (e.features_block.cols() != theta.size()) throw std::invalid_argument("node_output: theta dimension mismatch");
  if (!theta.allFinite()) throw std::invalid_argument("node_output: non-finite theta");
  return activate(act, e.aggregate().dot(theta));
}

/// g(L) X for all nodes at once; row i equals extract_ego(f, x, i).aggregate().
template <typename Scalar>
FeatureMatrix<Scalar> aggregate_features(const FilterMatrix<Scalar>& f, const FeatureMatrix<Scalar>& x) {
  if (x.rows() != f.size()) throw std::invalid_argument("aggregate_features: feature rows do not match filter size");
  return FeatureMatrix<Scalar>(f.matrix * x);
}

template <typename Scalar = double>
struct GLambda {
  /// max over nodes of ‖Σ_j e_{·j} x_j‖₂
  Scalar value = 0;
  Index argmax = -1;
  Scalar lambda_max = 0;
  /// value ≤ λ_G^max + tol
  bool within_bound = true;
  bool features_normalized = true;
};

/// Empirical g_λ together with the check against λ_G^max. The check is only
/// meaningful for features inside the unit ball, which is reported.
template <typename Scalar>
GLambda<Scalar> g_lambda_empirical(const FilterMatrix<Scalar>& f, const FeatureMatrix<Scalar>& x, double tol = 1e-9,
                                   const PowerOptions& opt = {}) {
  GLambda<Scalar> out;
  out.features_normalized = rows_within_unit_ball(x);
  const FeatureMatrix<Scalar> agg = aggregate_features(f, x);

  std::vector<Scalar> norms(static_cast<std::size_t>(agg.rows()));
  parallel_for(norms.size(), [&](std::size_t i) { norms[i] = agg.row(static_cast<Index>(i)).norm(); });
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (out.argmax < 0 || norms[i] > out.value) {
      out.value = norms[i];
      out.argmax = static_cast<Index>(i);
    }
  }
  if (out.argmax < 0) out.value = 0;

  out.lambda_max = lambda_max(f, opt).lambda_max;
  out.within_bound = out.value <= out.lambda_max + static_cast<Scalar>(tol);
  return out;
}

}  // namespace gcnstab
