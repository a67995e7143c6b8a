#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gcnstab {

using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Node features, one row per node.
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Largest dimension accepted by routines that materialize dense blocks.
inline constexpr Index kDenseGuard = 4096;

/// Raised for malformed graph input. `position()` is the 0-based index of the
/// offending edge in the list passed to build_graph, or -1 when not tied to an edge.
class GraphError : public std::invalid_argument {
 public:
  GraphError(const std::string& what, Index position = -1)
      : std::invalid_argument(what), position_(position) {}
  Index position() const noexcept { return position_; }

 private:
  Index position_;
};

struct Edge {
  Index u = 0;
  Index v = 0;
  double weight = 1.0;
};

/// Undirected weighted graph. Each edge is stored once with u < v; the
/// adjacency is symmetric by construction. Immutable after build_graph.
class Graph {
 public:
  Graph() = default;

  Index num_nodes() const noexcept { return n_; }
  Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Sum of incident edge weights (the unweighted degree when all weights are 1).
  double degree(Index node) const { return degree_.at(static_cast<std::size_t>(node)); }
  const std::vector<double>& degrees() const noexcept { return degree_; }

  /// Neighbours of `node` in ascending order.
  const std::vector<Index>& neighbors(Index node) const {
    return adjacency_.at(static_cast<std::size_t>(node));
  }

  /// Symmetric adjacency matrix A.
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> adjacency() const;

 private:
  friend Graph build_graph(Index n, std::vector<Edge> edges);

  Index n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> degree_;
  std::vector<std::vector<Index>> adjacency_;
};

/// Validates and canonicalizes an undirected edge list. Edges come back sorted by
/// (min(u,v), max(u,v)). Throws GraphError naming the offending edge for out-of-range
/// endpoints, self-loops, duplicates, and non-finite or non-positive weights.
Graph build_graph(Index n, std::vector<Edge> edges);

// graph.tsv: "N<TAB>E" header then one "u<TAB>v[<TAB>w]" line per edge.
Graph read_graph_tsv(const std::string& path);
void write_graph_tsv(const Graph& graph, const std::string& path);

enum class FilterKind { Unnormalized, SymNormalized, RandomWalk, Identity };

std::string_view to_string(FilterKind kind);
FilterKind parse_filter_kind(std::string_view name);

/// Sparse graph convolution filter g(L), row-compressed with sorted columns.
template <typename Scalar = double>
struct FilterMatrix {
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

  FilterKind kind = FilterKind::Identity;
  bool symmetric = true;
  Sparse matrix;

  Index size() const noexcept { return matrix.rows(); }

  Scalar coeff(Index row, Index col) const { return matrix.coeff(row, col); }
};

/// Builds g(L) for `kind`:
///   Unnormalized  A + I
///   SymNormalized D^{-1/2} A D^{-1/2} + I
///   RandomWalk    D^{-1} A + I
///   Identity      I
/// Isolated nodes contribute only the unit diagonal in the normalized kinds.
template <typename Scalar = double>
FilterMatrix<Scalar> build_filter(const Graph& graph, FilterKind kind) {
  const Index n = graph.num_nodes();
  const auto& deg = graph.degrees();

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(n + 2 * graph.num_edges()));
  for (Index i = 0; i < n; ++i) triplets.emplace_back(i, i, Scalar(1));

  if (kind != FilterKind::Identity) {
    for (const Edge& e : graph.edges()) {
      const Scalar w = static_cast<Scalar>(e.weight);
      const Scalar du = static_cast<Scalar>(deg[static_cast<std::size_t>(e.u)]);
      const Scalar dv = static_cast<Scalar>(deg[static_cast<std::size_t>(e.v)]);
      switch (kind) {
        case FilterKind::Unnormalized:
          triplets.emplace_back(e.u, e.v, w);
          triplets.emplace_back(e.v, e.u, w);
          break;
        case FilterKind::SymNormalized: {
          // Same expression both ways keeps the matrix bit-exactly symmetric.
          const Scalar value = w / std::sqrt(du * dv);
          triplets.emplace_back(e.u, e.v, value);
          triplets.emplace_back(e.v, e.u, value);
          break;
        }
        case FilterKind::RandomWalk:
          triplets.emplace_back(e.u, e.v, w / du);
          triplets.emplace_back(e.v, e.u, w / dv);
          break;
        case FilterKind::Identity:
          break;
      }
    }
  }

  FilterMatrix<Scalar> f;
  f.kind = kind;
  f.matrix.resize(n, n);
  f.matrix.setFromTriplets(triplets.begin(), triplets.end());
  f.matrix.makeCompressed();

  f.symmetric = true;
  if (kind == FilterKind::RandomWalk) {
    for (const Edge& e : graph.edges()) {
      if (deg[static_cast<std::size_t>(e.u)] != deg[static_cast<std::size_t>(e.v)]) {
        f.symmetric = false;
        break;
      }
    }
  }
  return f;
}

/// 𝒩(x): the column indices of the nonzero entries of row `node`, which always
/// includes `node` itself. Ascending order.
template <typename Scalar>
std::vector<Index> neighborhood(const FilterMatrix<Scalar>& f, Index node) {
  if (node < 0 || node >= f.size()) throw std::out_of_range("node index out of range");
  std::vector<Index> out;
  bool has_self = false;
  for (typename FilterMatrix<Scalar>::Sparse::InnerIterator it(f.matrix, node); it; ++it) {
    if (it.value() == Scalar(0) && it.col() != node) continue;
    if (it.col() == node) has_self = true;
    out.push_back(it.col());
  }
  if (!has_self) out.insert(std::lower_bound(out.begin(), out.end(), node), node);
  return out;
}

/// Dense |idx|×|idx| block with M(a,b) = g(L)(idx[a], idx[b]).
/// `idx` must be strictly increasing, in range, and no longer than kDenseGuard.
template <typename Scalar>
DenseMatrix<Scalar> principal_submatrix(const FilterMatrix<Scalar>& f, const std::vector<Index>& idx) {
  const auto q = static_cast<Index>(idx.size());
  if (q > kDenseGuard) throw std::length_error("principal submatrix exceeds dense size guard");
  for (std::size_t a = 0; a < idx.size(); ++a) {
    if (idx[a] < 0 || idx[a] >= f.size()) throw std::out_of_range("submatrix index out of range");
    if (a > 0 && idx[a] <= idx[a - 1]) throw std::invalid_argument("submatrix indices must be sorted and unique");
  }

  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(q, q);
  for (Index a = 0; a < q; ++a) {
    // Merge walk: row columns and idx are both sorted.
    typename FilterMatrix<Scalar>::Sparse::InnerIterator it(f.matrix, idx[static_cast<std::size_t>(a)]);
    Index b = 0;
    while (it && b < q) {
      const Index want = idx[static_cast<std::size_t>(b)];
      if (it.col() < want) {
        ++it;
      } else if (it.col() > want) {
        ++b;
      } else {
        out(a, b) = it.value();
        ++it;
        ++b;
      }
    }
  }
  return out;
}

template <typename Scalar>
DenseMatrix<Scalar> to_dense(const FilterMatrix<Scalar>& f) {
  if (f.size() > kDenseGuard) throw std::length_error("filter exceeds dense size guard");
  return DenseMatrix<Scalar>(f.matrix);
}

}  // namespace gcnstab
