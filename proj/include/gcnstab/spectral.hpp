#pragma once

#include "gcnstab/graph.hpp"
#include "gcnstab/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace gcnstab {

enum class SpectralMethod { PowerIteration, DenseOracle };

inline const char* to_string(SpectralMethod m) {
  return m == SpectralMethod::PowerIteration ? "PowerIteration" : "DenseOracle";
}

/// λ_G^max of a filter: the largest absolute eigenvalue of a symmetric matrix or
/// the largest singular value otherwise.
template <typename Scalar = double>
struct SpectralResult {
  Scalar lambda_max = 0;
  int iterations = 0;
  Scalar residual = 0;
  SpectralMethod method = SpectralMethod::PowerIteration;
  bool converged = false;
  /// Spectral radius, filled for asymmetric random-walk filters where it differs
  /// from the operator norm.
  std::optional<Scalar> spectral_radius;
};

struct PowerOptions {
  double tol = 1e-10;
  int max_iters = 5000;
  std::uint64_t seed = 0;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> random_unit(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>(dist(rng));
  const Scalar norm = v.norm();
  if (norm == Scalar(0)) v.setOnes();
  v.normalize();
  return v;
}

// Power iteration on a symmetric positive-semidefinite or symmetric operator `apply`.
// With `normal_equations`, `apply` is MᵀM and the result is the square root of the
// top eigenvalue.
template <typename Scalar, typename Apply>
SpectralResult<Scalar> power_iterate(Index n, Apply&& apply, bool normal_equations, const PowerOptions& opt) {
  if (!(opt.tol > 0)) throw std::invalid_argument("power iteration: tol must be positive");
  if (opt.max_iters < 1) throw std::invalid_argument("power iteration: max_iters must be at least 1");

  SpectralResult<Scalar> res;
  res.method = SpectralMethod::PowerIteration;
  if (n == 0) {
    res.converged = true;
    return res;
  }

  const Scalar tol = static_cast<Scalar>(opt.tol);
  Vector<Scalar> v = random_unit<Scalar>(n, opt.seed);
  Vector<Scalar> y(n);
  Scalar rho = 0;
  Scalar rho_prev = std::numeric_limits<Scalar>::quiet_NaN();
  bool restarted = false;

  for (int k = 1; k <= opt.max_iters; ++k) {
    apply(v, y);
    rho = v.dot(y);
    const Scalar scale = std::max(Scalar(1), std::abs(rho));
    res.residual = (y - rho * v).norm();
    res.iterations = k;

    const Scalar ynorm = y.norm();
    if (ynorm == Scalar(0)) {  // v in the null space: zero operator or unlucky start
      if (restarted) {
        rho = 0;
        res.converged = true;
        break;
      }
      restarted = true;
      v = random_unit<Scalar>(n, opt.seed ^ 0x9e3779b97f4a7c15ULL);
      continue;
    }
    if (res.residual <= tol * scale) {
      res.converged = true;
      break;
    }
    // Stagnant Rayleigh quotient with a residual that is not shrinking with it:
    // typically a start vector (numerically) orthogonal to the dominant direction.
    if (!restarted && std::abs(rho - rho_prev) < tol * Scalar(1e-3) * scale &&
        res.residual > std::sqrt(tol) * scale) {
      restarted = true;
      v = random_unit<Scalar>(n, opt.seed ^ 0x9e3779b97f4a7c15ULL);
      rho_prev = std::numeric_limits<Scalar>::quiet_NaN();
      continue;
    }
    rho_prev = rho;
    v = y / ynorm;
  }

  res.lambda_max = normal_equations ? std::sqrt(std::max(rho, Scalar(0))) : std::abs(rho);
  return res;
}

}  // namespace detail

/// Power iteration on a general sparse matrix.
template <typename Scalar, int Options, typename StorageIndex>
SpectralResult<Scalar> lambda_max(const Eigen::SparseMatrix<Scalar, Options, StorageIndex>& m, bool symmetric,
                                  const PowerOptions& opt = {}) {
  if (m.rows() != m.cols()) throw std::invalid_argument("lambda_max: matrix must be square");
  if (symmetric) {
    return detail::power_iterate<Scalar>(
        m.rows(), [&](const Vector<Scalar>& v, Vector<Scalar>& y) { y.noalias() = m * v; }, false, opt);
  }
  Vector<Scalar> tmp(m.rows());
  return detail::power_iterate<Scalar>(
      m.rows(),
      [&](const Vector<Scalar>& v, Vector<Scalar>& y) {
        tmp.noalias() = m * v;
        y.noalias() = m.transpose() * tmp;
      },
      true, opt);
}

/// D^{1/2} (D^{-1}A + I) D^{-1/2}, recovered entrywise as sqrt(R_ij R_ji). Shares the
/// spectrum of the random-walk filter.
template <typename Scalar>
typename FilterMatrix<Scalar>::Sparse symmetrized_random_walk(const FilterMatrix<Scalar>& f) {
  if (f.kind != FilterKind::RandomWalk) throw std::invalid_argument("symmetrized_random_walk: not a random-walk filter");
  using Sparse = typename FilterMatrix<Scalar>::Sparse;
  std::vector<Eigen::Triplet<Scalar>> t;
  t.reserve(static_cast<std::size_t>(f.matrix.nonZeros()));
  for (Index r = 0; r < f.size(); ++r) {
    for (typename Sparse::InnerIterator it(f.matrix, r); it; ++it) {
      const Scalar other = f.matrix.coeff(it.col(), r);
      t.emplace_back(r, it.col(), std::sqrt(it.value() * other));
    }
  }
  Sparse s(f.size(), f.size());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

/// λ_G^max of a filter. Asymmetric filters return the largest singular value; for
/// the random-walk kind the spectral radius is reported alongside.
template <typename Scalar>
SpectralResult<Scalar> lambda_max(const FilterMatrix<Scalar>& f, const PowerOptions& opt = {}) {
  SpectralResult<Scalar> res = lambda_max(f.matrix, f.symmetric, opt);
  if (f.kind == FilterKind::RandomWalk) {
    if (f.symmetric) {
      res.spectral_radius = res.lambda_max;
    } else {
      res.spectral_radius = lambda_max(symmetrized_random_walk(f), true, opt).lambda_max;
    }
  }
  return res;
}

template <typename Scalar = double>
struct DenseSpectrum {
  /// Eigenvalues (symmetric input) or singular values, sorted by descending magnitude.
  Vector<Scalar> values;
  bool symmetric = true;
  int sweeps = 0;
};

namespace detail {

// Cyclic Jacobi. Stops once off(A)_F <= 1e-12 ||M||_F.
template <typename Scalar>
Vector<Scalar> jacobi_eigenvalues(DenseMatrix<Scalar> a, int& sweeps) {
  const Index n = a.rows();
  const Scalar total = a.norm();
  const Scalar target = Scalar(1e-12) * total;
  auto off = [&] {
    Scalar s = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  sweeps = 0;
  while (off() > target) {
    if (++sweeps > 100) throw std::runtime_error("jacobi: no convergence after 100 sweeps");
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return a.diagonal();
}

// One-sided (Hestenes) Jacobi: orthogonalize columns; their norms are the singular values.
template <typename Scalar>
Vector<Scalar> jacobi_singular_values(DenseMatrix<Scalar> u, int& sweeps) {
  const Index n = u.cols();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  sweeps = 0;
  bool rotated = true;
  while (rotated) {
    if (++sweeps > 100) throw std::runtime_error("one-sided jacobi: no convergence after 100 sweeps");
    rotated = false;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar alpha = u.col(p).squaredNorm();
        const Scalar beta = u.col(q).squaredNorm();
        const Scalar gamma = u.col(p).dot(u.col(q));
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == Scalar(0)) continue;
        rotated = true;
        const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
        const Scalar t = (zeta >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = c * t;
        const Vector<Scalar> up = u.col(p);
        u.col(p) = c * up - s * u.col(q);
        u.col(q) = s * up + c * u.col(q);
      }
    }
  }
  return u.colwise().norm().transpose();
}

}  // namespace detail

/// Full spectrum of a small dense matrix. Exactly symmetric input goes through cyclic
/// Jacobi and yields signed eigenvalues; anything else yields singular values.
template <typename Derived>
DenseSpectrum<typename Derived::Scalar> dense_spectrum(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw std::invalid_argument("dense_spectrum: matrix must be square");
  if (m.rows() > kDenseGuard) throw std::length_error("dense_spectrum: matrix exceeds dense size guard");
  if (!m.allFinite()) throw std::invalid_argument("dense_spectrum: non-finite entries");

  DenseSpectrum<Scalar> out;
  const DenseMatrix<Scalar> a = m;
  out.symmetric = (a == a.transpose());
  out.values = out.symmetric ? detail::jacobi_eigenvalues<Scalar>(a, out.sweeps)
                             : detail::jacobi_singular_values<Scalar>(a, out.sweeps);
  std::sort(out.values.data(), out.values.data() + out.values.size(),
            [](Scalar x, Scalar y) { return std::abs(x) > std::abs(y); });
  return out;
}

/// Largest magnitude entry of dense_spectrum(m); zero for an empty matrix.
template <typename Derived>
typename Derived::Scalar dense_lambda_max(const Eigen::MatrixBase<Derived>& m) {
  const auto s = dense_spectrum(m);
  return s.values.size() == 0 ? typename Derived::Scalar(0) : std::abs(s.values(0));
}

template <typename Scalar = double>
struct EgoSpectrum {
  Index node = 0;
  Index size = 0;
  Scalar lambda_ego = 0;
  bool violated = false;
};

template <typename Scalar = double>
struct InterlacingReport {
  SpectralResult<Scalar> global;
  std::vector<EgoSpectrum<Scalar>> nodes;
  Index violations = 0;
  /// max over nodes of λ_ego / λ_G (at most 1 up to tolerance).
  Scalar max_ratio = 0;
};

/// For every node x, compares the top singular/absolute eigenvalue of the principal
/// submatrix over 𝒩(x) against λ_G^max and flags any λ_ego > λ_G + tol.
template <typename Scalar>
InterlacingReport<Scalar> interlacing_check(const Graph& g, const FilterMatrix<Scalar>& f, double tol = 1e-9,
                                            const PowerOptions& opt = {}) {
  if (g.num_nodes() != f.size()) throw std::invalid_argument("interlacing_check: graph and filter sizes differ");

  InterlacingReport<Scalar> rep;
  rep.global = lambda_max(f, opt);
  const Scalar lambda_g = rep.global.lambda_max;
  rep.nodes.resize(static_cast<std::size_t>(f.size()));

  parallel_for(static_cast<std::size_t>(f.size()), [&](std::size_t i) {
    const auto idx = neighborhood(f, static_cast<Index>(i));
    auto& e = rep.nodes[i];
    e.node = static_cast<Index>(i);
    e.size = static_cast<Index>(idx.size());
    e.lambda_ego = dense_lambda_max(principal_submatrix(f, idx));
    e.violated = e.lambda_ego > lambda_g + static_cast<Scalar>(tol);
  });

  for (const auto& e : rep.nodes) {
    if (e.violated) ++rep.violations;
    if (lambda_g > Scalar(0)) rep.max_ratio = std::max(rep.max_ratio, e.lambda_ego / lambda_g);
  }
  return rep;
}

}  // namespace gcnstab
