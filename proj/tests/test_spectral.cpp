#include "doctest.h"
#include "fixtures.hpp"

#include "gcnstab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

using namespace gcnstab;

namespace {

// Independent oracle: Eigen's solvers, not the Jacobi code under test.
double eigen_oracle(const FilterMatrix<double>& f) {
  const Eigen::MatrixXd d = to_dense(f);
  if (f.symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
  return svd.singularValues()(0);
}

const FilterKind kKinds[] = {FilterKind::Unnormalized, FilterKind::SymNormalized, FilterKind::RandomWalk};

}  // namespace

TEST_CASE("lambda_max worked values") {
  CHECK(lambda_max(build_filter(fixtures::p3(), FilterKind::Unnormalized)).lambda_max ==
        doctest::Approx(1 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(lambda_max(build_filter(fixtures::star(5), FilterKind::Unnormalized)).lambda_max ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK(lambda_max(build_filter(fixtures::k3(), FilterKind::SymNormalized)).lambda_max ==
        doctest::Approx(2.0).epsilon(1e-12));
  for (Index n : {10, 20, 37}) {
    const auto r = lambda_max(build_filter(fixtures::complete(n), FilterKind::Unnormalized));
    CHECK(std::abs(r.lambda_max - static_cast<double>(n)) < 1e-6);
    CHECK(r.converged);
  }
}

TEST_CASE("power iteration agrees with the Eigen oracle") {
  std::vector<Graph> graphs{fixtures::p3(), fixtures::star(50), fixtures::cycle(30), fixtures::complete(20)};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) graphs.push_back(fixtures::erdos_renyi(200, 0.05, seed));
  graphs.push_back(build_graph(30, {{0, 1}, {1, 2}, {5, 6}}));  // mostly isolated
  for (const Graph& g : graphs) {
    for (FilterKind kind : kKinds) {
      const auto f = build_filter(g, kind);
      const auto r = lambda_max(f);
      CHECK(r.converged);
      // Asymmetric filters iterate on MᵀM, whose dominant eigenvalue is λ².
      const double rho = f.symmetric ? r.lambda_max : r.lambda_max * r.lambda_max;
      CHECK(r.residual <= 1e-10 * std::max(1.0, rho));
      CHECK(std::abs(r.lambda_max - eigen_oracle(f)) <= 1e-8);
    }
  }
}

TEST_CASE("normalized filters stay within [0, 2]") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Graph g = fixtures::erdos_renyi(120, 0.04, seed);
    CHECK(lambda_max(build_filter(g, FilterKind::SymNormalized)).lambda_max <= 2 + 1e-9);
    const auto rw = lambda_max(build_filter(g, FilterKind::RandomWalk));
    REQUIRE(rw.spectral_radius.has_value());
    CHECK(*rw.spectral_radius <= 2 + 1e-9);
    // Operator norm dominates spectral radius.
    CHECK(rw.lambda_max >= *rw.spectral_radius - 1e-9);

    const Eigen::MatrixXd dense = to_dense(build_filter(g, FilterKind::RandomWalk));
    const Eigen::VectorXcd ev = dense.eigenvalues();
    CHECK(std::abs(ev.cwiseAbs().maxCoeff() - *rw.spectral_radius) < 1e-8);
  }
}

TEST_CASE("power iteration is deterministic for a fixed seed") {
  const auto f = build_filter(fixtures::erdos_renyi(80, 0.08, 3), FilterKind::RandomWalk);
  PowerOptions opt;
  opt.seed = 42;
  const auto a = lambda_max(f, opt);
  const auto b = lambda_max(f, opt);
  CHECK(a.lambda_max == b.lambda_max);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("power iteration edge cases") {
  const auto id = build_filter(build_graph(4, {}), FilterKind::Identity);
  CHECK(lambda_max(id).lambda_max == doctest::Approx(1.0));

  Eigen::SparseMatrix<double, Eigen::RowMajor, int> zero(3, 3);
  const auto z = lambda_max(zero, true);
  CHECK(z.lambda_max == 0.0);
  CHECK(z.converged);

  PowerOptions one;
  one.max_iters = 1;
  const auto r = lambda_max(build_filter(fixtures::erdos_renyi(50, 0.1, 1), FilterKind::Unnormalized), one);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.residual > 0);

  PowerOptions bad;
  bad.tol = 0;
  CHECK_THROWS_AS(lambda_max(id, bad), std::invalid_argument);
}

TEST_CASE("dense_spectrum worked values") {
  const auto a = dense_spectrum(Eigen::MatrixXd::Ones(2, 2));
  CHECK(a.symmetric);
  CHECK(a.values(0) == doctest::Approx(2.0));
  CHECK(std::abs(a.values(1)) < 1e-12);

  const auto id = dense_spectrum(Eigen::MatrixXd::Identity(3, 3));
  for (Index i = 0; i < 3; ++i) CHECK(id.values(i) == 1.0);

  const auto k3 = dense_spectrum(to_dense(build_filter(fixtures::k3(), FilterKind::Unnormalized)));
  CHECK(k3.values(0) == doctest::Approx(3.0));
  CHECK(std::abs(k3.values(1)) < 1e-12);
  CHECK(std::abs(k3.values(2)) < 1e-12);
}

TEST_CASE("dense_spectrum matches Eigen on random matrices") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (Index n : {1, 2, 5, 17, 40}) {
    Eigen::MatrixXd m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = normal(rng);
    const Eigen::MatrixXd s = m + m.transpose();

    const auto sym = dense_spectrum(s);
    Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues();
    std::sort(ref.data(), ref.data() + n, [](double x, double y) { return std::abs(x) > std::abs(y); });
    CHECK((sym.values - ref).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, s.norm()));

    const auto gen = dense_spectrum(m);
    if (n > 1) CHECK_FALSE(gen.symmetric);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    CHECK((gen.values - sv).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, m.norm()));
  }
}

TEST_CASE("dense_spectrum guards") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(dense_spectrum(bad), std::invalid_argument);
  CHECK_THROWS_AS(dense_spectrum(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(dense_spectrum(Eigen::MatrixXd::Zero(kDenseGuard + 1, kDenseGuard + 1)), std::length_error);
}

TEST_CASE("interlacing on a star") {
  const Graph g = fixtures::star(5);
  const auto rep = interlacing_check(g, build_filter(g, FilterKind::Unnormalized));
  CHECK(rep.violations == 0);
  CHECK(rep.global.lambda_max == doctest::Approx(3.0));
  CHECK(rep.nodes[0].lambda_ego == doctest::Approx(3.0));
  CHECK(rep.nodes[0].size == 5);
  for (Index leaf = 1; leaf < 5; ++leaf) {
    CHECK(rep.nodes[static_cast<std::size_t>(leaf)].lambda_ego == doctest::Approx(2.0));
    CHECK(rep.nodes[static_cast<std::size_t>(leaf)].size == 2);
  }
  CHECK(rep.max_ratio == doctest::Approx(1.0));
}

TEST_CASE("interlacing holds on random graphs for every kind") {
  const Graph g = fixtures::erdos_renyi(200, 0.05, 11);
  for (FilterKind kind : kKinds) {
    const auto rep = interlacing_check(g, build_filter(g, kind), 1e-9);
    CHECK(rep.violations == 0);
    CHECK(rep.max_ratio <= 1 + 1e-9);
  }
}

TEST_CASE("interlacing flags an inflated block") {
  // A global value that is too small must be reported, not silently accepted.
  const Graph g = fixtures::star(5);
  auto f = build_filter(g, FilterKind::Unnormalized);
  const auto rep = interlacing_check(g, f, -0.5);
  CHECK(rep.violations == 1);
  CHECK(rep.nodes[0].violated);
}
