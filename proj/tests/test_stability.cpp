#include "doctest.h"
#include "fixtures.hpp"

#include "gcnstab/datasets.hpp"
#include "gcnstab/spectral.hpp"
#include "gcnstab/stability.hpp"

#include <cmath>
#include <limits>

using namespace gcnstab;

namespace {

BoundInputs worked(std::int64_t steps) {
  BoundInputs b;
  b.eta = 0.1;
  b.loss = {1.0, 0.25};
  b.activation = {1.0, 1.0};
  b.lambda = 2.0;
  b.steps = steps;
  b.m = 100;
  b.loss_bound = 1.0;
  b.delta = 0.1;
  return b;
}

struct Task {
  Dataset ds;
  FilterMatrix<double> f;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

Task make_task(FilterKind kind, Index n, double p, Index d, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.p = p;
  spec.d_in = d;
  spec.seed = seed;
  Task t;
  t.ds = generate_synthetic(spec);
  t.f = build_filter<double>(t.ds.graph, kind);
  t.train = make_samples(t.f, t.ds.features, t.ds.labels, t.ds.train);
  t.test = make_samples(t.f, t.ds.features, t.ds.labels, t.ds.test);
  return t;
}

}  // namespace

TEST_CASE("worked bound values") {
  CHECK(std::abs(beta_bound(worked(1)) - 0.001) <= 1e-12);
  CHECK(std::abs(beta_bound(worked(2)) - 0.0021) <= 1e-12);
  CHECK(beta_bound(worked(0)) == 0.0);
  const double expected = 0.002 + 1.4 * std::sqrt(std::log(10.0) / 200.0);
  CHECK(std::abs(gen_gap_bound(0.001, 100, 1.0, 0.1) - expected) <= 1e-12);
  CHECK(std::abs(gen_gap_bound(0.001, 100, 1.0, 0.1) - 0.1522177) <= 1e-7);
  CHECK(gen_gap_bound(0.0, 100, 0.0, 0.1) == 0.0);
  CHECK(gen_gap_bound(0.003, 50, 2.0, 1.0 - 1e-12) == doctest::Approx(0.006).epsilon(1e-5));
}

TEST_CASE("geometric sum against the explicit series") {
  for (double x : {0.0, 1e-9, 0.05, 0.7, 3.0}) {
    for (std::int64_t steps : {0, 1, 2, 7, 40}) {
      double series = 0;
      for (std::int64_t t = 0; t < steps; ++t) series += std::pow(1.0 + x, static_cast<double>(t));
      CHECK(geometric_sum(x, steps) == doctest::Approx(series).epsilon(1e-12));
    }
  }
}

TEST_CASE("beta bound monotonicity over a grid") {
  const BoundInputs base = worked(3);
  for (double eta : {0.01, 0.1, 0.5, 1.0}) {
    for (double lambda : {0.5, 1.0, 2.0, 4.0}) {
      for (std::int64_t steps : {1, 2, 5, 20}) {
        for (std::int64_t m : {10, 100, 1000}) {
          BoundInputs b = base;
          b.eta = eta;
          b.lambda = lambda;
          b.steps = steps;
          b.m = m;
          const double v = beta_bound(b);
          BoundInputs up = b;
          up.eta *= 1.5;
          CHECK(beta_bound(up) >= v);
          up = b;
          up.lambda *= 1.5;
          CHECK(beta_bound(up) >= v);
          up = b;
          up.steps += 1;
          CHECK(beta_bound(up) >= v);
          up = b;
          up.m *= 2;
          CHECK(beta_bound(up) < v);
        }
      }
    }
  }
}

TEST_CASE("beta bound grows with the complete-graph spectrum") {
  auto beta_for = [](Index n, std::int64_t steps) {
    const auto f = build_filter<double>(fixtures::complete(n), FilterKind::Unnormalized);
    BoundInputs b = worked(steps);
    b.eta = 0.01;
    b.lambda = lambda_max(f).lambda_max;
    b.source = LambdaSource::LambdaMax;
    return b;
  };
  // T = 1: the bound is exactly proportional to λ², so doubling N quadruples it.
  const double r1 = beta_bound(beta_for(20, 1)) / beta_bound(beta_for(10, 1));
  CHECK(r1 >= 4.0 * (1 - 1e-9));

  // Any T: β_m ≥ (α_ℓ α_σ / ν_σ) (η ν_ℓ ν_σ)^T N^{2T} / m.
  for (std::int64_t steps : {1, 2, 3, 5}) {
    for (Index n : {10, 20, 40}) {
      const BoundInputs b = beta_for(n, steps);
      const double floor = std::pow(b.eta * b.loss.nu * b.activation.nu, static_cast<double>(steps)) *
                           std::pow(static_cast<double>(n), 2.0 * static_cast<double>(steps)) *
                           b.loss.alpha * b.activation.alpha / b.activation.nu / static_cast<double>(b.m);
      CHECK(beta_bound(b) >= floor * (1 - 1e-9));
    }
  }
}

TEST_CASE("bound overflow is reported as infinity") {
  BoundInputs b = worked(100000);
  b.eta = 10;
  b.lambda = 100;
  CHECK(std::isinf(beta_bound(b)));
  CHECK(std::isinf(dtheta_expectation_bound(b)));
  CHECK(std::isinf(gen_gap_bound(beta_bound(b), 100, 1.0, 0.1)));
}

TEST_CASE("bound input validation") {
  BoundInputs b = worked(1);
  b.delta = 1.0;
  CHECK_THROWS_AS(beta_bound(b), std::invalid_argument);
  b = worked(1);
  b.m = 0;
  CHECK_THROWS_AS(beta_bound(b), std::invalid_argument);
  b = worked(1);
  b.eta = -0.1;
  CHECK_THROWS_AS(beta_bound(b), std::invalid_argument);
  CHECK_THROWS_AS(gen_gap_bound(0.1, 10, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gen_gap_bound(-0.1, 10, 1.0, 0.5), std::invalid_argument);
  CHECK(parse_lambda_source("lambda_max") == LambdaSource::LambdaMax);
  CHECK(to_string(parse_lambda_source("g_lambda")) == "g_lambda");
  CHECK_THROWS_AS(parse_lambda_source("rho"), std::invalid_argument);
}

TEST_CASE("expectation bound closed form") {
  BoundInputs b = worked(3);
  const double g = 2.0;
  const double x = 0.1 * 0.25 * 1.0 * g * g;
  const double expected = 2 * 0.1 * 0.25 * 1.0 * g / 100.0 * (1 + (1 + x) + (1 + x) * (1 + x));
  CHECK(dtheta_expectation_bound(b) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("loss cap covers every reachable output") {
  const Objective obj{ActivationKind::Elu1, Loss{}};
  const double cap = loss_bound_from_weights(obj, 1.5, 2.0);
  CHECK(cap == doctest::Approx(std::log1p(std::exp(3.0))).epsilon(1e-14));
  for (double u = -3.0; u <= 3.0; u += 0.01) {
    const double f = activate(obj.act, u);
    CHECK(obj.loss.value(f, 1) <= cap + 1e-15);
    CHECK(obj.loss.value(f, -1) <= cap + 1e-15);
  }
}

TEST_CASE("empirical gap on identical sets is zero") {
  const Task t = make_task(FilterKind::SymNormalized, 60, 0.08, 3, 1);
  SgdConfig cfg;
  cfg.epochs = 5;
  const TrainResult run = sgd_train(t.train, Objective{}, cfg, Vector<double>::Zero(3));
  GapSettings s;
  s.eta = cfg.eta;
  s.g_lambda = 1.0;
  s.lambda_max = 2.0;
  s.steps = run.steps;
  const GapReport rep = empirical_gap(run, t.train, t.train, Objective{}, s);
  REQUIRE(rep.gap.size() == 6);
  for (double g : rep.gap) CHECK(g == 0.0);
  CHECK(rep.beta <= rep.beta_lambda_max);
  CHECK(rep.gap_bound >= 0.0);
  CHECK(rep.ratio == 0.0);
  CHECK(rep.assumptions_hold);
}

TEST_CASE("empirical gap with frozen weights is constant") {
  const Task t = make_task(FilterKind::RandomWalk, 60, 0.08, 3, 2);
  SgdConfig cfg;
  cfg.eta = 0;
  cfg.epochs = 4;
  const TrainResult run = sgd_train(t.train, Objective{}, cfg, random_init(3, 4, 0.5));
  GapSettings s;
  s.eta = 0;
  s.g_lambda = 1.0;
  s.lambda_max = 1.0;
  s.steps = run.steps;
  const GapReport rep = empirical_gap(run, t.train, t.test, Objective{}, s);
  for (double g : rep.gap) CHECK(g == rep.gap.front());
  CHECK(rep.beta == 0.0);
  CHECK(rep.loss_bound > 0.0);
  CHECK_THROWS_AS(empirical_gap(run, t.train, {}, Objective{}, s), std::invalid_argument);
}

TEST_CASE("empirical stability trivial cases") {
  const Task t = make_task(FilterKind::SymNormalized, 50, 0.1, 3, 3);
  SgdConfig cfg;
  cfg.eta = 0.1;
  cfg.epochs = 2;
  const Vector<double> init = Vector<double>::Zero(3);

  std::vector<Perturbation> same{{0, t.train[0]}, {4, t.train[4]}};
  const auto eval = t.test;
  const StabilityEstimate a = empirical_stability(t.train, same, eval, Objective{}, cfg, 3, init);
  CHECK(a.beta_hat == 0.0);
  CHECK(a.runs == 3);
  CHECK(a.perturbations == 2);

  SgdConfig frozen = cfg;
  frozen.eta = 0;
  const StabilityEstimate b = empirical_stability(t.train, t.test, Objective{}, frozen, 4, 2, init);
  CHECK(b.beta_hat == 0.0);
  CHECK(b.evaluation_points == static_cast<Index>(t.train.size() + t.test.size()));

  CHECK_THROWS_AS(empirical_stability(t.train, {}, Objective{}, cfg, 1, 1, init), std::invalid_argument);
  CHECK_THROWS_AS(empirical_stability(t.train, t.test, Objective{}, cfg, 0, 1, init), std::invalid_argument);
  CHECK_THROWS_AS(empirical_stability(t.train, t.test, Objective{}, cfg, 1, 0, init), std::invalid_argument);
}

TEST_CASE("empirical stability stays under twice the bound") {
  for (FilterKind kind : {FilterKind::SymNormalized, FilterKind::RandomWalk, FilterKind::Unnormalized}) {
    const Task t = make_task(kind, 80, 0.06, 4, 7);
    SgdConfig cfg;
    cfg.eta = 0.1;
    cfg.epochs = 3;
    const Objective obj{};
    const StabilityEstimate est = empirical_stability(t.train, t.test, obj, cfg, 4, 3, Vector<double>::Zero(4));
    BoundInputs b;
    b.eta = cfg.eta;
    b.loss = derive_constants(obj.loss);
    b.activation = derive_constants(obj.act);
    b.lambda = g_lambda_empirical(t.f, t.ds.features).value;
    b.steps = cfg.epochs * static_cast<std::int64_t>(t.train.size());
    b.m = static_cast<std::int64_t>(t.train.size());
    CHECK(est.beta_hat > 0.0);
    CHECK(est.beta_hat <= 2 * beta_bound(b) + 1e-9);
  }
}
