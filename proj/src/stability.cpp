#include "gcnstab/stability.hpp"
#include "gcnstab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gcnstab {

std::string_view to_string(LambdaSource s) { return s == LambdaSource::GLambda ? "g_lambda" : "lambda_max"; }

LambdaSource parse_lambda_source(std::string_view name) {
  if (name == "g_lambda") return LambdaSource::GLambda;
  if (name == "lambda_max") return LambdaSource::LambdaMax;
  throw std::invalid_argument("unknown lambda source '" + std::string(name) + "'");
}

void BoundInputs::validate() const {
  auto nonneg = [](double v) { return v >= 0.0 && !std::isnan(v); };
  if (!nonneg(eta) || !nonneg(loss.alpha) || !nonneg(loss.nu) || !nonneg(activation.alpha) ||
      !nonneg(activation.nu) || !nonneg(lambda) || !nonneg(loss_bound)) {
    throw std::invalid_argument("bound inputs must be non-negative");
  }
  if (steps < 0) throw std::invalid_argument("step count must be non-negative");
  if (m < 1) throw std::invalid_argument("training-sample count must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

double geometric_sum(double x, std::int64_t steps) {
  if (steps <= 0) return 0.0;
  if (x == 0.0) return static_cast<double>(steps);
  return std::expm1(static_cast<double>(steps) * std::log1p(x)) / x;
}

double beta_bound(const BoundInputs& b) {
  b.validate();
  const double l2 = b.lambda * b.lambda;
  const double x = b.eta * b.loss.nu * b.activation.nu * l2;
  const double prefactor = b.eta * b.loss.alpha * b.activation.alpha * b.loss.nu * l2;
  if (prefactor == 0.0 || b.steps == 0) return 0.0;
  const double value = prefactor * geometric_sum(x, b.steps) / static_cast<double>(b.m);
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

double gen_gap_bound(double beta, std::int64_t m, double loss_bound, double delta) {
  if (!(beta >= 0.0) || !(loss_bound >= 0.0)) throw std::invalid_argument("beta and M must be non-negative");
  if (m < 1) throw std::invalid_argument("training-sample count must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const auto md = static_cast<double>(m);
  return 2.0 * beta + (4.0 * md * beta + loss_bound) * std::sqrt(std::log(1.0 / delta) / (2.0 * md));
}

double dtheta_expectation_bound(const BoundInputs& b) {
  b.validate();
  const double g = b.lambda;
  const double x = b.eta * b.loss.nu * b.activation.nu * g * g;
  const double prefactor = 2.0 * b.eta * b.loss.nu * b.activation.alpha * g / static_cast<double>(b.m);
  if (prefactor == 0.0 || b.steps == 0) return 0.0;
  const double value = prefactor * geometric_sum(x, b.steps);
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

double loss_bound_from_weights(const Objective& obj, double g, double max_theta_norm) {
  const double reach = g * max_theta_norm;
  const double lo = activate(obj.act, -reach);
  const double hi = activate(obj.act, reach);
  const int pos = obj.loss.from_signed(1);
  const int neg = obj.loss.from_signed(-1);
  // σ is increasing and ℓ(·, y) is monotone in f, so the extremes sit at the ends.
  return std::max({obj.loss.value(lo, pos), obj.loss.value(hi, pos), obj.loss.value(lo, neg), obj.loss.value(hi, neg)});
}

GapReport empirical_gap(const TrainResult& run, std::span<const Sample> train, std::span<const Sample> test,
                        const Objective& obj, const GapSettings& settings) {
  if (train.empty() || test.empty()) throw std::invalid_argument("empirical_gap: empty split");
  GapReport rep;
  double max_norm = 0;
  for (const auto& theta : run.epoch_theta) {
    const double tl = mean_loss(train, theta, obj);
    const double vl = mean_loss(test, theta, obj);
    rep.train_loss.push_back(tl);
    rep.test_loss.push_back(vl);
    rep.gap.push_back(std::abs(tl - vl));
    if (theta.allFinite()) {
      rep.train_err01.push_back(error_rate(train, theta, obj));
      rep.test_err01.push_back(error_rate(test, theta, obj));
      max_norm = std::max(max_norm, theta.norm());
    } else {
      rep.train_err01.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.test_err01.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }

  rep.assumptions_hold = obj.loss.satisfies_assumptions();
  const double g_sup = std::max(settings.g_lambda, settings.lambda_max);
  rep.loss_bound = settings.loss_bound > 0 ? settings.loss_bound : loss_bound_from_weights(obj, g_sup, max_norm);

  BoundInputs b;
  b.eta = settings.eta;
  b.loss = derive_constants(obj.loss);
  b.activation = derive_constants(obj.act);
  b.steps = settings.steps;
  b.m = static_cast<std::int64_t>(train.size());
  b.loss_bound = rep.loss_bound;
  b.delta = settings.delta;

  b.lambda = settings.g_lambda;
  b.source = LambdaSource::GLambda;
  rep.beta = beta_bound(b);
  rep.gap_bound = gen_gap_bound(rep.beta, b.m, b.loss_bound, b.delta);

  b.lambda = settings.lambda_max;
  b.source = LambdaSource::LambdaMax;
  rep.beta_lambda_max = beta_bound(b);
  rep.gap_bound_lambda_max = gen_gap_bound(rep.beta_lambda_max, b.m, b.loss_bound, b.delta);

  rep.ratio = rep.gap_bound > 0 ? rep.gap.back() / rep.gap_bound : 0.0;
  return rep;
}

StabilityEstimate empirical_stability(std::span<const Sample> train, std::span<const Perturbation> perturbations,
                                      std::span<const Sample> evaluation, const Objective& obj, const SgdConfig& cfg,
                                      Index runs, const Vector<double>& init) {
  if (perturbations.empty()) throw std::invalid_argument("empirical_stability: need at least one perturbation");
  if (runs < 1) throw std::invalid_argument("empirical_stability: need at least one run");
  if (evaluation.empty()) throw std::invalid_argument("empirical_stability: no evaluation points");
  cfg.validate();

  const std::size_t P = perturbations.size();
  const auto R = static_cast<std::size_t>(runs);
  const std::size_t Z = evaluation.size();

  // diff[(p*R + r)*Z + z] = ℓ(A_S, z) − ℓ(A_{S^i}, z) for run r of perturbation p
  std::vector<double> diff(P * R * Z, 0.0);
  std::vector<char> diverged(P * R, 0);

  parallel_for(P * R, [&](std::size_t job) {
    const std::size_t p = job / R;
    const std::size_t r = job % R;
    SgdConfig c = cfg;
    c.seed = cfg.seed + r;
    TwinOptions opts;
    opts.record_steps = false;
    const TwinTrace tr = twin_train(train, perturbations[p], obj, c, init, opts);
    if (tr.diverged) diverged[job] = 1;
    for (std::size_t z = 0; z < Z; ++z) {
      diff[job * Z + z] = obj.loss_at(evaluation[z], tr.theta_s) - obj.loss_at(evaluation[z], tr.theta_si);
    }
  });

  StabilityEstimate est;
  est.perturbations = static_cast<Index>(P);
  est.runs = runs;
  est.evaluation_points = static_cast<Index>(Z);
  est.per_perturbation.assign(P, 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t z = 0; z < Z; ++z) {
      double mean = 0;
      for (std::size_t r = 0; r < R; ++r) mean += diff[(p * R + r) * Z + z];
      mean /= static_cast<double>(R);
      est.per_perturbation[p] = std::max(est.per_perturbation[p], std::abs(mean));
    }
    est.beta_hat = std::max(est.beta_hat, est.per_perturbation[p]);
  }
  est.diverged_runs = static_cast<Index>(std::count(diverged.begin(), diverged.end(), 1));
  if (est.diverged_runs > 0) est.beta_hat = std::numeric_limits<double>::infinity();
  return est;
}

StabilityEstimate empirical_stability(std::span<const Sample> train, std::span<const Sample> held_out,
                                      const Objective& obj, const SgdConfig& cfg, Index perturbations, Index runs,
                                      const Vector<double>& init) {
  if (held_out.empty()) throw std::invalid_argument("empirical_stability: held-out pool is empty");
  if (perturbations < 1) throw std::invalid_argument("empirical_stability: need at least one perturbation");
  if (perturbations > static_cast<Index>(train.size())) {
    throw std::invalid_argument("empirical_stability: more perturbations than training samples");
  }
  std::vector<Perturbation> perts;
  for (Index p = 0; p < perturbations; ++p) {
    perts.push_back({p, held_out[static_cast<std::size_t>(p) % held_out.size()]});
  }
  std::vector<Sample> eval(train.begin(), train.end());
  eval.insert(eval.end(), held_out.begin(), held_out.end());
  return empirical_stability(train, perts, eval, obj, cfg, runs, init);
}

}  // namespace gcnstab
