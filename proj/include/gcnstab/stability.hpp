#pragma once

#include "gcnstab/activation.hpp"
#include "gcnstab/trainer.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gcnstab {

enum class LambdaSource { GLambda, LambdaMax };

std::string_view to_string(LambdaSource s);
LambdaSource parse_lambda_source(std::string_view name);

struct BoundInputs {
  double eta = 1.0;
  Constants loss;        // (α_ℓ, ν_ℓ)
  Constants activation;  // (α_σ, ν_σ)
  double lambda = 0;
  LambdaSource source = LambdaSource::GLambda;
  std::int64_t steps = 0;  // T
  std::int64_t m = 1;
  double loss_bound = 0;  // M
  double delta = 0.1;

  void validate() const;
};

/// Σ_{t=1}^{T} (1 + x)^{t-1}, evaluated as expm1(T log1p(x)) / x (and T at x = 0).
double geometric_sum(double x, std::int64_t steps);

/// β_m ≤ η α_ℓ α_σ ν_ℓ λ² Σ_{t=1}^{T} (1 + η ν_ℓ ν_σ λ²)^{t-1} / m.
/// Returns +inf when the value overflows; the bound is then vacuous.
double beta_bound(const BoundInputs& b);

/// 2β + (4mβ + M) sqrt(log(1/δ) / (2m)).
double gen_gap_bound(double beta, std::int64_t m, double loss_bound, double delta);

/// Bound on E‖θ_{S,T} − θ_{S^i,T}‖: (2η ν_ℓ α_σ g / m) Σ_{t=1}^{T} (1 + η ν_ℓ ν_σ g²)^{t-1}.
double dtheta_expectation_bound(const BoundInputs& b);

/// Loss cap M after training: the loss at the largest |f| reachable with
/// |a·θ| ≤ g ‖θ‖ for the largest recorded ‖θ‖.
double loss_bound_from_weights(const Objective& obj, double g, double max_theta_norm);

struct GapSettings {
  double eta = 1.0;
  double g_lambda = 0;
  double lambda_max = 0;
  std::int64_t steps = 0;
  double delta = 0.1;
  /// Overrides the weight-derived M when set (> 0).
  double loss_bound = 0;
};

struct GapReport {
  std::vector<double> train_loss;
  std::vector<double> test_loss;
  std::vector<double> gap;
  std::vector<double> train_err01;
  std::vector<double> test_err01;

  double loss_bound = 0;  // M
  double beta = 0;        // with g_λ
  double gap_bound = 0;   // with g_λ
  double beta_lambda_max = 0;
  double gap_bound_lambda_max = 0;
  /// final gap / gap_bound
  double ratio = 0;
  bool assumptions_hold = true;
};

/// Per-epoch |mean train loss − mean test loss| along a training run, plus the
/// closed-form bounds for the realized run.
GapReport empirical_gap(const TrainResult& run, std::span<const Sample> train, std::span<const Sample> test,
                        const Objective& obj, const GapSettings& settings);

struct StabilityEstimate {
  /// max over perturbations and evaluation points of |mean_R ℓ(A_S, z) − mean_R ℓ(A_{S^i}, z)|
  double beta_hat = 0;
  std::vector<double> per_perturbation;
  Index perturbations = 0;
  Index runs = 0;
  Index evaluation_points = 0;
  Index diverged_runs = 0;
};

/// Sampled estimate of the replacement-form uniform stability. Run r of every
/// perturbation uses seed cfg.seed + r for both trajectories.
StabilityEstimate empirical_stability(std::span<const Sample> train, std::span<const Perturbation> perturbations,
                                      std::span<const Sample> evaluation, const Objective& obj, const SgdConfig& cfg,
                                      Index runs, const Vector<double>& init);

/// Perturbs training indices 0..P-1, replacing index p with held-out sample
/// p mod |held_out|, and evaluates on train ∪ held_out.
StabilityEstimate empirical_stability(std::span<const Sample> train, std::span<const Sample> held_out,
                                      const Objective& obj, const SgdConfig& cfg, Index perturbations, Index runs,
                                      const Vector<double>& init);

}  // namespace gcnstab
