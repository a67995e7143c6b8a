#pragma once

#include "gcnstab/activation.hpp"
#include "gcnstab/ego.hpp"
#include "gcnstab/graph.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gcnstab {

enum class SequenceMode { UniformWithReplacement, PermutationPerEpoch };

std::string_view to_string(SequenceMode mode);
SequenceMode parse_sequence_mode(std::string_view name);

struct SgdConfig {
  double eta = 1.0;
  int epochs = 100;
  std::uint64_t seed = 0;
  SequenceMode mode = SequenceMode::PermutationPerEpoch;

  void validate() const;
};

/// One training point z = (ego-graph, label). Only the aggregated feature vector of
/// the ego-graph enters the model, so that is what is kept. Labels are stored as ±1.
struct Sample {
  Vector<double> aggregate;
  int label = 1;
  Index node = -1;
};

Sample make_sample(const EgoGraph<double>& ego, int label);

/// Samples for the given nodes, aggregated under `f`.
std::vector<Sample> make_samples(const FilterMatrix<double>& f, const FeatureMatrix<double>& x,
                                 std::span<const int> labels, std::span<const Index> nodes);

struct Objective {
  ActivationKind act = ActivationKind::Elu1;
  Loss loss;

  double loss_at(const Sample& z, const Vector<double>& theta) const;
  Vector<double> grad_at(const Sample& z, const Vector<double>& theta) const;
  int predict(const Sample& z, const Vector<double>& theta) const;
};

double mean_loss(std::span<const Sample> data, const Vector<double>& theta, const Objective& obj);
double error_rate(std::span<const Sample> data, const Vector<double>& theta, const Objective& obj);

/// Sample indices i_t in [0, m) for `steps` SGD steps. Uniform mode draws with
/// replacement; permutation mode concatenates fresh shuffles of {0..m-1}.
std::vector<Index> make_sequence(Index m, Index steps, std::uint64_t seed, SequenceMode mode);

/// Seeded uniform(-scale, scale) initialization.
Vector<double> random_init(Index dim, std::uint64_t seed, double scale = 0.01);

struct TrainResult {
  Vector<double> theta;
  /// Index 0 is the initialization; index k is the state after epoch k.
  std::vector<double> epoch_loss;
  std::vector<Vector<double>> epoch_theta;
  Index steps = 0;
  bool diverged = false;
  /// 1-based SGD step at which weights or loss became non-finite.
  Index diverged_step = -1;
};

/// Plain SGD, batch size one: θ_{t+1} = θ_t − η ∇ℓ(f(x_{i_t}, θ_t), y_{i_t}) for
/// T = epochs × m steps. Stops at the first non-finite weight or loss.
TrainResult sgd_train(std::span<const Sample> data, const Objective& obj, const SgdConfig& cfg,
                      const Vector<double>& init);

/// S^i: training sample `index` replaced by `replacement`.
struct Perturbation {
  Index index = 0;
  Sample replacement;
};

enum class Branch { Same, Differing };

std::string_view to_string(Branch b);

/// One coupled step. Lemma sides are evaluated at the pre-step weights; the
/// difference and envelope are the post-step values.
struct TwinStep {
  Index step = 0;
  Branch branch = Branch::Same;
  double delta_theta = 0;
  double lemma_lhs = 0;
  double lemma_rhs = 0;
  double envelope = 0;
};

struct TwinOptions {
  /// g_λ used on the lemma right-hand sides; defaults to the sup of ‖a‖ over the
  /// union of both training sets.
  std::optional<double> g_lambda;
  double tol = 1e-9;
  bool record_steps = true;
};

struct TwinTrace {
  std::vector<TwinStep> steps;
  /// ‖θ_S − θ_{S^i}‖₂ after each epoch; index 0 is the shared initialization.
  std::vector<double> epoch_delta;
  Vector<double> theta_s;
  Vector<double> theta_si;

  double g_lambda = 0;
  Constants act_constants;
  Constants loss_constants;
  /// η ν_ℓ ν_σ g_λ²
  double growth = 0;
  /// 2 η ν_ℓ α_σ g_λ
  double kick = 0;

  Index same_steps = 0;
  Index differing_steps = 0;
  Index same_violations = 0;
  Index differing_violations = 0;
  Index envelope_violations = 0;

  bool diverged = false;
  Index diverged_step = -1;
};

/// Trains on S and S^i in lockstep with one shared index sequence and shared θ_0,
/// checking the same-sample and differing-sample gradient bounds at every step and
/// propagating the envelope b_{t+1} = (1 + growth) b_t + [i_t = i] kick, b_0 = 0.
TwinTrace twin_train(std::span<const Sample> data, const Perturbation& pert, const Objective& obj,
                     const SgdConfig& cfg, const Vector<double>& init, const TwinOptions& opts = {});

/// One envelope step.
inline double envelope_next(double b, double growth, double kick, bool differing) {
  return (1.0 + growth) * b + (differing ? kick : 0.0);
}

}  // namespace gcnstab
