#include "gcnstab/trainer.hpp"
#include "gcnstab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace gcnstab {

std::string_view to_string(SequenceMode mode) {
  return mode == SequenceMode::UniformWithReplacement ? "uniform" : "permutation";
}

SequenceMode parse_sequence_mode(std::string_view name) {
  if (name == "uniform") return SequenceMode::UniformWithReplacement;
  if (name == "permutation") return SequenceMode::PermutationPerEpoch;
  throw std::invalid_argument("unknown sequence mode '" + std::string(name) + "'");
}

std::string_view to_string(Branch b) { return b == Branch::Same ? "same" : "differing"; }

void SgdConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("learning rate must be finite and non-negative");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
}

Sample make_sample(const EgoGraph<double>& ego, int label) { return Sample{ego.aggregate(), label, ego.center}; }

std::vector<Sample> make_samples(const FilterMatrix<double>& f, const FeatureMatrix<double>& x,
                                 std::span<const int> labels, std::span<const Index> nodes) {
  if (static_cast<Index>(labels.size()) != f.size()) throw std::invalid_argument("make_samples: label count mismatch");
  const FeatureMatrix<double> agg = aggregate_features(f, x);
  std::vector<Sample> out;
  out.reserve(nodes.size());
  for (Index node : nodes) {
    if (node < 0 || node >= f.size()) throw std::out_of_range("make_samples: node index out of range");
    out.push_back(Sample{agg.row(node).transpose(), labels[static_cast<std::size_t>(node)], node});
  }
  return out;
}

double Objective::loss_at(const Sample& z, const Vector<double>& theta) const {
  return loss_value<double>(z.aggregate, theta, act, loss, loss.from_signed(z.label));
}

Vector<double> Objective::grad_at(const Sample& z, const Vector<double>& theta) const {
  return loss_grad<double>(z.aggregate, theta, act, loss, loss.from_signed(z.label));
}

int Objective::predict(const Sample& z, const Vector<double>& theta) const {
  return loss.predict(activate(act, z.aggregate.dot(theta)));
}

double mean_loss(std::span<const Sample> data, const Vector<double>& theta, const Objective& obj) {
  if (data.empty()) throw std::invalid_argument("mean_loss: empty sample set");
  double sum = 0;
  for (const Sample& z : data) sum += obj.loss_at(z, theta);
  return sum / static_cast<double>(data.size());
}

double error_rate(std::span<const Sample> data, const Vector<double>& theta, const Objective& obj) {
  if (data.empty()) throw std::invalid_argument("error_rate: empty sample set");
  Index wrong = 0;
  for (const Sample& z : data) {
    if (obj.predict(z, theta) != obj.loss.from_signed(z.label)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::vector<Index> make_sequence(Index m, Index steps, std::uint64_t seed, SequenceMode mode) {
  if (m < 1) throw std::invalid_argument("make_sequence: need at least one sample");
  if (steps < 0) throw std::invalid_argument("make_sequence: negative step count");
  std::mt19937_64 rng(seed);
  std::vector<Index> seq;
  seq.reserve(static_cast<std::size_t>(steps));
  if (mode == SequenceMode::UniformWithReplacement) {
    std::uniform_int_distribution<Index> pick(0, m - 1);
    for (Index t = 0; t < steps; ++t) seq.push_back(pick(rng));
    return seq;
  }
  std::vector<Index> perm(static_cast<std::size_t>(m));
  while (static_cast<Index>(seq.size()) < steps) {
    std::iota(perm.begin(), perm.end(), Index(0));
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i : perm) {
      if (static_cast<Index>(seq.size()) == steps) break;
      seq.push_back(i);
    }
  }
  return seq;
}

Vector<double> random_init(Index dim, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector<double> v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = dist(rng);
  return v;
}

namespace {

void check_data(std::span<const Sample> data, const Vector<double>& init, const Objective& obj) {
  if (data.empty()) throw std::invalid_argument("training set is empty");
  for (const Sample& z : data) {
    if (z.aggregate.size() != init.size()) throw std::invalid_argument("sample dimension does not match weights");
    obj.loss.check_label(obj.loss.from_signed(z.label));
  }
  if (!init.allFinite()) throw std::invalid_argument("initial weights are not finite");
}

}  // namespace

TrainResult sgd_train(std::span<const Sample> data, const Objective& obj, const SgdConfig& cfg,
                      const Vector<double>& init) {
  cfg.validate();
  check_data(data, init, obj);

  const auto m = static_cast<Index>(data.size());
  const Index total = m * cfg.epochs;
  const auto seq = make_sequence(m, total, cfg.seed, cfg.mode);

  TrainResult res;
  res.theta = init;
  res.epoch_theta.push_back(init);
  res.epoch_loss.push_back(mean_loss(data, init, obj));

  for (Index t = 0; t < total; ++t) {
    const Sample& z = data[static_cast<std::size_t>(seq[static_cast<std::size_t>(t)])];
    res.theta -= cfg.eta * obj.grad_at(z, res.theta);
    res.steps = t + 1;
    if (!res.theta.allFinite()) {
      res.diverged = true;
      res.diverged_step = t + 1;
      return res;
    }
    if ((t + 1) % m == 0) {
      const double loss = mean_loss(data, res.theta, obj);
      res.epoch_theta.push_back(res.theta);
      res.epoch_loss.push_back(loss);
      if (!std::isfinite(loss)) {
        res.diverged = true;
        res.diverged_step = t + 1;
        return res;
      }
    }
  }
  return res;
}

TwinTrace twin_train(std::span<const Sample> data, const Perturbation& pert, const Objective& obj,
                     const SgdConfig& cfg, const Vector<double>& init, const TwinOptions& opts) {
  cfg.validate();
  check_data(data, init, obj);
  const auto m = static_cast<Index>(data.size());
  if (pert.index < 0 || pert.index >= m) throw std::out_of_range("perturbation index outside the training set");
  if (pert.replacement.aggregate.size() != init.size()) {
    throw std::invalid_argument("replacement sample dimension does not match weights");
  }
  obj.loss.check_label(obj.loss.from_signed(pert.replacement.label));

  TwinTrace tr;
  tr.act_constants = derive_constants(obj.act);
  tr.loss_constants = derive_constants(obj.loss);
  if (opts.g_lambda) {
    tr.g_lambda = *opts.g_lambda;
  } else {
    tr.g_lambda = pert.replacement.aggregate.norm();
    for (const Sample& z : data) tr.g_lambda = std::max(tr.g_lambda, z.aggregate.norm());
  }
  const double nu_l = tr.loss_constants.nu;
  const double nu_s = tr.act_constants.nu;
  const double alpha_s = tr.act_constants.alpha;
  const double g = tr.g_lambda;
  tr.growth = cfg.eta * nu_l * nu_s * g * g;
  tr.kick = 2.0 * cfg.eta * nu_l * alpha_s * g;
  const double same_coeff = nu_l * nu_s * g * g;
  const double diff_rhs = 2.0 * nu_l * alpha_s * g;

  const Index total = m * cfg.epochs;
  const auto seq = make_sequence(m, total, cfg.seed, cfg.mode);

  Vector<double> ts = init;
  Vector<double> tp = init;
  double envelope = 0;
  tr.epoch_delta.push_back(0.0);
  if (opts.record_steps) tr.steps.reserve(static_cast<std::size_t>(total));

  for (Index t = 0; t < total; ++t) {
    const Index i = seq[static_cast<std::size_t>(t)];
    const bool differing = (i == pert.index);
    const Sample& zs = data[static_cast<std::size_t>(i)];
    const Sample& zp = differing ? pert.replacement : zs;

    const Vector<double> gs = obj.grad_at(zs, ts);
    const Vector<double> gp = obj.grad_at(zp, tp);

    TwinStep st;
    st.step = t + 1;
    st.branch = differing ? Branch::Differing : Branch::Same;
    st.lemma_lhs = (gs - gp).norm();
    st.lemma_rhs = differing ? diff_rhs : same_coeff * (ts - tp).norm();
    if (differing) {
      ++tr.differing_steps;
      if (st.lemma_lhs > st.lemma_rhs + opts.tol) ++tr.differing_violations;
    } else {
      ++tr.same_steps;
      if (st.lemma_lhs > st.lemma_rhs + opts.tol) ++tr.same_violations;
    }

    ts -= cfg.eta * gs;
    tp -= cfg.eta * gp;
    envelope = envelope_next(envelope, tr.growth, tr.kick, differing);
    st.delta_theta = (ts - tp).norm();
    st.envelope = envelope;
    if (st.delta_theta > envelope + opts.tol) ++tr.envelope_violations;
    if (opts.record_steps) tr.steps.push_back(st);

    if (!ts.allFinite() || !tp.allFinite()) {
      tr.diverged = true;
      tr.diverged_step = t + 1;
      break;
    }
    if ((t + 1) % m == 0) tr.epoch_delta.push_back(st.delta_theta);
  }
  tr.theta_s = std::move(ts);
  tr.theta_si = std::move(tp);
  return tr;
}

}  // namespace gcnstab
