#include "gcnstab/cli.hpp"
#include "gcnstab/csv.hpp"
#include "gcnstab/datasets.hpp"
#include "gcnstab/ego.hpp"
#include "gcnstab/manifest.hpp"
#include "gcnstab/spectral.hpp"
#include "gcnstab/stability.hpp"
#include "gcnstab/trainer.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gcnstab::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Options {
  std::string data;
  std::string out;
  std::string filter = "symnorm";
  std::vector<std::string> filters;
  std::string act = "elu";
  std::string loss = "logistic";
  double epsilon = 1e-6;
  double eta = 1.0;
  int epochs = 100;
  std::uint64_t seed = 0;
  std::string mode = "permutation";
  std::string init = "zero";
  std::string normalize = "on";
  Index perturb_index = 0;
  Index replacement_node = -1;
  Index m = 0;
  double delta = 0.1;
  std::int64_t steps = 0;
  double loss_bound = 0;
  double lambda = 0;
  std::string lambda_source = "g_lambda";
  double tol = 1e-10;
  int max_iters = 5000;
  double interlace_tol = 1e-9;
  Index perturbations = 5;
  Index runs = 5;

  std::string kind = "er";
  Index n = 100;
  double p = 0.05;
  Index d = 4;
  double noise = 0.0;
  double train_fraction = 0.6;
};

/// Divergence is a result, not an error: the partial artifact is still written.
struct Outcome {
  bool diverged = false;
};

double finite_or_nan(double v) { return std::isfinite(v) ? v : kNaN; }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Session {
 public:
  Session(std::string name, const std::vector<std::string>& args, const Options& opt, std::ostream& out)
      : opt_(opt), out_(out) {
    manifest_["subcommand"] = std::move(name);
    manifest_["argv"] = args;
  }

  json& manifest() { return manifest_; }
  bool wrote_nan() const { return wrote_nan_; }
  const Options& opt() const { return opt_; }

  void record_inputs(const std::string& dir) {
    json inputs = json::object();
    for (const char* file : {"graph.tsv", "features.csv", "labels.csv", "split.json"}) {
      const auto path = (std::filesystem::path(dir) / file).string();
      inputs[file] = git_blob_id(path);
    }
    manifest_["inputs"] = {{"dir", dir}, {"blobs", inputs}};
  }

  CsvStats csv(const std::vector<CsvRow>& rows, const std::vector<std::string>& schema) {
    const CsvStats stats = opt_.out.empty() ? write_csv(out_, rows, schema) : emit_csv(rows, schema, opt_.out);
    if (!opt_.out.empty()) outputs_.push_back(opt_.out);
    wrote_nan_ = wrote_nan_ || stats.had_nan;
    return stats;
  }

  void json_out(const json& doc) {
    if (opt_.out.empty()) {
      out_ << doc.dump(2) << '\n';
      return;
    }
    write_json_file(doc, opt_.out);
    outputs_.push_back(opt_.out);
  }

  void finish(int exit_code) {
    if (opt_.out.empty()) return;
    manifest_["outputs"] = outputs_;
    manifest_["exit_code"] = exit_code;
    write_json_file(manifest_, manifest_path_for(opt_.out));
  }

  void add_output(const std::string& path) { outputs_.push_back(path); }

 private:
  Options opt_;
  std::ostream& out_;
  json manifest_;
  std::vector<std::string> outputs_;
  bool wrote_nan_ = false;
};

Loss make_loss(const Options& o) {
  Loss l;
  l.kind = parse_loss(o.loss);
  l.epsilon = o.epsilon;
  if (!(l.epsilon > 0.0 && l.epsilon < 0.5)) throw std::invalid_argument("--epsilon must lie in (0, 0.5)");
  return l;
}

SgdConfig make_sgd(const Options& o) {
  SgdConfig c;
  c.eta = o.eta;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.mode = parse_sequence_mode(o.mode);
  c.validate();
  return c;
}

PowerOptions make_power(const Options& o) {
  PowerOptions p;
  p.tol = o.tol;
  p.max_iters = o.max_iters;
  p.seed = o.seed;
  if (!(p.tol > 0.0)) throw std::invalid_argument("--tol must be positive");
  if (p.max_iters < 1) throw std::invalid_argument("--max-iters must be at least 1");
  return p;
}

Dataset load(Session& s) {
  const Options& o = s.opt();
  if (o.data.empty()) throw std::invalid_argument("--data is required");
  Dataset ds = load_canonical(o.data, o.normalize == "on");
  s.record_inputs(o.data);
  return ds;
}

/// Everything a training-style subcommand needs.
struct Context {
  Dataset ds;
  FilterMatrix<double> f;
  Objective obj;
  SgdConfig cfg;
  std::vector<Index> train_nodes;
  std::vector<Sample> train;
  std::vector<Sample> test;
  Vector<double> init;
  GLambda<double> g;
};

Context make_context(Session& s) {
  const Options& o = s.opt();
  Context c;
  c.ds = load(s);
  c.f = build_filter<double>(c.ds.graph, parse_filter_kind(o.filter));
  c.obj.act = parse_activation(o.act);
  c.obj.loss = make_loss(o);
  c.cfg = make_sgd(o);

  c.train_nodes = c.ds.train;
  if (o.m > 0) {
    if (o.m > static_cast<Index>(c.train_nodes.size())) {
      throw std::invalid_argument("--m exceeds the training split (" + std::to_string(c.train_nodes.size()) + ")");
    }
    c.train_nodes.resize(static_cast<std::size_t>(o.m));
  }
  if (c.train_nodes.empty()) throw std::invalid_argument("training split is empty");
  c.train = make_samples(c.f, c.ds.features, c.ds.labels, c.train_nodes);
  c.test = make_samples(c.f, c.ds.features, c.ds.labels, c.ds.test);

  if (o.init == "zero") {
    c.init = Vector<double>::Zero(c.ds.feature_dim());
  } else if (o.init == "uniform") {
    c.init = random_init(c.ds.feature_dim(), o.seed);
  } else {
    throw std::invalid_argument("--init must be zero or uniform");
  }

  c.g = g_lambda_empirical(c.f, c.ds.features, 1e-9, make_power(o));

  const Constants ac = derive_constants(c.obj.act);
  const Constants lc = derive_constants(c.obj.loss);
  json& man = s.manifest();
  man["flags"] = {{"data", o.data},         {"filter", o.filter}, {"act", o.act},     {"loss", o.loss},
                  {"epsilon", o.epsilon},   {"eta", o.eta},       {"epochs", o.epochs}, {"seed", o.seed},
                  {"mode", o.mode},         {"init", o.init},     {"normalize", o.normalize},
                  {"m", static_cast<std::int64_t>(c.train_nodes.size())}};
  man["constants"] = {{"alpha_sigma", ac.alpha}, {"nu_sigma", ac.nu}, {"alpha_ell", lc.alpha}, {"nu_ell", lc.nu}};
  man["g_lambda"] = c.g.value;
  man["lambda_max"] = c.g.lambda_max;
  man["features_normalized"] = c.g.features_normalized;
  man["assumptions_hold"] = c.obj.loss.satisfies_assumptions();
  return c;
}

std::int64_t nominal_steps(const Context& c) {
  return static_cast<std::int64_t>(c.cfg.epochs) * static_cast<std::int64_t>(c.train.size());
}

std::vector<FilterKind> filter_list(const Options& o) {
  std::vector<FilterKind> kinds;
  if (o.filters.empty()) return {FilterKind::Unnormalized, FilterKind::SymNormalized, FilterKind::RandomWalk};
  for (const auto& name : o.filters) kinds.push_back(parse_filter_kind(name));
  return kinds;
}

// ---- subcommands ---------------------------------------------------------------

Outcome cmd_synth(Session& s) {
  const Options& o = s.opt();
  if (o.out.empty()) throw std::invalid_argument("synth needs --out DIR");
  SyntheticSpec spec;
  spec.kind = parse_synthetic_kind(o.kind);
  spec.n = o.n;
  spec.p = o.p;
  spec.d_in = o.d;
  spec.seed = o.seed;
  spec.teacher_noise = o.noise;
  spec.train_fraction = o.train_fraction;
  const Dataset ds = generate_synthetic(spec);
  save_canonical(ds, o.out);

  json& man = s.manifest();
  man["flags"] = {{"kind", o.kind}, {"n", o.n},         {"p", o.p},
                  {"d", o.d},       {"seed", o.seed},   {"noise", o.noise},
                  {"train_fraction", o.train_fraction}};
  man["nodes"] = ds.num_nodes();
  man["edges"] = ds.graph.num_edges();
  man["train"] = ds.train.size();
  man["test"] = ds.test.size();
  if (ds.teacher) man["teacher"] = std::vector<double>(ds.teacher->data(), ds.teacher->data() + ds.teacher->size());
  json blobs = json::object();
  for (const char* file : {"graph.tsv", "features.csv", "labels.csv", "split.json"}) {
    const auto path = (std::filesystem::path(o.out) / file).string();
    blobs[file] = git_blob_id(path);
    s.add_output(path);
  }
  man["output_blobs"] = blobs;
  return {};
}

Outcome cmd_spectra(Session& s) {
  const Options& o = s.opt();
  const Dataset ds = load(s);
  const PowerOptions popt = make_power(o);
  std::vector<CsvRow> rows;
  json per_kind = json::object();
  bool unconverged = false;
  for (FilterKind kind : filter_list(o)) {
    const auto f = build_filter<double>(ds.graph, kind);
    const auto r = lambda_max(f, popt);
    rows.push_back({std::string(to_string(kind)), r.lambda_max, std::string(to_string(r.method)),
                    static_cast<std::int64_t>(r.iterations), r.residual});
    json entry = {{"lambda_max", r.lambda_max}, {"symmetric", f.symmetric}, {"converged", r.converged}};
    if (r.spectral_radius) entry["spectral_radius"] = *r.spectral_radius;
    per_kind[std::string(to_string(kind))] = entry;
    unconverged = unconverged || !r.converged;
  }
  s.manifest()["flags"] = {{"data", o.data}, {"filters", o.filters}, {"normalize", o.normalize},
                           {"tol", o.tol},   {"max_iters", o.max_iters}, {"seed", o.seed}};
  s.manifest()["spectra"] = per_kind;
  s.csv(rows, {"kind", "lambda_max", "method", "iterations", "residual"});
  if (unconverged) throw std::runtime_error("power iteration did not reach --tol within --max-iters");
  return {};
}

Outcome cmd_interlace(Session& s) {
  const Options& o = s.opt();
  const Dataset ds = load(s);
  const PowerOptions popt = make_power(o);
  std::vector<CsvRow> rows;
  json summary = json::object();
  for (FilterKind kind : filter_list(o)) {
    const auto f = build_filter<double>(ds.graph, kind);
    const auto rep = interlacing_check(ds.graph, f, o.interlace_tol, popt);
    for (const auto& e : rep.nodes) {
      rows.push_back({std::string(to_string(kind)), static_cast<std::int64_t>(e.node), static_cast<std::int64_t>(e.size),
                      e.lambda_ego, rep.global.lambda_max, static_cast<std::int64_t>(e.violated ? 1 : 0)});
    }
    summary[std::string(to_string(kind))] = {{"lambda_g", rep.global.lambda_max},
                                             {"violations", rep.violations},
                                             {"max_ratio", rep.max_ratio}};
  }
  s.manifest()["flags"] = {{"data", o.data}, {"filters", o.filters}, {"tol", o.interlace_tol}, {"seed", o.seed}};
  s.manifest()["summary"] = summary;
  s.csv(rows, {"kind", "node", "q", "lambda_ego", "lambda_g", "violated"});
  return {};
}

Outcome cmd_train(Session& s) {
  Context c = make_context(s);
  const TrainResult res = sgd_train(c.train, c.obj, c.cfg, c.init);
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < res.epoch_theta.size(); ++k) {
    rows.push_back({static_cast<std::int64_t>(k), finite_or_nan(res.epoch_loss[k]),
                    finite_or_nan(mean_loss(c.test, res.epoch_theta[k], c.obj))});
  }
  if (res.diverged && res.epoch_theta.back().allFinite()) {
    rows.push_back({static_cast<std::int64_t>(res.epoch_theta.size()), kNaN, kNaN});
  }
  json& man = s.manifest();
  man["T"] = nominal_steps(c);
  man["steps_run"] = res.steps;
  man["diverged"] = res.diverged;
  if (res.diverged) man["diverged_step"] = res.diverged_step;
  s.csv(rows, {"epoch", "train_loss", "test_loss"});
  return {res.diverged};
}

Outcome cmd_twin(Session& s) {
  Context c = make_context(s);
  const Options& o = s.opt();
  if (o.perturb_index < 0 || o.perturb_index >= static_cast<Index>(c.train.size())) {
    throw std::invalid_argument("--perturb-index outside the training set");
  }
  Index node = o.replacement_node;
  if (node < 0) {
    if (c.ds.test.empty()) throw std::invalid_argument("no held-out node for the replacement; pass --replacement-node");
    node = c.ds.test.front();
  }
  if (node >= c.ds.num_nodes()) throw std::invalid_argument("--replacement-node out of range");
  const std::vector<Index> one{node};
  Perturbation pert{o.perturb_index, make_samples(c.f, c.ds.features, c.ds.labels, one).front()};

  TwinOptions opts;
  opts.g_lambda = c.g.value;
  const TwinTrace tr = twin_train(c.train, pert, c.obj, c.cfg, c.init, opts);
  std::vector<CsvRow> rows;
  rows.reserve(tr.steps.size());
  for (const TwinStep& st : tr.steps) {
    CsvRow row{static_cast<std::int64_t>(st.step), std::string(to_string(st.branch)), st.delta_theta};
    if (st.branch == Branch::Same) {
      row.insert(row.end(), {st.lemma_lhs, st.lemma_rhs, std::monostate{}, std::monostate{}});
    } else {
      row.insert(row.end(), {std::monostate{}, std::monostate{}, st.lemma_lhs, st.lemma_rhs});
    }
    row.push_back(st.envelope);
    rows.push_back(std::move(row));
  }

  json& man = s.manifest();
  man["flags"]["perturb_index"] = o.perturb_index;
  man["flags"]["replacement_node"] = node;
  man["perturbed_node"] = c.train_nodes[static_cast<std::size_t>(o.perturb_index)];
  man["twin_g_lambda"] = tr.g_lambda;
  man["growth"] = tr.growth;
  man["kick"] = tr.kick;
  man["T"] = nominal_steps(c);
  man["same_steps"] = tr.same_steps;
  man["differing_steps"] = tr.differing_steps;
  man["same_violations"] = tr.same_violations;
  man["differing_violations"] = tr.differing_violations;
  man["envelope_violations"] = tr.envelope_violations;
  man["epoch_delta"] = tr.epoch_delta;
  man["diverged"] = tr.diverged;
  if (tr.diverged) man["diverged_step"] = tr.diverged_step;

  s.csv(rows, {"step", "branch", "delta_theta_l2", "lemma34_lhs", "lemma34_rhs", "lemma35_lhs", "lemma35_rhs",
               "envelope"});
  return {tr.diverged};
}

Outcome cmd_gap(Session& s) {
  Context c = make_context(s);
  const Options& o = s.opt();
  const TrainResult res = sgd_train(c.train, c.obj, c.cfg, c.init);
  GapSettings gs;
  gs.eta = c.cfg.eta;
  gs.g_lambda = c.g.value;
  gs.lambda_max = c.g.lambda_max;
  gs.steps = nominal_steps(c);
  gs.delta = o.delta;
  gs.loss_bound = o.loss_bound;
  const GapReport rep = empirical_gap(res, c.train, c.test, c.obj, gs);

  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < rep.gap.size(); ++k) {
    rows.push_back({static_cast<std::int64_t>(k), finite_or_nan(rep.train_loss[k]), finite_or_nan(rep.test_loss[k]),
                    finite_or_nan(rep.gap[k]), rep.train_err01[k], rep.test_err01[k]});
  }
  if (res.diverged && res.epoch_theta.back().allFinite()) {
    rows.push_back({static_cast<std::int64_t>(rep.gap.size()), kNaN, kNaN, kNaN, kNaN, kNaN});
  }

  json& man = s.manifest();
  man["flags"]["delta"] = o.delta;
  man["T"] = gs.steps;
  man["M"] = rep.loss_bound;
  man["beta_m"] = number(rep.beta);
  man["gap_bound"] = number(rep.gap_bound);
  man["beta_m_lambda_max"] = number(rep.beta_lambda_max);
  man["gap_bound_lambda_max"] = number(rep.gap_bound_lambda_max);
  man["ratio"] = number(rep.ratio);
  man["diverged"] = res.diverged;
  if (res.diverged) man["diverged_step"] = res.diverged_step;
  s.csv(rows, {"epoch", "train_loss", "test_loss", "gap", "train_err01", "test_err01"});
  return {res.diverged};
}

Outcome cmd_bound(Session& s, const CLI::App& sub) {
  const Options& o = s.opt();
  BoundInputs b;
  b.eta = o.eta;
  b.delta = o.delta;
  b.source = parse_lambda_source(o.lambda_source);
  const ActivationKind act = parse_activation(o.act);
  const Loss loss = make_loss(o);
  b.activation = derive_constants(act);
  b.loss = derive_constants(loss);

  double g_lambda = kNaN;
  double lam_max = kNaN;
  bool diverged = false;
  json& man = s.manifest();

  if (!o.data.empty()) {
    Context c = make_context(s);
    g_lambda = c.g.value;
    lam_max = c.g.lambda_max;
    b.m = static_cast<std::int64_t>(c.train.size());
    b.steps = nominal_steps(c);
    b.lambda = b.source == LambdaSource::GLambda ? g_lambda : lam_max;
    if (sub.count("--M") == 0) {
      const TrainResult res = sgd_train(c.train, c.obj, c.cfg, c.init);
      double max_norm = 0;
      for (const auto& t : res.epoch_theta) {
        if (t.allFinite()) max_norm = std::max(max_norm, t.norm());
      }
      diverged = res.diverged;
      b.loss_bound = loss_bound_from_weights(c.obj, std::max(g_lambda, lam_max), max_norm);
    }
  } else {
    if (sub.count("--lambda") == 0 || sub.count("--m") == 0 || sub.count("--M") == 0) {
      throw std::invalid_argument("bound without --data needs --lambda, --m and --M");
    }
    b.m = o.m;
    b.steps = static_cast<std::int64_t>(o.epochs) * o.m;
    man["flags"] = {{"act", o.act}, {"loss", o.loss}, {"epsilon", o.epsilon}, {"eta", o.eta}, {"epochs", o.epochs}};
  }
  if (sub.count("--lambda") > 0) b.lambda = o.lambda;
  if (sub.count("--steps") > 0) b.steps = o.steps;
  if (sub.count("--M") > 0) b.loss_bound = o.loss_bound;

  const double beta = beta_bound(b);
  const double gap = std::isfinite(beta) ? gen_gap_bound(beta, b.m, b.loss_bound, b.delta)
                                         : std::numeric_limits<double>::infinity();
  json doc = {{"beta_m", number(beta)},
              {"gap_bound", number(gap)},
              {"vacuous", !std::isfinite(gap)},
              {"lambda_source", std::string(to_string(b.source))},
              {"lambda", b.lambda},
              {"g_lambda", number(g_lambda)},
              {"lambda_max", number(lam_max)},
              {"T", b.steps},
              {"m", b.m},
              {"M", b.loss_bound},
              {"delta", b.delta},
              {"constants",
               {{"alpha_sigma", b.activation.alpha},
                {"nu_sigma", b.activation.nu},
                {"alpha_ell", b.loss.alpha},
                {"nu_ell", b.loss.nu}}},
              {"assumptions_hold", loss.satisfies_assumptions()}};
  man["flags"]["delta"] = o.delta;
  man["flags"]["lambda_source"] = o.lambda_source;
  man["result"] = doc;
  if (diverged) man["diverged"] = true;
  s.json_out(doc);
  return {diverged};
}

Outcome cmd_stability(Session& s) {
  Context c = make_context(s);
  const Options& o = s.opt();
  if (c.test.empty()) throw std::invalid_argument("held-out pool is empty");
  const StabilityEstimate est = empirical_stability(c.train, c.test, c.obj, c.cfg, o.perturbations, o.runs, c.init);

  BoundInputs b;
  b.eta = c.cfg.eta;
  b.loss = derive_constants(c.obj.loss);
  b.activation = derive_constants(c.obj.act);
  b.lambda = c.g.value;
  b.steps = nominal_steps(c);
  b.m = static_cast<std::int64_t>(c.train.size());
  b.delta = o.delta;
  const double beta = beta_bound(b);
  const double ratio = beta > 0 ? est.beta_hat / (2.0 * beta) : kNaN;

  json doc = {{"beta_hat", number(est.beta_hat)},
              {"beta_m", number(beta)},
              {"two_beta", number(2.0 * beta)},
              {"ratio", number(ratio)},
              {"within_bound", est.beta_hat <= 2.0 * beta + 1e-9},
              {"P", est.perturbations},
              {"R", est.runs},
              {"evaluation_points", est.evaluation_points},
              {"diverged_runs", est.diverged_runs},
              {"per_perturbation", est.per_perturbation},
              {"assumptions_hold", c.obj.loss.satisfies_assumptions()}};
  json& man = s.manifest();
  man["flags"]["perturbations"] = o.perturbations;
  man["flags"]["runs"] = o.runs;
  man["T"] = b.steps;
  man["result"] = doc;
  s.json_out(doc);
  return {est.diverged_runs > 0};
}

// ---- flag registration ----------------------------------------------------------

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "Canonical dataset directory");
  sub->add_option("--normalize", o.normalize, "Scale feature rows to unit norm")->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--out", o.out, "Output path (stdout when omitted)");
}

void add_power(CLI::App* sub, Options& o) {
  sub->add_option("--tol", o.tol, "Power-iteration tolerance");
  sub->add_option("--max-iters", o.max_iters, "Power-iteration iteration cap");
  sub->add_option("--seed", o.seed, "Start-vector seed");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--filter", o.filter, "unnorm, symnorm, rw or identity");
  sub->add_option("--act", o.act, "elu, sigmoid or tanh");
  sub->add_option("--loss", o.loss, "logistic or xent");
  sub->add_option("--epsilon", o.epsilon, "Clamp of the cross-entropy loss");
  sub->add_option("--eta", o.eta, "Learning rate");
  sub->add_option("--epochs", o.epochs, "Passes over the training set");
  sub->add_option("--seed", o.seed, "Sample-sequence seed");
  sub->add_option("--mode", o.mode, "permutation or uniform sample order");
  sub->add_option("--init", o.init, "zero or uniform initial weights");
  sub->add_option("--m", o.m, "Use only the first m training nodes");
  sub->add_option("--tol", o.tol, "Power-iteration tolerance");
  sub->add_option("--max-iters", o.max_iters, "Power-iteration iteration cap");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Single-layer graph convolution: spectra, training, stability bounds", "gcnstab"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--kind", o.kind, "er, star, complete or cycle");
  synth->add_option("--n", o.n, "Node count");
  synth->add_option("--p", o.p, "Edge probability (er)");
  synth->add_option("--d", o.d, "Feature dimension");
  synth->add_option("--seed", o.seed, "Generator seed");
  synth->add_option("--noise", o.noise, "Label flip probability");
  synth->add_option("--train-fraction", o.train_fraction, "Share of nodes in the training split");
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* spectra = app.add_subcommand("spectra", "Largest eigenvalue or singular value of each filter");
  add_data(spectra, o);
  add_power(spectra, o);
  spectra->add_option("--filter", o.filters, "Filter kinds (default: unnorm,symnorm,rw)")->delimiter(',');

  auto* interlace = app.add_subcommand("interlace", "Compare every ego-graph block against the full filter");
  add_data(interlace, o);
  add_power(interlace, o);
  interlace->add_option("--filter", o.filters, "Filter kinds (default: unnorm,symnorm,rw)")->delimiter(',');
  interlace->add_option("--interlace-tol", o.interlace_tol, "Slack on lambda_ego <= lambda_g");

  auto* train = app.add_subcommand("train", "SGD with batch size one");
  add_data(train, o);
  add_model(train, o);

  auto* twin = app.add_subcommand("twin", "Coupled runs on S and a one-sample perturbation");
  add_data(twin, o);
  add_model(twin, o);
  twin->add_option("--perturb-index", o.perturb_index, "Training index to replace");
  twin->add_option("--replacement-node", o.replacement_node, "Node whose sample replaces it (default: first test node)");

  auto* gap = app.add_subcommand("gap", "Per-epoch train/test loss gap with the closed-form bound");
  add_data(gap, o);
  add_model(gap, o);
  gap->add_option("--delta", o.delta, "Confidence parameter");
  gap->add_option("--M", o.loss_bound, "Loss cap (default: from the trained weights)");

  auto* bound = app.add_subcommand("bound", "Closed-form stability and gap bounds");
  add_data(bound, o);
  add_model(bound, o);
  bound->add_option("--delta", o.delta, "Confidence parameter");
  bound->add_option("--lambda-source", o.lambda_source, "g_lambda or lambda_max");
  bound->add_option("--lambda", o.lambda, "Use this lambda instead of the dataset's");
  bound->add_option("--steps", o.steps, "SGD step count T (default: epochs x m)");
  bound->add_option("--M", o.loss_bound, "Loss cap (default: from a training run)");

  auto* stab = app.add_subcommand("stability", "Sampled uniform-stability estimate");
  add_data(stab, o);
  add_model(stab, o);
  stab->add_option("--delta", o.delta, "Confidence parameter");
  stab->add_option("--perturbations", o.perturbations, "Training indices to perturb");
  stab->add_option("--runs", o.runs, "Seeds per perturbation");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out;
    std::ostringstream help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    err << help_err.str();
    return code == 0 ? kExitOk : kExitInvalid;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Session session(chosen->get_name(), args, o, out);
  try {
    Outcome result;
    const std::string& name = chosen->get_name();
    if (name == "synth") result = cmd_synth(session);
    else if (name == "spectra") result = cmd_spectra(session);
    else if (name == "interlace") result = cmd_interlace(session);
    else if (name == "train") result = cmd_train(session);
    else if (name == "twin") result = cmd_twin(session);
    else if (name == "gap") result = cmd_gap(session);
    else if (name == "bound") result = cmd_bound(session, *chosen);
    else result = cmd_stability(session);

    const bool diverged = result.diverged || session.wrote_nan();
    const int code = diverged ? kExitDiverged : kExitOk;
    if (diverged) err << "gcnstab: numeric divergence; partial output written\n";
    if (name != "synth") session.finish(code);
    else if (!o.out.empty()) {
      session.manifest()["exit_code"] = code;
      write_json_file(session.manifest(), (std::filesystem::path(o.out) / "manifest.json").string());
    }
    return code;
  } catch (const std::exception& e) {
    err << "gcnstab " << chosen->get_name() << ": " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace gcnstab::cli
