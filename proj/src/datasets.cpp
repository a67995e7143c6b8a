#include "gcnstab/datasets.hpp"
#include "gcnstab/ego.hpp"
#include "gcnstab/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gcnstab {

namespace fs = std::filesystem;

namespace {

std::runtime_error file_error(const std::string& path, std::size_t line, const std::string& msg) {
  return std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FeatureMatrix<double> read_features(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (cols < 0) cols = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != cols) {
      throw file_error(path, lineno, "expected " + std::to_string(cols) + " columns, found " + std::to_string(fields.size()));
    }
    for (auto f : fields) {
      const auto v = text::parse_double(f);
      if (!v || !std::isfinite(*v)) throw file_error(path, lineno, "feature is not a finite number");
      values.push_back(*v);
    }
    if (++rows > n) throw file_error(path, lineno, "more feature rows than graph nodes (" + std::to_string(n) + ")");
  }
  if (rows != n) {
    throw file_error(path, lineno, "expected " + std::to_string(n) + " feature rows, found " + std::to_string(rows));
  }
  if (cols < 1) cols = 1;
  FeatureMatrix<double> x(n, cols);
  if (n > 0) x = Eigen::Map<const FeatureMatrix<double>>(values.data(), n, cols);
  return x;
}

std::vector<int> read_labels(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<int> raw;
  std::vector<std::size_t> line_of;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto v = text::parse_int<int>(line);
    if (!v) throw file_error(path, lineno, "label is not an integer");
    if (*v != -1 && *v != 0 && *v != 1) {
      throw file_error(path, lineno, "label " + std::to_string(*v) + " outside {-1, +1} and {0, 1}");
    }
    raw.push_back(*v);
    line_of.push_back(lineno);
  }
  if (static_cast<Index>(raw.size()) != n) {
    throw file_error(path, lineno, "expected " + std::to_string(n) + " labels, found " + std::to_string(raw.size()));
  }
  const auto neg = std::find(raw.begin(), raw.end(), -1);
  const auto zero = std::find(raw.begin(), raw.end(), 0);
  if (neg != raw.end() && zero != raw.end()) {
    const auto later = std::max(neg - raw.begin(), zero - raw.begin());
    throw file_error(path, line_of[static_cast<std::size_t>(later)], "labels mix -1 and 0");
  }
  for (int& y : raw) y = (y == 1) ? 1 : -1;
  return raw;
}

// Line of the k-th integer inside the array that follows "key" in a JSON text.
std::size_t json_entry_line(const std::string& text, const std::string& key, std::size_t k) {
  const auto key_pos = text.find("\"" + key + "\"");
  if (key_pos == std::string::npos) return 1;
  auto pos = text.find('[', key_pos);
  if (pos == std::string::npos) return 1;
  std::size_t seen = 0;
  bool in_number = false;
  for (++pos; pos < text.size() && text[pos] != ']'; ++pos) {
    const char c = text[pos];
    const bool digit = (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.' || c == 'e' || c == 'E';
    if (digit && !in_number) {
      if (seen == k) return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n')) + 1;
      ++seen;
    }
    in_number = digit;
  }
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n')) + 1;
}

std::pair<std::vector<Index>, std::vector<Index>> read_split(const std::string& path, Index n) {
  const std::string body = read_all(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, body.size());
    const auto line = static_cast<std::size_t>(std::count(body.begin(), body.begin() + static_cast<long>(upto), '\n')) + 1;
    throw file_error(path, line, "malformed JSON");
  }
  if (!j.is_object()) throw file_error(path, 1, "expected an object with \"train\" and \"test\" arrays");

  std::vector<char> owner(static_cast<std::size_t>(n), 0);
  auto take = [&](const std::string& key, char tag) {
    if (!j.contains(key) || !j[key].is_array()) throw file_error(path, 1, "missing \"" + key + "\" array");
    std::vector<Index> out;
    std::size_t k = 0;
    for (const auto& v : j[key]) {
      const auto line = [&] { return json_entry_line(body, key, k); };
      if (!v.is_number_integer()) throw file_error(path, line(), key + " entry is not an integer");
      const auto idx = v.get<std::int64_t>();
      if (idx < 0 || idx >= n) throw file_error(path, line(), key + " index out of range: " + std::to_string(idx));
      char& o = owner[static_cast<std::size_t>(idx)];
      if (o == tag) throw file_error(path, line(), "duplicate " + key + " index " + std::to_string(idx));
      if (o != 0) throw file_error(path, line(), "index " + std::to_string(idx) + " is in both train and test");
      o = tag;
      out.push_back(static_cast<Index>(idx));
      ++k;
    }
    return out;
  };
  auto train = take("train", 1);
  auto test = take("test", 2);
  return {std::move(train), std::move(test)};
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << body;
  if (!out) throw std::runtime_error(path + ": write failed");
}

Graph make_family_graph(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::vector<Edge> edges;
  const Index n = spec.n;
  switch (spec.kind) {
    case SyntheticKind::ErdosRenyi: {
      std::bernoulli_distribution coin(spec.p);
      for (Index u = 0; u < n; ++u)
        for (Index v = u + 1; v < n; ++v)
          if (coin(rng)) edges.push_back({u, v});
      break;
    }
    case SyntheticKind::Star:
      for (Index v = 1; v < n; ++v) edges.push_back({0, v});
      break;
    case SyntheticKind::Complete:
      for (Index u = 0; u < n; ++u)
        for (Index v = u + 1; v < n; ++v) edges.push_back({u, v});
      break;
    case SyntheticKind::Cycle:
      for (Index u = 0; u + 1 < n; ++u) edges.push_back({u, u + 1});
      if (n > 2) edges.push_back({0, n - 1});
      break;
  }
  return build_graph(n, std::move(edges));
}

void assign_split(Dataset& ds, double fraction, std::uint64_t seed) {
  const Index n = ds.num_nodes();
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
  if (n < 2) throw std::invalid_argument("splitting needs at least two nodes");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto m = std::clamp<Index>(static_cast<Index>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);
  ds.train.assign(order.begin(), order.begin() + m);
  ds.test.assign(order.begin() + m, order.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
}

}  // namespace

void Dataset::validate() const {
  const Index n = graph.num_nodes();
  if (features.rows() != n) throw std::invalid_argument("feature rows do not match node count");
  if (static_cast<Index>(labels.size()) != n) throw std::invalid_argument("label count does not match node count");
  for (int y : labels) {
    if (y != -1 && y != 1) throw std::invalid_argument("labels must be -1 or +1");
  }
  std::vector<char> owner(static_cast<std::size_t>(n), 0);
  for (const auto* part : {&train, &test}) {
    const char tag = part == &train ? 1 : 2;
    for (Index i : *part) {
      if (i < 0 || i >= n) throw std::invalid_argument("split index out of range");
      if (owner[static_cast<std::size_t>(i)] != 0) throw std::invalid_argument("split indices overlap or repeat");
      owner[static_cast<std::size_t>(i)] = tag;
    }
  }
}

Dataset load_canonical(const std::string& dir, bool normalize) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw std::runtime_error(dir + ": not a directory");
  Dataset ds;
  ds.graph = read_graph_tsv((root / "graph.tsv").string());
  const Index n = ds.graph.num_nodes();
  ds.features = read_features((root / "features.csv").string(), n);
  ds.labels = read_labels((root / "labels.csv").string(), n);
  std::tie(ds.train, ds.test) = read_split((root / "split.json").string(), n);
  if (normalize) {
    auto nf = normalize_features(ds.features);
    ds.features = std::move(nf.features);
    ds.zero_feature_rows = nf.zero_rows;
  }
  return ds;
}

void save_canonical(const Dataset& ds, const std::string& dir) {
  ds.validate();
  const fs::path root(dir);
  fs::create_directories(root);
  write_graph_tsv(ds.graph, (root / "graph.tsv").string());

  std::string body;
  for (Index i = 0; i < ds.features.rows(); ++i) {
    for (Index k = 0; k < ds.features.cols(); ++k) {
      if (k > 0) body += ',';
      body += text::format_double(ds.features(i, k));
    }
    body += '\n';
  }
  write_text((root / "features.csv").string(), body);

  body.clear();
  for (int y : ds.labels) body += std::to_string(y) + '\n';
  write_text((root / "labels.csv").string(), body);

  nlohmann::ordered_json split_json;
  split_json["train"] = ds.train;
  split_json["test"] = ds.test;
  write_text((root / "split.json").string(), split_json.dump() + '\n');
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::ErdosRenyi: return "er";
    case SyntheticKind::Star: return "star";
    case SyntheticKind::Complete: return "complete";
    case SyntheticKind::Cycle: return "cycle";
  }
  return "unknown";
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "er") return SyntheticKind::ErdosRenyi;
  if (name == "star") return SyntheticKind::Star;
  if (name == "complete") return SyntheticKind::Complete;
  if (name == "cycle") return SyntheticKind::Cycle;
  throw std::invalid_argument("unknown graph family '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (n < 2) throw std::invalid_argument("synthetic graphs need n >= 2");
  if (kind == SyntheticKind::ErdosRenyi && !(p > 0.0 && p <= 1.0)) throw std::invalid_argument("edge probability must lie in (0, 1]");
  if (d_in < 1) throw std::invalid_argument("feature dimension must be at least 1");
  if (!(teacher_noise >= 0.0 && teacher_noise < 0.5)) throw std::invalid_argument("teacher noise must lie in [0, 0.5)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Dataset ds;
  ds.graph = make_family_graph(spec, rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix<double> x(spec.n, spec.d_in);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index k = 0; k < x.cols(); ++k) x(i, k) = normal(rng);
  auto nf = normalize_features(x);
  ds.features = std::move(nf.features);
  ds.zero_feature_rows = nf.zero_rows;

  Vector<double> teacher(spec.d_in);
  for (Index k = 0; k < spec.d_in; ++k) teacher(k) = normal(rng);
  teacher.normalize();

  const auto f = build_filter<double>(ds.graph, FilterKind::SymNormalized);
  const Vector<double> score = aggregate_features(f, ds.features) * teacher;
  std::bernoulli_distribution flip(spec.teacher_noise);
  ds.labels.resize(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) {
    int y = score(i) >= 0.0 ? 1 : -1;
    if (spec.teacher_noise > 0.0 && flip(rng)) y = -y;
    ds.labels[static_cast<std::size_t>(i)] = y;
  }
  ds.teacher = std::move(teacher);

  assign_split(ds, spec.train_fraction, rng());
  return ds;
}

Dataset split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  Dataset out = ds;
  assign_split(out, train_fraction, seed);
  return out;
}

}  // namespace gcnstab
