#include "gcnstab/graph.hpp"
#include "gcnstab/text.hpp"

#include <fstream>
#include <utility>

namespace gcnstab {

Graph build_graph(Index n, std::vector<Edge> edges) {
  if (n < 0) throw GraphError("node count must be non-negative");

  for (std::size_t k = 0; k < edges.size(); ++k) {
    Edge& e = edges[k];
    const auto pos = static_cast<Index>(k);
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
      throw GraphError("edge " + std::to_string(k) + ": index out of range (" + std::to_string(e.u) + ", " +
                           std::to_string(e.v) + ") for n=" + std::to_string(n),
                       pos);
    }
    if (e.u == e.v) throw GraphError("edge " + std::to_string(k) + ": self-loop at node " + std::to_string(e.u), pos);
    if (!std::isfinite(e.weight) || e.weight <= 0.0) {
      throw GraphError("edge " + std::to_string(k) + ": weight must be finite and positive", pos);
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }

  // Stable sort so a duplicate is reported at its second occurrence in input order.
  std::vector<std::size_t> order(edges.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(edges[a].u, edges[a].v) < std::pair(edges[b].u, edges[b].v);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Edge& prev = edges[order[k - 1]];
    const Edge& cur = edges[order[k]];
    if (prev.u == cur.u && prev.v == cur.v) {
      const std::size_t culprit = std::max(order[k - 1], order[k]);
      throw GraphError("edge " + std::to_string(culprit) + ": duplicate edge (" + std::to_string(cur.u) + ", " +
                           std::to_string(cur.v) + ")",
                       static_cast<Index>(culprit));
    }
  }

  Graph g;
  g.n_ = n;
  g.edges_.reserve(edges.size());
  for (std::size_t k : order) g.edges_.push_back(edges[k]);

  g.degree_.assign(static_cast<std::size_t>(n), 0.0);
  g.adjacency_.assign(static_cast<std::size_t>(n), {});
  for (const Edge& e : g.edges_) {
    g.degree_[static_cast<std::size_t>(e.u)] += e.weight;
    g.degree_[static_cast<std::size_t>(e.v)] += e.weight;
    g.adjacency_[static_cast<std::size_t>(e.u)].push_back(e.v);
    g.adjacency_[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  for (auto& row : g.adjacency_) std::sort(row.begin(), row.end());
  return g;
}

Eigen::SparseMatrix<double, Eigen::RowMajor, int> Graph::adjacency() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * edges_.size());
  for (const Edge& e : edges_) {
    t.emplace_back(e.u, e.v, e.weight);
    t.emplace_back(e.v, e.u, e.weight);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> a(n_, n_);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

Graph read_graph_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError(path + ": cannot open");

  auto fail = [&](std::size_t line, const std::string& msg) {
    return GraphError(path + ":" + std::to_string(line) + ": " + msg);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail(1, "missing header");
  const auto header = text::split(text::trim(line), '\t');
  if (header.size() != 2) throw fail(1, "header must be N<TAB>E_count");
  const auto n = text::parse_int<Index>(header[0]);
  const auto m = text::parse_int<Index>(header[1]);
  if (!n || !m || *n < 0 || *m < 0) throw fail(1, "header must hold two non-negative integers");

  std::vector<Edge> edges;
  std::vector<std::size_t> line_of;  // edge k sits on line line_of[k]
  edges.reserve(static_cast<std::size_t>(*m));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto fields = text::split(body, '\t');
    if (fields.size() != 2 && fields.size() != 3) throw fail(lineno, "expected u<TAB>v[<TAB>w]");
    Edge e;
    const auto u = text::parse_int<Index>(fields[0]);
    const auto v = text::parse_int<Index>(fields[1]);
    if (!u || !v) throw fail(lineno, "node index is not an integer");
    e.u = *u;
    e.v = *v;
    if (fields.size() == 3) {
      const auto w = text::parse_double(fields[2]);
      if (!w) throw fail(lineno, "weight is not a number");
      e.weight = *w;
    }
    edges.push_back(e);
    line_of.push_back(lineno);
    if (static_cast<Index>(edges.size()) > *m) throw fail(lineno, "more edges than declared in header");
  }
  if (static_cast<Index>(edges.size()) != *m) {
    throw fail(lineno, "header declares " + std::to_string(*m) + " edges, found " + std::to_string(edges.size()));
  }

  try {
    return build_graph(*n, std::move(edges));
  } catch (const GraphError& e) {
    if (e.position() >= 0 && static_cast<std::size_t>(e.position()) < line_of.size()) {
      throw fail(line_of[static_cast<std::size_t>(e.position())], e.what());
    }
    throw;
  }
}

void write_graph_tsv(const Graph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << graph.num_nodes() << '\t' << graph.num_edges() << '\n';
  for (const Edge& e : graph.edges()) {
    out << e.u << '\t' << e.v;
    if (e.weight != 1.0) out << '\t' << text::format_double(e.weight);
    out << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Unnormalized: return "unnorm";
    case FilterKind::SymNormalized: return "symnorm";
    case FilterKind::RandomWalk: return "rw";
    case FilterKind::Identity: return "identity";
  }
  return "unknown";
}

FilterKind parse_filter_kind(std::string_view name) {
  if (name == "unnorm") return FilterKind::Unnormalized;
  if (name == "symnorm") return FilterKind::SymNormalized;
  if (name == "rw") return FilterKind::RandomWalk;
  if (name == "identity") return FilterKind::Identity;
  throw std::invalid_argument("unknown filter kind '" + std::string(name) + "'");
}

}  // namespace gcnstab
