#pragma once

#include "gcnstab/graph.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fixtures {

using gcnstab::Edge;
using gcnstab::Graph;
using gcnstab::Index;

inline Graph k2() { return gcnstab::build_graph(2, {{0, 1}}); }
inline Graph p3() { return gcnstab::build_graph(3, {{0, 1}, {1, 2}}); }
inline Graph k3() { return gcnstab::build_graph(3, {{0, 1}, {1, 2}, {0, 2}}); }

inline Graph star(Index n) {
  std::vector<Edge> e;
  for (Index v = 1; v < n; ++v) e.push_back({0, v});
  return gcnstab::build_graph(n, e);
}

inline Graph complete(Index n) {
  std::vector<Edge> e;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v) e.push_back({u, v});
  return gcnstab::build_graph(n, e);
}

inline Graph cycle(Index n) {
  std::vector<Edge> e;
  for (Index u = 0; u + 1 < n; ++u) e.push_back({u, u + 1});
  e.push_back({0, n - 1});
  return gcnstab::build_graph(n, e);
}

inline Graph erdos_renyi(Index n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> e;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (coin(rng)) e.push_back({u, v});
  return gcnstab::build_graph(n, e);
}

/// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gcnstab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
