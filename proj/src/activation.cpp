#include "gcnstab/activation.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <utility>

namespace gcnstab {

namespace {

constexpr std::int64_t kGridHalf = 500000;  // grid x = k * 1e-4, |k| <= kGridHalf
constexpr double kGridStep = 1e-4;

double round_up_6(double v) { return std::ceil(v * 1e6 - 1e-9) / 1e6; }

template <typename F>
double grid_max_abs(F&& fn) {
  double best = 0;
  for (std::int64_t k = -kGridHalf; k <= kGridHalf; ++k) {
    best = std::max(best, std::abs(fn(static_cast<double>(k) * kGridStep)));
  }
  return best;
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Elu1: return "elu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
  }
  return "unknown";
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Logistic: return "logistic";
    case LossKind::ClampedCrossEntropy: return "xent";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "elu") return ActivationKind::Elu1;
  if (name == "sigmoid") return ActivationKind::Sigmoid;
  if (name == "tanh") return ActivationKind::Tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

LossKind parse_loss(std::string_view name) {
  if (name == "logistic") return LossKind::Logistic;
  if (name == "xent") return LossKind::ClampedCrossEntropy;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

namespace {

Constants certify_activation(ActivationKind kind) {
  Constants c;
  c.alpha = round_up_6(grid_max_abs([kind](double x) { return activation_derivative(kind, x); }));
  c.nu = round_up_6(grid_max_abs([kind](double x) { return activation_second_derivative(kind, x); }));
  return c;
}

Constants certify_loss(const Loss& loss) {
  if (loss.kind == LossKind::ClampedCrossEntropy) {
    return {1.0 / loss.epsilon, 1.0 / (loss.epsilon * loss.epsilon)};
  }
  Constants c;
  for (int y : {-1, 1}) {
    c.alpha = std::max(c.alpha, grid_max_abs([&](double f) { return loss.derivative(f, y); }));
    c.nu = std::max(c.nu, grid_max_abs([&](double f) { return loss.second_derivative(f, y); }));
  }
  c.alpha = round_up_6(c.alpha);
  c.nu = round_up_6(c.nu);
  return c;
}

}  // namespace

// The grid scan is costly and the result depends only on the kind (and clamp), so
// certified constants are cached per process.
Constants derive_constants(ActivationKind kind) {
  static std::mutex mu;
  static std::map<ActivationKind, Constants> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(kind);
  if (it == cache.end()) it = cache.emplace(kind, certify_activation(kind)).first;
  return it->second;
}

Constants derive_constants(const Loss& loss) {
  static std::mutex mu;
  static std::map<std::pair<LossKind, double>, Constants> cache;
  std::lock_guard lock(mu);
  const auto key = std::pair(loss.kind, loss.kind == LossKind::Logistic ? 0.0 : loss.epsilon);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, certify_loss(loss)).first;
  return it->second;
}

}  // namespace gcnstab
