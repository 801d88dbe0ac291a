#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "progsr/core/errors.hpp"
#include "progsr/nn/autograd.hpp"

namespace progsr::nn {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
  // Global-norm clip; 0 disables.
  double clip_norm = 0.0;
};

/// Adam with per-parameter step counts, so blocks added by progressive growth
/// start their bias correction from scratch.
template <typename T>
class Adam {
 public:
  struct Slot {
    Var<T> param;
    Tensor<T> m;
    Tensor<T> v;
    std::int64_t steps = 0;
  };

  Adam() = default;
  explicit Adam(AdamOptions opts) : opts_(opts) {}

  const AdamOptions& options() const { return opts_; }
  AdamOptions& options() { return opts_; }

  /// Registers parameters not yet tracked (by name); existing slots keep their moments.
  void track(const std::vector<std::pair<std::string, Var<T>>>& params) {
    for (const auto& [name, var] : params) {
      auto it = slots_.find(name);
      if (it == slots_.end()) {
        slots_.emplace(name, Slot{var, Tensor<T>(var.shape()), Tensor<T>(var.shape()), 0});
      } else {
        it->second.param = var;
      }
    }
  }

  void step() {
    double scale = 1.0;
    if (opts_.clip_norm > 0.0) {
      double sq = 0.0;
      for (auto& [name, s] : slots_) {
        if (s.param.grad().empty()) continue;
        for (T g : s.param.grad().values()) sq += static_cast<double>(g) * static_cast<double>(g);
      }
      const double norm = std::sqrt(sq);
      if (norm > opts_.clip_norm) scale = opts_.clip_norm / norm;
    }
    for (auto& [name, s] : slots_) {
      const Tensor<T>& grad = s.param.grad();
      if (grad.empty()) continue;
      ++s.steps;
      const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(s.steps));
      const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(s.steps));
      Tensor<T>& p = s.param.mutable_value();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = static_cast<double>(grad[i]) * scale;
        const double m = opts_.beta1 * static_cast<double>(s.m[i]) + (1.0 - opts_.beta1) * g;
        const double v = opts_.beta2 * static_cast<double>(s.v[i]) + (1.0 - opts_.beta2) * g * g;
        s.m[i] = static_cast<T>(m);
        s.v[i] = static_cast<T>(v);
        const double update = opts_.lr * (m / bc1) / (std::sqrt(v / bc2) + opts_.eps);
        if (update != 0.0) p[i] = static_cast<T>(static_cast<double>(p[i]) - update);
      }
    }
  }

  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  AdamOptions opts_;
  std::map<std::string, Slot> slots_;
};

}  // namespace progsr::nn
