#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "progsr/core/hash.hpp"
#include "progsr/core/random.hpp"
#include "progsr/nn/ops.hpp"

namespace progsr::nn {

template <typename T>
using ParamVisitor = std::function<void(const std::string&, Var<T>&)>;

template <typename T>
Var<T> parameter(Tensor<T> init) {
  return Var<T>(std::move(init), true);
}

enum class Init { kaiming, zeros };

// Uniform He initialisation for a leaky-rectifier network.
template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::int64_t fan_in, Rng& rng, double slope = 0.2) {
  Tensor<T> w(std::move(shape));
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return w;
}

template <typename T>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(std::int64_t cin, std::int64_t cout, ConvGeometry geom, Rng& rng,
         Init init = Init::kaiming)
      : geom_(geom) {
    Shape ws{cout, cin, geom.kernel[0], geom.kernel[1], geom.kernel[2]};
    weight_ = parameter(init == Init::zeros ? Tensor<T>(ws)
                                            : kaiming_uniform<T>(ws, cin * geom.taps(), rng));
    bias_ = parameter(Tensor<T>({cout}));
  }

  Var<T> operator()(const Var<T>& x) const {
    if (x.shape().size() != 5 || x.shape()[1] != in_channels()) {
      throw ShapeError("conv expects " + std::to_string(in_channels()) + " input channels, got " +
                       shape_str(x.shape()));
    }
    return conv3d(x, weight_, bias_, geom_);
  }

  std::int64_t in_channels() const { return weight_.shape()[1]; }
  std::int64_t out_channels() const { return weight_.shape()[0]; }
  const ConvGeometry& geometry() const { return geom_; }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fn(prefix + ".weight", weight_);
    fn(prefix + ".bias", bias_);
  }

 private:
  ConvGeometry geom_;
  Var<T> weight_;
  Var<T> bias_;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::int64_t in, std::int64_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor<T> w({out, in});
    for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    weight_ = parameter(std::move(w));
    bias_ = parameter(Tensor<T>({out}));
  }

  Var<T> operator()(const Var<T>& x) const { return linear(x, weight_, bias_); }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    fn(prefix + ".weight", weight_);
    fn(prefix + ".bias", bias_);
  }

 private:
  Var<T> weight_;
  Var<T> bias_;
};

/// Flattened (name, parameter) view of any module exposing visit().
template <typename T, typename M>
std::vector<std::pair<std::string, Var<T>>> named_parameters(M& module) {
  std::vector<std::pair<std::string, Var<T>>> out;
  module.visit("", [&](const std::string& name, Var<T>& v) {
    out.emplace_back(name.size() && name[0] == '.' ? name.substr(1) : name, v);
  });
  return out;
}

template <typename T, typename M>
std::int64_t count_parameters(M& module) {
  std::int64_t n = 0;
  for (auto& [name, v] : named_parameters<T>(module)) n += static_cast<std::int64_t>(v.value().size());
  return n;
}

template <typename T, typename M>
void zero_grad(M& module) {
  for (auto& [name, v] : named_parameters<T>(module)) v.zero_grad();
}

template <typename T, typename M>
std::uint64_t parameter_hash(M& module) {
  Fnv1a h;
  for (auto& [name, v] : named_parameters<T>(module)) {
    h.update(name);
    h.update_values<T>(v.value().values());
  }
  return h.digest();
}

}  // namespace progsr::nn
