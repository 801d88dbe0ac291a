#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsr/core/hash.hpp"
#include "progsr/core/random.hpp"
#include "progsr/core/types.hpp"
#include "progsr/nn/module.hpp"

namespace progsr::classifier {

using nn::Var;

/// Action classifier: N x C x T x H x W clips of any stage resolution -> N x K logits.
template <typename T>
class ClassifierBackbone {
 public:
  virtual ~ClassifierBackbone() = default;
  virtual Var<T> forward(const Var<T>& x) const = 0;
  virtual void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) = 0;
  virtual std::string name() const = 0;
  virtual int num_classes() const = 0;
  virtual nlohmann::json config() const = 0;
};

struct Toy3dConfig {
  int channels = 3;
  int num_classes = 2;
  int width = 8;
  double leaky_slope = 0.2;

  void validate() const {
    if (channels != 1 && channels != 3) throw ConfigError("classifier channels must be 1 or 3");
    if (num_classes < 1) throw ConfigError("classifier needs at least one class");
    if (width < 1) throw ConfigError("classifier width must be positive");
  }
};

inline void to_json(nlohmann::json& j, const Toy3dConfig& c) {
  j = {{"channels", c.channels}, {"num_classes", c.num_classes}, {"width", c.width},
       {"leaky_slope", c.leaky_slope}};
}

inline void from_json(const nlohmann::json& j, Toy3dConfig& c) {
  Toy3dConfig d;
  c.channels = j.value("channels", d.channels);
  c.num_classes = j.value("num_classes", d.num_classes);
  c.width = j.value("width", d.width);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
}

/// Four conv3 + lrelu + 2x average-pool stages, global average pool, linear head.
/// Pooling skips any axis already reduced to one sample.
template <typename T>
class Toy3d final : public ClassifierBackbone<T> {
 public:
  static constexpr int kStages = 4;

  Toy3d(Toy3dConfig config, std::uint64_t seed) : config_(config) {
    config_.validate();
    const auto w = static_cast<std::int64_t>(config_.width);
    const std::array<std::int64_t, kStages> widths{w, 2 * w, 4 * w, 4 * w};
    std::int64_t in = config_.channels;
    for (int s = 0; s < kStages; ++s) {
      Rng r(derive_seed(seed, hash_string("toy3d.conv" + std::to_string(s + 1))));
      convs_.emplace_back(in, widths[static_cast<std::size_t>(s)], nn::ConvGeometry::same(3), r);
      in = widths[static_cast<std::size_t>(s)];
    }
    Rng r(derive_seed(seed, hash_string("toy3d.fc")));
    fc_ = nn::Linear<T>(in, config_.num_classes, r);
  }

  Var<T> forward(const Var<T>& x) const override {
    const Shape& s = x.shape();
    if (s.size() != 5 || s[1] != config_.channels) {
      throw ShapeError("toy3d expects N x " + std::to_string(config_.channels) +
                       " x T x H x W, got " + shape_str(s));
    }
    if (s[2] < 4 || s[3] < 14 || s[4] < 14) throw ShapeError("toy3d needs at least 4 x 14 x 14 clips");
    const T slope = static_cast<T>(config_.leaky_slope);
    Var<T> h = x;
    for (const auto& conv : convs_) {
      h = nn::leaky_relu(conv(h), slope);
      const Shape& hs = h.shape();
      auto k = [](std::int64_t d) -> std::int64_t { return d >= 2 ? 2 : 1; };
      if (hs[2] > 1 || hs[3] > 1 || hs[4] > 1) h = nn::avg_pool(h, k(hs[2]), k(hs[3]), k(hs[4]));
    }
    return fc_(nn::global_avg_pool(h));
  }

  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) override {
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].visit(prefix + "toy3d.conv" + std::to_string(i + 1), fn);
    }
    fc_.visit(prefix + "toy3d.fc", fn);
  }

  std::string name() const override { return "toy3d"; }
  int num_classes() const override { return config_.num_classes; }
  nlohmann::json config() const override { return config_; }

 private:
  Toy3dConfig config_;
  std::vector<nn::Conv3d<T>> convs_;
  nn::Linear<T> fc_;
};

/// Name -> factory. "toy3d" is always present; external backbones register here.
template <typename T>
class BackboneRegistry {
 public:
  using Factory = std::function<std::unique_ptr<ClassifierBackbone<T>>(const nlohmann::json& config,
                                                                       std::uint64_t seed)>;

  static BackboneRegistry& instance() {
    static BackboneRegistry registry;
    return registry;
  }

  void add(const std::string& name, Factory f) { factories_[name] = std::move(f); }

  bool contains(const std::string& name) const { return factories_.count(name) > 0; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : factories_) out.push_back(k);
    return out;
  }

  std::unique_ptr<ClassifierBackbone<T>> create(const std::string& name, const nlohmann::json& config,
                                                std::uint64_t seed) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("unknown classifier backbone '" + name + "'");
    return it->second(config, seed);
  }

 private:
  BackboneRegistry() {
    add("toy3d", [](const nlohmann::json& config, std::uint64_t seed) {
      return std::make_unique<Toy3d<T>>(config.get<Toy3dConfig>(), seed);
    });
  }

  std::map<std::string, Factory> factories_;
};

template <typename T>
std::unique_ptr<ClassifierBackbone<T>> make_backbone(const std::string& name, const nlohmann::json& config,
                                                     std::uint64_t seed) {
  return BackboneRegistry<T>::instance().create(name, config, seed);
}

/// Multi-label: sigmoid(logit) >= threshold per class. Single-label: one-hot
/// argmax, first index on ties.
template <typename T>
LabelVector predict_labels(std::span<const T> logits, bool multi_label, double threshold = 0.5) {
  if (logits.empty()) throw ShapeError("no logits");
  LabelVector lv;
  lv.y.assign(logits.size(), 0);
  if (multi_label) {
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const double z = static_cast<double>(logits[c]);
      const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      lv.y[c] = p >= threshold ? 1 : 0;
    }
  } else {
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    lv.y[static_cast<std::size_t>(best)] = 1;
  }
  return lv;
}

/// Row-wise predict_labels over an N x K logit matrix.
template <typename T>
std::vector<LabelVector> predict_batch(const Tensor<T>& logits, bool multi_label, double threshold = 0.5) {
  if (logits.rank() != 2) throw ShapeError("logits must be N x K");
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  std::vector<LabelVector> out;
  for (std::int64_t i = 0; i < n; ++i) {
    out.push_back(predict_labels<T>(std::span<const T>(logits.data() + i * k, static_cast<std::size_t>(k)),
                                    multi_label, threshold));
  }
  return out;
}

}  // namespace progsr::classifier
