#pragma once

#include <cstdint>
#include <string>

#include "progsr/core/hash.hpp"
#include "progsr/core/random.hpp"
#include "progsr/core/types.hpp"
#include "progsr/nn/module.hpp"

namespace progsr::attention {

using nn::Var;

/// Foreground importance predictor: conv3 -> lrelu -> conv1 -> sigmoid on the
/// encoder features, then linear resize to the SR output shape.
/// Output is N x 1 x T x H x W with every weight in [0, 1].
template <typename T>
class AttentionBranch {
 public:
  AttentionBranch() = default;

  AttentionBranch(std::int64_t in_channels, std::int64_t hidden, std::uint64_t seed,
                  double slope = 0.2)
      : slope_(static_cast<T>(slope)) {
    if (in_channels < 1 || hidden < 1) throw ConfigError("attention widths must be positive");
    Rng r3(derive_seed(seed, hash_string("attention.conv3")));
    Rng r1(derive_seed(seed, hash_string("attention.conv1")));
    conv3_ = nn::Conv3d<T>(in_channels, hidden, nn::ConvGeometry::same(3), r3);
    conv1_ = nn::Conv3d<T>(hidden, 1, nn::ConvGeometry::same(1), r1);
  }

  Var<T> operator()(const Var<T>& features, const Extent3& target) const {
    if (features.shape().size() != 5) throw ShapeError("attention expects N x F x T x H x W features");
    for (auto d : target) {
      if (d < 1) throw ShapeError("attention target shape must be positive");
    }
    Var<T> h = nn::leaky_relu(conv3_(features), slope_);
    Var<T> m = nn::sigmoid(conv1_(h));
    // Linear interpolation is a convex combination, so the range stays [0, 1].
    return nn::resize(m, target[0], target[1], target[2]);
  }

  std::int64_t in_channels() const { return conv3_.in_channels(); }

  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
    conv3_.visit(prefix + "attention.conv3", fn);
    conv1_.visit(prefix + "attention.conv1", fn);
  }

 private:
  T slope_{0.2};
  nn::Conv3d<T> conv3_, conv1_;
};

/// v[n,c,t,h,w] * m[n,0,t,h,w]
template <typename T>
Var<T> apply_mask(const Var<T>& v, const Var<T>& m) {
  return nn::mul_channel_broadcast(v, m);
}

inline VideoClip apply_mask(const VideoClip& v, const AttentionMap& m) {
  check_clip_shape(v.data.shape());
  if (m.frames() != v.frames() || m.height() != v.height() || m.width() != v.width()) {
    throw ShapeError("attention map " + shape_str(m.weights().shape()) + " does not match clip " +
                     shape_str(v.data.shape()));
  }
  VideoClip out = v;
  const std::size_t vol = m.weights().size();
  for (std::int64_t c = 0; c < v.channels(); ++c) {
    float* d = out.data.data() + static_cast<std::size_t>(c) * vol;
    for (std::size_t i = 0; i < vol; ++i) d[i] *= m.weights()[i];
  }
  return out;
}

/// Mean weight of the map.
template <typename T>
Var<T> attention_mass(const Var<T>& m) {
  return nn::mean(m);
}

/// Sample n of an N x 1 x T x H x W map as a validated AttentionMap.
template <typename T>
AttentionMap to_attention_map(const Tensor<T>& maps, std::int64_t n = 0) {
  const Dims5 d = Dims5::of(maps.shape());
  if (d.c != 1 || n < 0 || n >= d.n) throw ShapeError("expected N x 1 x T x H x W maps");
  Tensor<float> w({d.t, d.h, d.w});
  const T* src = maps.data() + d.index(n, 0, 0, 0, 0);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(src[i]);
  return AttentionMap(std::move(w));
}

}  // namespace progsr::attention
