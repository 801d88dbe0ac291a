#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "progsr/core/errors.hpp"
#include "progsr/core/tensor.hpp"

namespace progsr {

/// A C x T x H x W intensity volume with values in [0, 1].
struct VideoClip {
  Tensor<float> data;
  double fps = 30.0;
  std::string source_id;

  std::int64_t channels() const { return data.dim(0); }
  std::int64_t frames() const { return data.dim(1); }
  std::int64_t height() const { return data.dim(2); }
  std::int64_t width() const { return data.dim(3); }

  float& at(std::int64_t c, std::int64_t t, std::int64_t y, std::int64_t x) {
    return data[static_cast<std::size_t>(((c * frames() + t) * height() + y) * width() + x)];
  }
  float at(std::int64_t c, std::int64_t t, std::int64_t y, std::int64_t x) const {
    return data[static_cast<std::size_t>(((c * frames() + t) * height() + y) * width() + x)];
  }

  friend bool operator==(const VideoClip& a, const VideoClip& b) {
    return a.data == b.data && a.fps == b.fps && a.source_id == b.source_id;
  }
};

inline void check_clip_shape(const Shape& s) {
  if (s.size() != 4) throw ShapeError("clip must be C x T x H x W, got " + shape_str(s));
  if (s[0] != 1 && s[0] != 3) throw ShapeError("clip channels must be 1 or 3, got " + shape_str(s));
  for (std::size_t i = 1; i < 4; ++i) {
    if (s[i] < 1) throw ShapeError("clip has an empty dimension: " + shape_str(s));
  }
}

/// Returns the clip unchanged when every invariant holds.
inline const VideoClip& validate_clip(const VideoClip& clip) {
  check_clip_shape(clip.data.shape());
  if (!std::isfinite(clip.fps) || clip.fps <= 0.0) {
    throw RangeError("clip fps must be positive and finite");
  }
  const auto values = clip.data.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw RangeError("clip value " + std::to_string(v) + " at flat index " + std::to_string(i) +
                       " is outside [0,1]");
    }
  }
  return clip;
}

inline VideoClip make_clip(Shape shape, float fill = 0.0f, double fps = 30.0,
                           std::string source_id = {}) {
  check_clip_shape(shape);
  return VideoClip{Tensor<float>(std::move(shape), fill), fps, std::move(source_id)};
}

/// Binary label vector; single-label vectors carry exactly one set bit.
struct LabelVector {
  std::vector<std::uint8_t> y;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return y.size(); }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : y) n += b != 0;
    return n;
  }
  bool has(std::size_t k) const { return k < y.size() && y[k] != 0; }

  friend bool operator==(const LabelVector& a, const LabelVector& b) { return a.y == b.y; }
};

inline LabelVector make_labels(std::size_t num_classes, const std::vector<int>& positives,
                               bool single_label = false) {
  if (num_classes == 0) throw ShapeError("label vector needs at least one class");
  LabelVector lv;
  lv.y.assign(num_classes, 0);
  for (int k : positives) {
    if (k < 0 || static_cast<std::size_t>(k) >= num_classes) {
      throw RangeError("class id " + std::to_string(k) + " outside [0," +
                       std::to_string(num_classes) + ")");
    }
    lv.y[static_cast<std::size_t>(k)] = 1;
  }
  if (single_label && lv.count() != 1) throw RangeError("single-label vector needs exactly one class");
  return lv;
}

inline void validate_labels(const LabelVector& lv, bool single_label) {
  if (lv.y.empty()) throw ShapeError("label vector needs at least one class");
  for (auto b : lv.y) {
    if (b > 1) throw RangeError("label entries must be 0 or 1");
  }
  if (!lv.class_names.empty() && lv.class_names.size() != lv.y.size()) {
    throw ShapeError("class_names length does not match label vector");
  }
  if (single_label && lv.count() != 1) throw RangeError("single-label vector needs exactly one class");
}

/// Per-frame foreground weights, T x H x W, broadcast over colour channels.
class AttentionMap {
 public:
  AttentionMap() = default;

  // Out-of-range weights are rejected, never clamped.
  explicit AttentionMap(Tensor<float> weights) : weights_(std::move(weights)) {
    if (weights_.rank() != 3) throw ShapeError("attention map must be T x H x W");
    for (auto d : weights_.shape()) {
      if (d < 1) throw ShapeError("attention map has an empty dimension");
    }
    for (float v : weights_.values()) {
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
        throw RangeError("attention weight " + std::to_string(v) + " outside [0,1]");
      }
    }
  }

  static AttentionMap constant(std::int64_t t, std::int64_t h, std::int64_t w, float v) {
    return AttentionMap(Tensor<float>({t, h, w}, v));
  }

  const Tensor<float>& weights() const noexcept { return weights_; }
  std::int64_t frames() const { return weights_.dim(0); }
  std::int64_t height() const { return weights_.dim(1); }
  std::int64_t width() const { return weights_.dim(2); }

 private:
  Tensor<float> weights_;
};

struct LossWeights {
  double lambda_rec = 1.0;
  double lambda_att = 0.5;
  // Coefficient of the L1 penalty inside the attention loss.
  double lambda_sparsity = 0.5;

  void validate() const {
    for (double v : {lambda_rec, lambda_att, lambda_sparsity}) {
      if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and >= 0");
    }
  }
};

using Extent3 = std::array<std::int64_t, 3>;  // (T, H, W)

struct StageConfig {
  int stage_index = 1;
  Extent3 in_shape{16, 14, 14};
  Extent3 out_shape{4, 28, 28};
  double alpha = 1.0;
};

}  // namespace progsr
