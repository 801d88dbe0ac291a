#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "progsr/core/types.hpp"
#include "progsr/nn/resample.hpp"

namespace progsr::data {

// Keys cubic convolution kernel; a = -0.5 is Catmull-Rom.
inline double cubic_weight(double x, double a = -0.5) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

/// Per-output tap lists for cubic resampling of one axis. Pixel centres are
/// half-pixel aligned; when shrinking, the kernel is stretched by the scale
/// factor (antialiasing). Out-of-range taps replicate the border sample.
struct CubicTaps {
  std::vector<std::vector<std::int64_t>> index;
  std::vector<std::vector<double>> weight;

  static CubicTaps make(std::int64_t in, std::int64_t out, double a = -0.5) {
    CubicTaps taps;
    taps.index.resize(static_cast<std::size_t>(out));
    taps.weight.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double stretch = std::max(1.0, scale);
    const double support = 2.0 * stretch;
    for (std::int64_t i = 0; i < out; ++i) {
      const double centre = (static_cast<double>(i) + 0.5) * scale - 0.5;
      const auto lo = static_cast<std::int64_t>(std::ceil(centre - support));
      const auto hi = static_cast<std::int64_t>(std::floor(centre + support));
      auto& idx = taps.index[static_cast<std::size_t>(i)];
      auto& wts = taps.weight[static_cast<std::size_t>(i)];
      double total = 0.0;
      for (std::int64_t j = lo; j <= hi; ++j) {
        const double w = cubic_weight((static_cast<double>(j) - centre) / stretch, a);
        if (w == 0.0) continue;
        idx.push_back(std::clamp<std::int64_t>(j, 0, in - 1));
        wts.push_back(w);
        total += w;
      }
      for (double& w : wts) w /= total;
    }
    return taps;
  }
};

namespace detail {

template <typename T>
Tensor<T> cubic_axis(const Tensor<T>& x, std::size_t axis, std::int64_t out) {
  const Shape& s = x.shape();
  const std::int64_t in = s[axis];
  if (in == out) return x;
  std::int64_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape os = s;
  os[axis] = out;
  Tensor<T> y(os);
  const CubicTaps taps = CubicTaps::make(in, out);
  std::vector<double> acc(static_cast<std::size_t>(inner));
  for (std::int64_t o = 0; o < outer; ++o) {
    const T* src = x.data() + o * in * inner;
    T* dst = y.data() + o * out * inner;
    for (std::int64_t i = 0; i < out; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const auto& idx = taps.index[static_cast<std::size_t>(i)];
      const auto& wts = taps.weight[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const T* row = src + idx[k] * inner;
        for (std::int64_t j = 0; j < inner; ++j) acc[static_cast<std::size_t>(j)] += wts[k] * row[j];
      }
      for (std::int64_t j = 0; j < inner; ++j) dst[i * inner + j] = static_cast<T>(acc[static_cast<std::size_t>(j)]);
    }
  }
  return y;
}

}  // namespace detail

/// Bicubic resize of the two trailing (H, W) axes of any tensor.
template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
  if (x.rank() < 2) throw ShapeError("bicubic_resize needs at least two axes");
  if (h < 1 || w < 1) throw ShapeError("bicubic target must be positive");
  const std::size_t r = x.rank();
  return detail::cubic_axis(detail::cubic_axis(x, r - 1, w), r - 2, h);
}

template <typename T>
void clamp_unit(Tensor<T>& x) {
  for (auto& v : x.values()) v = std::clamp(v, T{0}, T{1});
}

struct ClipPair {
  VideoClip lr;
  VideoClip hr;
  int scale = 8;
};

inline void check_scale(std::int64_t h, std::int64_t w, int scale) {
  if (scale != 2 && scale != 4 && scale != 8) {
    throw ShapeError("scale must be 2, 4 or 8, got " + std::to_string(scale));
  }
  if (h % scale != 0 || w % scale != 0) {
    throw ShapeError(std::to_string(h) + "x" + std::to_string(w) + " is not divisible by " +
                     std::to_string(scale));
  }
}

/// Spatial bicubic downscale of every frame, clamped to [0, 1].
inline VideoClip bicubic_downscale(const VideoClip& hr, int scale) {
  check_clip_shape(hr.data.shape());
  check_scale(hr.height(), hr.width(), scale);
  VideoClip lr{bicubic_resize(hr.data, hr.height() / scale, hr.width() / scale), hr.fps, hr.source_id};
  clamp_unit(lr.data);
  return lr;
}

/// Spatial bicubic upscale of every frame, clamped to [0, 1].
inline VideoClip bicubic_upscale(const VideoClip& lr, int scale) {
  check_clip_shape(lr.data.shape());
  if (scale < 1) throw ShapeError("scale must be positive");
  VideoClip hr{bicubic_resize(lr.data, lr.height() * scale, lr.width() * scale), lr.fps, lr.source_id};
  clamp_unit(hr.data);
  return hr;
}

/// Training pair: lr is the degraded clip the network upsamples; hr is untouched.
inline ClipPair make_sr_pair(const VideoClip& hr, int scale) {
  return ClipPair{bicubic_downscale(hr, scale), hr, scale};
}

/// Resamples a C x T x H x W (or N x C x T x H x W) volume to (t, h, w): bicubic
/// in space, linear in time. Used for per-stage targets and the bicubic baseline.
template <typename T>
Tensor<T> resample_video(const Tensor<T>& x, const Extent3& shape) {
  if (x.rank() < 3) throw ShapeError("resample_video needs T x H x W axes");
  Tensor<T> y = bicubic_resize(x, shape[1], shape[2]);
  const std::size_t r = y.rank();
  y = nn::detail::resample_axis(y, r - 3, shape[0]);
  clamp_unit(y);
  return y;
}

}  // namespace progsr::data
