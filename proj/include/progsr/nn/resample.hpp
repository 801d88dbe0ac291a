#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "progsr/core/tensor.hpp"

namespace progsr::nn {

// Two-tap linear interpolation weights along one axis, half-pixel aligned
// (output sample i sits at input coordinate (i + 0.5) * in / out - 0.5,
// clamped at the borders).
struct LinearTaps {
  std::vector<std::int64_t> lo, hi;
  std::vector<double> w_hi;

  static LinearTaps make(std::int64_t in, std::int64_t out) {
    LinearTaps taps;
    taps.lo.resize(static_cast<std::size_t>(out));
    taps.hi.resize(static_cast<std::size_t>(out));
    taps.w_hi.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::max(src, 0.0);
      auto i0 = static_cast<std::int64_t>(std::floor(src));
      i0 = std::min(i0, in - 1);
      const std::int64_t i1 = std::min(i0 + 1, in - 1);
      const auto k = static_cast<std::size_t>(i);
      taps.lo[k] = i0;
      taps.hi[k] = i1;
      taps.w_hi[k] = i1 == i0 ? 0.0 : src - static_cast<double>(i0);
    }
    return taps;
  }
};

namespace detail {

// Resamples axis `axis` of a tensor viewed as [outer, in, inner].
template <typename T>
Tensor<T> resample_axis(const Tensor<T>& x, std::size_t axis, std::int64_t out) {
  const Shape& s = x.shape();
  const std::int64_t in = s[axis];
  if (in == out) return x;
  std::int64_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape os = s;
  os[axis] = out;
  Tensor<T> y(os);
  const LinearTaps taps = LinearTaps::make(in, out);
  for (std::int64_t o = 0; o < outer; ++o) {
    const T* src = x.data() + o * in * inner;
    T* dst = y.data() + o * out * inner;
    for (std::int64_t i = 0; i < out; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const T wh = static_cast<T>(taps.w_hi[k]);
      const T wl = T{1} - wh;
      const T* a = src + taps.lo[k] * inner;
      const T* b = src + taps.hi[k] * inner;
      T* d = dst + i * inner;
      for (std::int64_t j = 0; j < inner; ++j) d[j] = wl * a[j] + wh * b[j];
    }
  }
  return y;
}

template <typename T>
Tensor<T> resample_axis_adjoint(const Tensor<T>& dy, std::size_t axis, std::int64_t in) {
  const Shape& s = dy.shape();
  const std::int64_t out = s[axis];
  if (in == out) return dy;
  std::int64_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape is = s;
  is[axis] = in;
  Tensor<T> dx(is);
  const LinearTaps taps = LinearTaps::make(in, out);
  for (std::int64_t o = 0; o < outer; ++o) {
    const T* src = dy.data() + o * out * inner;
    T* dst = dx.data() + o * in * inner;
    for (std::int64_t i = 0; i < out; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const T wh = static_cast<T>(taps.w_hi[k]);
      const T wl = T{1} - wh;
      T* a = dst + taps.lo[k] * inner;
      T* b = dst + taps.hi[k] * inner;
      const T* g = src + i * inner;
      for (std::int64_t j = 0; j < inner; ++j) {
        a[j] += wl * g[j];
        b[j] += wh * g[j];
      }
    }
  }
  return dx;
}

}  // namespace detail

/// Separable (tri)linear resize of the trailing three axes to (t, h, w).
template <typename T>
Tensor<T> resize_linear(const Tensor<T>& x, std::int64_t t, std::int64_t h, std::int64_t w) {
  const std::size_t r = x.rank();
  if (r < 3) throw ShapeError("resize_linear needs at least three axes");
  if (t < 1 || h < 1 || w < 1) throw ShapeError("resize target must be positive");
  Tensor<T> y = detail::resample_axis(x, r - 1, w);
  y = detail::resample_axis(y, r - 2, h);
  return detail::resample_axis(y, r - 3, t);
}

template <typename T>
Tensor<T> resize_linear_adjoint(const Tensor<T>& dy, const Shape& in_shape) {
  const std::size_t r = dy.rank();
  Tensor<T> g = detail::resample_axis_adjoint(dy, r - 3, in_shape[r - 3]);
  g = detail::resample_axis_adjoint(g, r - 2, in_shape[r - 2]);
  return detail::resample_axis_adjoint(g, r - 1, in_shape[r - 1]);
}

/// Average pooling over non-overlapping windows (window == stride, floor mode).
template <typename T>
Tensor<T> avg_pool3d(const Tensor<T>& x, std::int64_t kt, std::int64_t kh, std::int64_t kw) {
  const Dims5 xd = Dims5::of(x.shape());
  const Dims5 yd{xd.n, xd.c, xd.t / kt, xd.h / kh, xd.w / kw};
  if (yd.t < 1 || yd.h < 1 || yd.w < 1) throw ShapeError("pool window larger than input");
  Tensor<T> y(yd.shape());
  const T inv = T{1} / static_cast<T>(kt * kh * kw);
  for (std::int64_t n = 0; n < xd.n; ++n)
    for (std::int64_t c = 0; c < xd.c; ++c)
      for (std::int64_t t = 0; t < yd.t; ++t)
        for (std::int64_t h = 0; h < yd.h; ++h)
          for (std::int64_t w = 0; w < yd.w; ++w) {
            T acc{0};
            for (std::int64_t a = 0; a < kt; ++a)
              for (std::int64_t b = 0; b < kh; ++b)
                for (std::int64_t d = 0; d < kw; ++d)
                  acc += x[static_cast<std::size_t>(
                      xd.index(n, c, t * kt + a, h * kh + b, w * kw + d))];
            y[static_cast<std::size_t>(yd.index(n, c, t, h, w))] = acc * inv;
          }
  return y;
}

template <typename T>
void avg_pool3d_backward(const Tensor<T>& dy, std::int64_t kt, std::int64_t kh, std::int64_t kw,
                         Tensor<T>& dx) {
  const Dims5 xd = Dims5::of(dx.shape());
  const Dims5 yd = Dims5::of(dy.shape());
  const T inv = T{1} / static_cast<T>(kt * kh * kw);
  for (std::int64_t n = 0; n < yd.n; ++n)
    for (std::int64_t c = 0; c < yd.c; ++c)
      for (std::int64_t t = 0; t < yd.t; ++t)
        for (std::int64_t h = 0; h < yd.h; ++h)
          for (std::int64_t w = 0; w < yd.w; ++w) {
            const T g = dy[static_cast<std::size_t>(yd.index(n, c, t, h, w))] * inv;
            for (std::int64_t a = 0; a < kt; ++a)
              for (std::int64_t b = 0; b < kh; ++b)
                for (std::int64_t d = 0; d < kw; ++d)
                  dx[static_cast<std::size_t>(
                      xd.index(n, c, t * kt + a, h * kh + b, w * kw + d))] += g;
          }
}

}  // namespace progsr::nn
