#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <vector>

#include "progsr/core/tensor.hpp"
#include "progsr/nn/blas.hpp"

namespace progsr::nn {

/// Kernel extent, stride and zero padding of a 3D convolution, per (T, H, W).
struct ConvGeometry {
  std::array<std::int64_t, 3> kernel{3, 3, 3};
  std::array<std::int64_t, 3> stride{1, 1, 1};
  std::array<std::int64_t, 3> pad{1, 1, 1};

  static ConvGeometry same(std::int64_t k) {
    return {{k, k, k}, {1, 1, 1}, {k / 2, k / 2, k / 2}};
  }

  std::int64_t taps() const { return kernel[0] * kernel[1] * kernel[2]; }
  bool pointwise() const {
    return taps() == 1 && stride == std::array<std::int64_t, 3>{1, 1, 1} &&
           pad == std::array<std::int64_t, 3>{0, 0, 0};
  }

  std::int64_t out_extent(std::size_t axis, std::int64_t in) const {
    const std::int64_t span = in + 2 * pad[axis] - kernel[axis];
    if (span < 0) {
      throw ShapeError("convolution kernel larger than padded input along axis " +
                       std::to_string(axis));
    }
    return span / stride[axis] + 1;
  }
};

namespace detail {

// Gathers the receptive fields of output frame `to` into col[K x P], where
// K = Cin * taps and P = Ho * Wo.
template <typename T>
void im2col_frame(const T* x, const Dims5& xd, std::int64_t n, std::int64_t to,
                  const ConvGeometry& g, std::int64_t ho_n, std::int64_t wo_n, T* col) {
  const auto [kt, kh, kw] = g.kernel;
  const auto [st, sh, sw] = g.stride;
  const auto [pt, ph, pw] = g.pad;
  const std::int64_t p_count = ho_n * wo_n;
  std::int64_t row = 0;
  for (std::int64_t ci = 0; ci < xd.c; ++ci) {
    for (std::int64_t dt = 0; dt < kt; ++dt) {
      const std::int64_t it = to * st - pt + dt;
      const bool t_ok = it >= 0 && it < xd.t;
      for (std::int64_t dh = 0; dh < kh; ++dh) {
        for (std::int64_t dw = 0; dw < kw; ++dw, ++row) {
          T* dst = col + row * p_count;
          if (!t_ok) {
            std::memset(dst, 0, sizeof(T) * static_cast<std::size_t>(p_count));
            continue;
          }
          const T* src_frame = x + xd.index(n, ci, it, 0, 0);
          for (std::int64_t oh = 0; oh < ho_n; ++oh) {
            const std::int64_t ih = oh * sh - ph + dh;
            T* out_row = dst + oh * wo_n;
            if (ih < 0 || ih >= xd.h) {
              std::memset(out_row, 0, sizeof(T) * static_cast<std::size_t>(wo_n));
              continue;
            }
            const T* src_row = src_frame + ih * xd.w;
            if (sw == 1) {
              // Valid output columns satisfy 0 <= ow - pw + dw < W.
              const std::int64_t lo = std::max<std::int64_t>(0, pw - dw);
              const std::int64_t hi = std::min<std::int64_t>(wo_n, xd.w + pw - dw);
              for (std::int64_t ow = 0; ow < std::min(lo, wo_n); ++ow) out_row[ow] = T{0};
              if (hi > lo) {
                std::memcpy(out_row + lo, src_row + (lo - pw + dw),
                            sizeof(T) * static_cast<std::size_t>(hi - lo));
              }
              for (std::int64_t ow = std::max(hi, lo); ow < wo_n; ++ow) out_row[ow] = T{0};
            } else {
              for (std::int64_t ow = 0; ow < wo_n; ++ow) {
                const std::int64_t iw = ow * sw - pw + dw;
                out_row[ow] = (iw >= 0 && iw < xd.w) ? src_row[iw] : T{0};
              }
            }
          }
        }
      }
    }
  }
}

// Scatter-adds col[K x P] back into dx; adjoint of im2col_frame.
template <typename T>
void col2im_frame(const T* col, const Dims5& xd, std::int64_t n, std::int64_t to,
                  const ConvGeometry& g, std::int64_t ho_n, std::int64_t wo_n, T* dx) {
  const auto [kt, kh, kw] = g.kernel;
  const auto [st, sh, sw] = g.stride;
  const auto [pt, ph, pw] = g.pad;
  const std::int64_t p_count = ho_n * wo_n;
  std::int64_t row = 0;
  for (std::int64_t ci = 0; ci < xd.c; ++ci) {
    for (std::int64_t dt = 0; dt < kt; ++dt) {
      const std::int64_t it = to * st - pt + dt;
      const bool t_ok = it >= 0 && it < xd.t;
      for (std::int64_t dh = 0; dh < kh; ++dh) {
        for (std::int64_t dw = 0; dw < kw; ++dw, ++row) {
          if (!t_ok) continue;
          const T* src = col + row * p_count;
          T* dst_frame = dx + xd.index(n, ci, it, 0, 0);
          for (std::int64_t oh = 0; oh < ho_n; ++oh) {
            const std::int64_t ih = oh * sh - ph + dh;
            if (ih < 0 || ih >= xd.h) continue;
            const T* in_row = src + oh * wo_n;
            T* dst_row = dst_frame + ih * xd.w;
            if (sw == 1) {
              const std::int64_t lo = std::max<std::int64_t>(0, pw - dw);
              const std::int64_t hi = std::min<std::int64_t>(wo_n, xd.w + pw - dw);
              T* d = dst_row + (lo - pw + dw);
              for (std::int64_t ow = lo; ow < hi; ++ow) d[ow - lo] += in_row[ow];
            } else {
              for (std::int64_t ow = 0; ow < wo_n; ++ow) {
                const std::int64_t iw = ow * sw - pw + dw;
                if (iw >= 0 && iw < xd.w) dst_row[iw] += in_row[ow];
              }
            }
          }
        }
      }
    }
  }
}


// Direct stride-1 kernels. Output rows are processed in chunks of one 64-byte vector
// columns with a block of kCoBlock output channels held in registers.
template <typename T>
inline constexpr std::int64_t kLanesFor = 64 / static_cast<std::int64_t>(sizeof(T));

inline std::int64_t round_up(std::int64_t v, std::int64_t m) { return (v + m - 1) / m * m; }

// Copies x[n] into a zero-padded buffer [C][T+2pt][H+2ph][row], where `row`
// leaves room for whole output chunks plus the kernel overhang.
template <typename T>
std::vector<T> pad_input(const T* x, const Dims5& xd, std::int64_t n, std::int64_t pt,
                         std::int64_t ph, std::int64_t pw, std::int64_t tp, std::int64_t hp,
                         std::int64_t row) {
  std::vector<T> buf(static_cast<std::size_t>(xd.c * tp * hp * row), T{0});
  for (std::int64_t c = 0; c < xd.c; ++c)
    for (std::int64_t t = 0; t < xd.t; ++t)
      for (std::int64_t h = 0; h < xd.h; ++h) {
        const T* src = x + xd.index(n, c, t, h, 0);
        T* dst = buf.data() + ((c * tp + t + pt) * hp + h + ph) * row + pw;
        std::copy_n(src, xd.w, dst);
      }
  return buf;
}

template <typename T>
using LaneVec [[gnu::vector_size(64)]] = T;

template <typename T>
inline LaneVec<T> load_lanes(const T* p) {
  LaneVec<T> v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <typename T, int kCoBlock, int kRows>
inline void direct_forward_rows(const T* xp, std::int64_t cin, std::int64_t tp, std::int64_t hp,
                                std::int64_t row, const T* wr, std::int64_t kt, std::int64_t kh,
                                std::int64_t kw, std::int64_t to, std::int64_t ho,
                                std::int64_t ho_n, std::int64_t wo_n, std::int64_t ch,
                                std::int64_t co0, std::int64_t cout, std::int64_t out_volume,
                                T* y, bool accumulate) {
  using V = LaneVec<T>;
  constexpr std::int64_t lanes = kLanesFor<T>;
  V acc[kRows][kCoBlock];
  for (int r = 0; r < kRows; ++r)
    for (int c = 0; c < kCoBlock; ++c) acc[r][c] = V{};
  const T* wp = wr;
  for (std::int64_t ci = 0; ci < cin; ++ci) {
    for (std::int64_t dt = 0; dt < kt; ++dt) {
      for (std::int64_t dh = 0; dh < kh; ++dh) {
        const T* xrow = xp + ((ci * tp + to + dt) * hp + ho + dh) * row + ch * lanes;
        for (std::int64_t dw = 0; dw < kw; ++dw, wp += kCoBlock) {
          V xv[kRows];
          for (int r = 0; r < kRows; ++r) xv[r] = load_lanes(xrow + r * row + dw);
          for (int c = 0; c < kCoBlock; ++c) {
            const T wc = wp[c];
            for (int r = 0; r < kRows; ++r) acc[r][c] += wc * xv[r];
          }
        }
      }
    }
  }
  const std::int64_t w0 = ch * lanes;
  const std::int64_t valid = std::min<std::int64_t>(lanes, wo_n - w0);
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCoBlock && co0 + c < cout; ++c) {
      T* dst = y + (co0 + c) * out_volume + (to * ho_n + ho + r) * wo_n + w0;
      if (accumulate) {
        for (std::int64_t l = 0; l < valid; ++l) dst[l] += acc[r][c][l];
      } else {
        for (std::int64_t l = 0; l < valid; ++l) dst[l] = acc[r][c][l];
      }
    }
  }
}

template <typename T, int kCoBlock>
void direct_forward_block(const T* xp, std::int64_t cin, std::int64_t tp, std::int64_t hp,
                          std::int64_t row, const T* wr, std::int64_t kt, std::int64_t kh,
                          std::int64_t kw, std::int64_t to_n, std::int64_t ho_n,
                          std::int64_t wo_n, std::int64_t co0, std::int64_t cout,
                          std::int64_t out_volume, T* y, bool accumulate) {
  // Output rows are taken kRows at a time so each weight broadcast feeds
  // several accumulators.
  constexpr int kRows = kCoBlock <= 4 ? 4 : 2;
  const std::int64_t chunks = (wo_n + kLanesFor<T> - 1) / kLanesFor<T>;
  for (std::int64_t to = 0; to < to_n; ++to) {
    std::int64_t ho = 0;
    for (; ho + kRows <= ho_n; ho += kRows) {
      for (std::int64_t ch = 0; ch < chunks; ++ch) {
        direct_forward_rows<T, kCoBlock, kRows>(xp, cin, tp, hp, row, wr, kt, kh, kw, to, ho,
                                                ho_n, wo_n, ch, co0, cout, out_volume, y,
                                                accumulate);
      }
    }
    for (; ho < ho_n; ++ho) {
      for (std::int64_t ch = 0; ch < chunks; ++ch) {
        direct_forward_rows<T, kCoBlock, 1>(xp, cin, tp, hp, row, wr, kt, kh, kw, to, ho, ho_n,
                                            wo_n, ch, co0, cout, out_volume, y, accumulate);
      }
    }
  }
}

// y[n] (+)= conv(x[n], w) for stride 1; weight layout Cout x Cin x kt x kh x kw.
template <typename T>
void direct_conv(const T* x, const Dims5& xd, const T* weight, std::int64_t cout,
                 const ConvGeometry& g, T* y, const Dims5& yd, bool accumulate) {
  const auto [kt, kh, kw] = g.kernel;
  const auto [pt, ph, pw] = g.pad;
  const std::int64_t tp = xd.t + 2 * pt, hp = xd.h + 2 * ph;
  const std::int64_t row = round_up(yd.w, kLanesFor<T>) + kw - 1;
  const std::int64_t taps = kt * kh * kw;
  const int block = cout <= 4 ? 4 : 8;
  const std::int64_t blocks = (cout + block - 1) / block;
  // Rearranged weights: [block][ci][tap][c_in_block], zero-filled past cout.
  std::vector<T> wr(static_cast<std::size_t>(blocks * xd.c * taps * block), T{0});
  for (std::int64_t co = 0; co < cout; ++co)
    for (std::int64_t ci = 0; ci < xd.c; ++ci)
      for (std::int64_t k = 0; k < taps; ++k) {
        const std::int64_t b = co / block, c = co % block;
        wr[static_cast<std::size_t>(((b * xd.c + ci) * taps + k) * block + c)] =
            weight[(co * xd.c + ci) * taps + k];
      }
  for (std::int64_t n = 0; n < xd.n; ++n) {
    const std::vector<T> xp = pad_input(x, xd, n, pt, ph, pw, tp, hp, row);
    T* yn = y + yd.index(n, 0, 0, 0, 0);
    for (std::int64_t b = 0; b < blocks; ++b) {
      const T* wb = wr.data() + b * xd.c * taps * block;
      if (block == 4) {
        direct_forward_block<T, 4>(xp.data(), xd.c, tp, hp, row, wb, kt, kh, kw, yd.t, yd.h,
                                   yd.w, b * block, cout, yd.volume(), yn, accumulate);
      } else {
        direct_forward_block<T, 8>(xp.data(), xd.c, tp, hp, row, wb, kt, kh, kw, yd.t, yd.h,
                                   yd.w, b * block, cout, yd.volume(), yn, accumulate);
      }
    }
  }
}

// dx[n] += correlation of dy with the flipped, transposed kernel.
template <typename T>
void direct_conv_input_grad(const T* dy, const Dims5& yd, const T* weight, const ConvGeometry& g,
                            T* dx, const Dims5& xd) {
  const auto [kt, kh, kw] = g.kernel;
  const std::int64_t taps = kt * kh * kw;
  std::vector<T> wt(static_cast<std::size_t>(xd.c * yd.c * taps));
  for (std::int64_t co = 0; co < yd.c; ++co)
    for (std::int64_t ci = 0; ci < xd.c; ++ci)
      for (std::int64_t a = 0; a < kt; ++a)
        for (std::int64_t b = 0; b < kh; ++b)
          for (std::int64_t c = 0; c < kw; ++c) {
            const std::int64_t src = (((co * xd.c + ci) * kt + a) * kh + b) * kw + c;
            const std::int64_t dst =
                (((ci * yd.c + co) * kt + (kt - 1 - a)) * kh + (kh - 1 - b)) * kw + (kw - 1 - c);
            wt[static_cast<std::size_t>(dst)] = weight[src];
          }
  ConvGeometry flipped = g;
  for (int i = 0; i < 3; ++i) flipped.pad[i] = g.kernel[i] - 1 - g.pad[i];
  direct_conv(dy, yd, wt.data(), xd.c, flipped, dx, xd, true);
}

template <typename T, int kCoBlock>
void direct_weight_grad_block(const T* xp, std::int64_t cin, std::int64_t tp, std::int64_t hp,
                              std::int64_t row, const T* dyp, std::int64_t co0,
                              std::int64_t cout, std::int64_t to_n, std::int64_t ho_n,
                              std::int64_t chunks, std::int64_t kt, std::int64_t kh,
                              std::int64_t kw, T* partial) {
  using V = LaneVec<T>;
  constexpr std::int64_t lanes = kLanesFor<T>;
  // partial layout: [ci][dt][dh][dw][c][lane]
  const std::int64_t yrow = chunks * lanes;
  const std::int64_t rows = to_n * ho_n;
  // Rows per tile, sized so the dy tile stays cache resident while the
  // accumulators stay in registers.
  const std::int64_t tile = std::max<std::int64_t>(1, 4096 / yrow);
  const T* dybase[kCoBlock];
  for (int c = 0; c < kCoBlock; ++c) {
    dybase[c] = dyp + std::min(co0 + c, cout - 1) * rows * yrow;
  }
  for (std::int64_t r0 = 0; r0 < rows; r0 += tile) {
    const std::int64_t r1 = std::min(rows, r0 + tile);
    for (std::int64_t ci = 0; ci < cin; ++ci)
      for (std::int64_t dt = 0; dt < kt; ++dt)
        for (std::int64_t dh = 0; dh < kh; ++dh) {
          T* pbase = partial + ((ci * kt + dt) * kh + dh) * kw * kCoBlock * lanes;
          if (kw == 3) {
            // All three kernel columns at once: each dy vector feeds three accumulators.
            V acc[3][kCoBlock];
            for (int d = 0; d < 3; ++d)
              for (int c = 0; c < kCoBlock; ++c)
                acc[d][c] = load_lanes(pbase + (d * kCoBlock + c) * lanes);
            for (std::int64_t r = r0; r < r1; ++r) {
              const std::int64_t to = r / ho_n, ho = r % ho_n;
              const T* xrow = xp + ((ci * tp + to + dt) * hp + ho + dh) * row;
              const std::int64_t yoff = r * yrow;
              for (std::int64_t ch = 0; ch < chunks; ++ch) {
                const V x0 = load_lanes(xrow + ch * lanes);
                const V x1 = load_lanes(xrow + ch * lanes + 1);
                const V x2 = load_lanes(xrow + ch * lanes + 2);
                for (int c = 0; c < kCoBlock; ++c) {
                  const V d = load_lanes(dybase[c] + yoff + ch * lanes);
                  acc[0][c] += d * x0;
                  acc[1][c] += d * x1;
                  acc[2][c] += d * x2;
                }
              }
            }
            for (int d = 0; d < 3; ++d)
              for (int c = 0; c < kCoBlock; ++c)
                std::memcpy(pbase + (d * kCoBlock + c) * lanes, &acc[d][c], sizeof(V));
            continue;
          }
          for (std::int64_t dw = 0; dw < kw; ++dw) {
            T* pacc = pbase + dw * kCoBlock * lanes;
            V acc[kCoBlock];
            for (int c = 0; c < kCoBlock; ++c) acc[c] = load_lanes(pacc + c * lanes);
            for (std::int64_t r = r0; r < r1; ++r) {
              const std::int64_t to = r / ho_n, ho = r % ho_n;
              const T* xrow = xp + ((ci * tp + to + dt) * hp + ho + dh) * row + dw;
              const std::int64_t yoff = r * yrow;
              for (std::int64_t ch = 0; ch < chunks; ++ch) {
                const V xv = load_lanes(xrow + ch * lanes);
                for (int c = 0; c < kCoBlock; ++c) {
                  acc[c] += load_lanes(dybase[c] + yoff + ch * lanes) * xv;
                }
              }
            }
            for (int c = 0; c < kCoBlock; ++c) std::memcpy(pacc + c * lanes, &acc[c], sizeof(V));
          }
        }
  }
}

// dweight += sum over positions of dy * shifted x, stride 1.
template <typename T>
void direct_conv_weight_grad(const T* x, const Dims5& xd, const T* dy, const Dims5& yd,
                             const ConvGeometry& g, T* dweight) {
  const auto [kt, kh, kw] = g.kernel;
  const auto [pt, ph, pw] = g.pad;
  const std::int64_t tp = xd.t + 2 * pt, hp = xd.h + 2 * ph;
  const std::int64_t chunks = (yd.w + kLanesFor<T> - 1) / kLanesFor<T>;
  const std::int64_t row = chunks * kLanesFor<T> + kw - 1;
  const std::int64_t taps = kt * kh * kw;
  const int block = yd.c <= 4 ? 4 : 8;
  for (std::int64_t n = 0; n < xd.n; ++n) {
    const std::vector<T> xp = pad_input(x, xd, n, pt, ph, pw, tp, hp, row);
    // dy with each row zero-extended to whole chunks.
    std::vector<T> dyp(static_cast<std::size_t>(yd.c * yd.t * yd.h * chunks * kLanesFor<T>), T{0});
    for (std::int64_t c = 0; c < yd.c; ++c)
      for (std::int64_t t = 0; t < yd.t; ++t)
        for (std::int64_t h = 0; h < yd.h; ++h) {
          std::copy_n(dy + yd.index(n, c, t, h, 0), yd.w,
                      dyp.data() + ((c * yd.t + t) * yd.h + h) * chunks * kLanesFor<T>);
        }
    for (std::int64_t co0 = 0; co0 < yd.c; co0 += block) {
      std::vector<T> partial(static_cast<std::size_t>(xd.c * taps * block * kLanesFor<T>), T{0});
      if (block == 4) {
        direct_weight_grad_block<T, 4>(xp.data(), xd.c, tp, hp, row, dyp.data(), co0, yd.c,
                                       yd.t, yd.h, chunks, kt, kh, kw, partial.data());
      } else {
        direct_weight_grad_block<T, 8>(xp.data(), xd.c, tp, hp, row, dyp.data(), co0, yd.c,
                                       yd.t, yd.h, chunks, kt, kh, kw, partial.data());
      }
      for (std::int64_t ci = 0; ci < xd.c; ++ci)
        for (std::int64_t k = 0; k < taps; ++k)
          for (int c = 0; c < block && co0 + c < yd.c; ++c) {
            const T* lanes = partial.data() + ((ci * taps + k) * block + c) * kLanesFor<T>;
            T s{0};
            for (int l = 0; l < kLanesFor<T>; ++l) s += lanes[l];
            dweight[((co0 + c) * xd.c + ci) * taps + k] += s;
          }
    }
  }
}

}  // namespace detail

inline Dims5 conv_output_dims(const Dims5& xd, std::int64_t cout, const ConvGeometry& g) {
  return {xd.n, cout, g.out_extent(0, xd.t), g.out_extent(1, xd.h), g.out_extent(2, xd.w)};
}

/// y = conv3d(x, weight) + bias. weight is Cout x Cin x kt x kh x kw.
template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                         const ConvGeometry& g) {
  const Dims5 xd = Dims5::of(x.shape());
  const std::int64_t cout = weight.dim(0);
  if (weight.rank() != 5 || weight.dim(1) != xd.c || weight.dim(2) != g.kernel[0] ||
      weight.dim(3) != g.kernel[1] || weight.dim(4) != g.kernel[2]) {
    throw ShapeError("conv3d weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(x.shape()));
  }
  const Dims5 yd = conv_output_dims(xd, cout, g);
  Tensor<T> y(yd.shape());
  const std::int64_t k = xd.c * g.taps();
  const std::int64_t p_count = yd.h * yd.w;

  if (g.pointwise()) {
    for (std::int64_t n = 0; n < xd.n; ++n) {
      gemm(false, false, static_cast<int>(cout), static_cast<int>(xd.volume()),
           static_cast<int>(xd.c), T{1}, weight.data(), static_cast<int>(k),
           x.data() + xd.index(n, 0, 0, 0, 0), static_cast<int>(xd.volume()), T{0},
           y.data() + yd.index(n, 0, 0, 0, 0), static_cast<int>(yd.volume()));
    }
  } else if (g.stride == std::array<std::int64_t, 3>{1, 1, 1}) {
    detail::direct_conv(x.data(), xd, weight.data(), cout, g, y.data(), yd, false);
  } else {
    std::vector<T> col(static_cast<std::size_t>(k * p_count));
    for (std::int64_t n = 0; n < xd.n; ++n) {
      for (std::int64_t to = 0; to < yd.t; ++to) {
        detail::im2col_frame(x.data(), xd, n, to, g, yd.h, yd.w, col.data());
        gemm(false, false, static_cast<int>(cout), static_cast<int>(p_count),
             static_cast<int>(k), T{1}, weight.data(), static_cast<int>(k), col.data(),
             static_cast<int>(p_count), T{0}, y.data() + yd.index(n, 0, to, 0, 0),
             static_cast<int>(yd.volume()));
      }
    }
  }
  if (!bias.empty()) {
    for (std::int64_t n = 0; n < yd.n; ++n) {
      for (std::int64_t co = 0; co < cout; ++co) {
        T* dst = y.data() + yd.index(n, co, 0, 0, 0);
        const T b = bias[static_cast<std::size_t>(co)];
        for (std::int64_t i = 0; i < yd.volume(); ++i) dst[i] += b;
      }
    }
  }
  return y;
}

/// Accumulates gradients of a conv3d into the provided buffers (any may be null).
template <typename T>
void conv3d_backward(const Tensor<T>& x, const Tensor<T>& weight, const ConvGeometry& g,
                     const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>* dweight, Tensor<T>* dbias) {
  const Dims5 xd = Dims5::of(x.shape());
  const Dims5 yd = Dims5::of(dy.shape());
  const std::int64_t cout = yd.c;
  const std::int64_t k = xd.c * g.taps();
  const std::int64_t p_count = yd.h * yd.w;

  if (dbias) {
    for (std::int64_t n = 0; n < yd.n; ++n) {
      for (std::int64_t co = 0; co < cout; ++co) {
        const T* src = dy.data() + yd.index(n, co, 0, 0, 0);
        T acc{0};
        for (std::int64_t i = 0; i < yd.volume(); ++i) acc += src[i];
        (*dbias)[static_cast<std::size_t>(co)] += acc;
      }
    }
  }

  if (g.pointwise()) {
    for (std::int64_t n = 0; n < xd.n; ++n) {
      const T* dyn = dy.data() + yd.index(n, 0, 0, 0, 0);
      const T* xn = x.data() + xd.index(n, 0, 0, 0, 0);
      if (dweight) {
        gemm(false, true, static_cast<int>(cout), static_cast<int>(xd.c),
             static_cast<int>(xd.volume()), T{1}, dyn, static_cast<int>(yd.volume()), xn,
             static_cast<int>(xd.volume()), T{1}, dweight->data(), static_cast<int>(k));
      }
      if (dx) {
        gemm(true, false, static_cast<int>(xd.c), static_cast<int>(xd.volume()),
             static_cast<int>(cout), T{1}, weight.data(), static_cast<int>(k), dyn,
             static_cast<int>(yd.volume()), T{1}, dx->data() + xd.index(n, 0, 0, 0, 0),
             static_cast<int>(xd.volume()));
      }
    }
    return;
  }

  if (g.stride == std::array<std::int64_t, 3>{1, 1, 1}) {
    if (dweight) detail::direct_conv_weight_grad(x.data(), xd, dy.data(), yd, g, dweight->data());
    if (dx) detail::direct_conv_input_grad(dy.data(), yd, weight.data(), g, dx->data(), xd);
    return;
  }

  std::vector<T> col(static_cast<std::size_t>(k * p_count));
  std::vector<T> dcol(dx ? col.size() : 0);
  for (std::int64_t n = 0; n < xd.n; ++n) {
    for (std::int64_t to = 0; to < yd.t; ++to) {
      const T* dyt = dy.data() + yd.index(n, 0, to, 0, 0);
      if (dweight) {
        detail::im2col_frame(x.data(), xd, n, to, g, yd.h, yd.w, col.data());
        gemm(false, true, static_cast<int>(cout), static_cast<int>(k),
             static_cast<int>(p_count), T{1}, dyt, static_cast<int>(yd.volume()), col.data(),
             static_cast<int>(p_count), T{1}, dweight->data(), static_cast<int>(k));
      }
      if (dx) {
        gemm(true, false, static_cast<int>(k), static_cast<int>(p_count),
             static_cast<int>(cout), T{1}, weight.data(), static_cast<int>(k), dyt,
             static_cast<int>(yd.volume()), T{0}, dcol.data(), static_cast<int>(p_count));
        detail::col2im_frame(dcol.data(), xd, n, to, g, yd.h, yd.w, dx->data());
      }
    }
  }
}

}  // namespace progsr::nn
