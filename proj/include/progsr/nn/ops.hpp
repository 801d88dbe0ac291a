#pragma once

#include <cmath>
#include <vector>

#include "progsr/nn/autograd.hpp"
#include "progsr/nn/conv.hpp"
#include "progsr/nn/resample.hpp"

namespace progsr::nn {

namespace detail {

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename T>
void accumulate(Node<T>& parent, const Tensor<T>& g) {
  if (!parent.requires_grad) return;
  auto& buf = parent.grad_buffer();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

// Like accumulate, but takes ownership: the tensor becomes the parent's
// gradient when it has none yet.
template <typename T>
void accumulate_owned(Node<T>& parent, Tensor<T>&& g) {
  if (!parent.requires_grad) return;
  if (parent.grad.empty()) {
    parent.grad = std::move(g);
    return;
  }
  T* buf = parent.grad.data();
  const T* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += src[i];
}

}  // namespace detail

template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvGeometry& g) {
  static const Tensor<T> no_bias;
  Tensor<T> y = conv3d_forward(x.value(), weight.value(), bias.defined() ? bias.value() : no_bias, g);
  std::vector<Var<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(std::move(y), inputs, [g](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    Tensor<T>* dx = px.requires_grad ? &px.grad_buffer() : nullptr;
    Tensor<T>* dw = pw.requires_grad ? &pw.grad_buffer() : nullptr;
    Tensor<T>* db = nullptr;
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) db = &self.parents[2]->grad_buffer();
    conv3d_backward(px.value, pw.value, g, self.grad, dx, dw, db);
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  Tensor<T> y = x.value();
  for (auto& v : y.values()) v = v > T{0} ? v : v * slope;
  return make_result<T>(std::move(y), {x}, [slope](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    // The node's own gradient is released after this call, so reuse it.
    Tensor<T> g = std::move(self.grad);
    const T* v = self.value.data();
    T* d = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] *= v[i] > T{0} ? T{1} : slope;
    detail::accumulate_owned(p, std::move(g));
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.values()) v = T{1} / (T{1} + std::exp(-v));
  return make_result<T>(std::move(y), {x}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T s = self.value[i];
      g[i] += self.grad[i] * s * (T{1} - s);
    }
  });
}

/// Clamp to [0, 1]; zero gradient where the clamp is active.
template <typename T>
Var<T> clamp01(const Var<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.values()) v = std::min(std::max(v, T{0}), T{1});
  return make_result<T>(std::move(y), {x}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T> g = std::move(self.grad);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = p.value[i];
      if (v < T{0} || v > T{1}) g[i] = T{0};
    }
    detail::accumulate_owned(p, std::move(g));
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& self) {
    detail::accumulate(*self.parents[1], self.grad);
    detail::accumulate_owned(*self.parents[0], std::move(self.grad));
  });
}

/// wa * a + wb * b
template <typename T>
Var<T> axpby(T wa, const Var<T>& a, T wb, const Var<T>& b) {
  detail::require_same_shape(a, b, "axpby");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = wa * a.value()[i] + wb * b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [wa, wb](Node<T>& self) {
    for (int k = 0; k < 2; ++k) {
      auto& p = *self.parents[static_cast<std::size_t>(k)];
      if (!p.requires_grad) continue;
      const T w = k == 0 ? wa : wb;
      auto& g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * self.grad[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> y = a.value();
  for (auto& v : y.values()) v *= s;
  return make_result<T>(std::move(y), {a}, [s](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

/// Adds a constant (non-differentiable) tensor.
template <typename T>
Var<T> add_constant(const Var<T>& a, const Tensor<T>& c) {
  if (a.shape() != c.shape()) throw ShapeError("add_constant: shape mismatch");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += c[i];
  return make_result<T>(std::move(y), {a}, [](Node<T>& self) {
    detail::accumulate_owned(*self.parents[0], std::move(self.grad));
  });
}

/// Concatenates rank-5 tensors along the channel axis.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  Dims5 d0 = Dims5::of(parts[0].shape());
  std::int64_t channels = 0;
  for (const auto& p : parts) {
    const Dims5 d = Dims5::of(p.shape());
    if (d.n != d0.n || d.t != d0.t || d.h != d0.h || d.w != d0.w) {
      throw ShapeError("concat_channels: incompatible " + shape_str(p.shape()));
    }
    channels += d.c;
  }
  const Dims5 yd{d0.n, channels, d0.t, d0.h, d0.w};
  Tensor<T> y(yd.shape());
  std::vector<std::int64_t> widths;
  for (std::int64_t n = 0; n < yd.n; ++n) {
    std::int64_t offset = 0;
    for (const auto& p : parts) {
      const std::int64_t c = p.shape()[1];
      const std::int64_t block = c * yd.volume();
      std::copy_n(p.value().data() + n * block, block, y.data() + yd.index(n, offset, 0, 0, 0));
      offset += c;
    }
  }
  for (const auto& p : parts) widths.push_back(p.shape()[1]);
  return make_result<T>(std::move(y), parts, [widths, yd](Node<T>& self) {
    for (std::int64_t n = 0; n < yd.n; ++n) {
      std::int64_t offset = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        const std::int64_t block = widths[k] * yd.volume();
        auto& p = *self.parents[k];
        if (p.requires_grad) {
          auto& g = p.grad_buffer();
          const T* src = self.grad.data() + yd.index(n, offset, 0, 0, 0);
          T* dst = g.data() + n * block;
          for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
        }
        offset += widths[k];
      }
    }
  });
}

/// v[n,c,t,h,w] * m[n,0,t,h,w]
template <typename T>
Var<T> mul_channel_broadcast(const Var<T>& v, const Var<T>& m) {
  const Dims5 vd = Dims5::of(v.shape());
  const Dims5 md = Dims5::of(m.shape());
  if (md.c != 1 || md.n != vd.n || md.t != vd.t || md.h != vd.h || md.w != vd.w) {
    throw ShapeError("mask " + shape_str(m.shape()) + " does not match video " + shape_str(v.shape()));
  }
  Tensor<T> y(v.shape());
  const std::int64_t vol = vd.volume();
  for (std::int64_t n = 0; n < vd.n; ++n)
    for (std::int64_t c = 0; c < vd.c; ++c) {
      const T* a = v.value().data() + vd.index(n, c, 0, 0, 0);
      const T* b = m.value().data() + md.index(n, 0, 0, 0, 0);
      T* d = y.data() + vd.index(n, c, 0, 0, 0);
      for (std::int64_t i = 0; i < vol; ++i) d[i] = a[i] * b[i];
    }
  return make_result<T>(std::move(y), {v, m}, [vd, md](Node<T>& self) {
    auto& pv = *self.parents[0];
    auto& pm = *self.parents[1];
    const std::int64_t vol = vd.volume();
    for (std::int64_t n = 0; n < vd.n; ++n)
      for (std::int64_t c = 0; c < vd.c; ++c) {
        const T* g = self.grad.data() + vd.index(n, c, 0, 0, 0);
        const T* a = pv.value.data() + vd.index(n, c, 0, 0, 0);
        const T* b = pm.value.data() + md.index(n, 0, 0, 0, 0);
        if (pv.requires_grad) {
          T* d = pv.grad_buffer().data() + vd.index(n, c, 0, 0, 0);
          for (std::int64_t i = 0; i < vol; ++i) d[i] += g[i] * b[i];
        }
        if (pm.requires_grad) {
          T* d = pm.grad_buffer().data() + md.index(n, 0, 0, 0, 0);
          for (std::int64_t i = 0; i < vol; ++i) d[i] += g[i] * a[i];
        }
      }
  });
}

/// Linear interpolation of the trailing (T, H, W) axes.
template <typename T>
Var<T> resize(const Var<T>& x, std::int64_t t, std::int64_t h, std::int64_t w) {
  const std::size_t r = x.shape().size();
  if (r >= 3 && x.shape()[r - 3] == t && x.shape()[r - 2] == h && x.shape()[r - 1] == w) return x;
  Tensor<T> y = resize_linear(x.value(), t, h, w);
  const Shape in_shape = x.shape();
  return make_result<T>(std::move(y), {x}, [in_shape](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    detail::accumulate_owned(p, resize_linear_adjoint(self.grad, in_shape));
  });
}

template <typename T>
Var<T> avg_pool(const Var<T>& x, std::int64_t kt, std::int64_t kh, std::int64_t kw) {
  Tensor<T> y = avg_pool3d(x.value(), kt, kh, kw);
  return make_result<T>(std::move(y), {x}, [kt, kh, kw](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    avg_pool3d_backward(self.grad, kt, kh, kw, p.grad_buffer());
  });
}

/// N x C x T x H x W -> N x C
template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Dims5 d = Dims5::of(x.shape());
  Tensor<T> y({d.n, d.c});
  const std::int64_t vol = d.volume();
  for (std::int64_t n = 0; n < d.n; ++n)
    for (std::int64_t c = 0; c < d.c; ++c) {
      const T* src = x.value().data() + d.index(n, c, 0, 0, 0);
      T acc{0};
      for (std::int64_t i = 0; i < vol; ++i) acc += src[i];
      y[static_cast<std::size_t>(n * d.c + c)] = acc / static_cast<T>(vol);
    }
  return make_result<T>(std::move(y), {x}, [d](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    const std::int64_t vol = d.volume();
    for (std::int64_t n = 0; n < d.n; ++n)
      for (std::int64_t c = 0; c < d.c; ++c) {
        const T v = self.grad[static_cast<std::size_t>(n * d.c + c)] / static_cast<T>(vol);
        T* dst = g.data() + d.index(n, c, 0, 0, 0);
        for (std::int64_t i = 0; i < vol; ++i) dst[i] += v;
      }
  });
}

/// x: N x F, weight: K x F, bias: K  ->  N x K
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const std::int64_t n = x.shape()[0], f = x.shape()[1], k = weight.shape()[0];
  if (weight.shape()[1] != f || bias.shape()[0] != k) throw ShapeError("linear: shape mismatch");
  Tensor<T> y({n, k});
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < k; ++j) {
      T acc = bias.value()[static_cast<std::size_t>(j)];
      for (std::int64_t q = 0; q < f; ++q) {
        acc += x.value()[static_cast<std::size_t>(i * f + q)] *
               weight.value()[static_cast<std::size_t>(j * f + q)];
      }
      y[static_cast<std::size_t>(i * k + j)] = acc;
    }
  return make_result<T>(std::move(y), {x, weight, bias}, [n, f, k](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < k; ++j) {
        const T g = self.grad[static_cast<std::size_t>(i * k + j)];
        if (pb.requires_grad) pb.grad_buffer()[static_cast<std::size_t>(j)] += g;
        for (std::int64_t q = 0; q < f; ++q) {
          if (px.requires_grad) {
            px.grad_buffer()[static_cast<std::size_t>(i * f + q)] +=
                g * pw.value[static_cast<std::size_t>(j * f + q)];
          }
          if (pw.requires_grad) {
            pw.grad_buffer()[static_cast<std::size_t>(j * f + q)] +=
                g * px.value[static_cast<std::size_t>(i * f + q)];
          }
        }
      }
  });
}

/// Scalar mean of all entries.
template <typename T>
Var<T> mean(const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().values()) acc += static_cast<double>(v);
  const T inv = T{1} / static_cast<T>(x.value().size());
  const T m = static_cast<T>(acc / static_cast<double>(x.value().size()));
  return make_result<T>(Tensor<T>({1}, m), {x}, [inv](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    const T v = self.grad[0] * inv;
    for (auto& e : g.values()) e += v;
  });
}

/// Weighted sum of scalars.
template <typename T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& weights) {
  if (terms.size() != weights.size()) throw ShapeError("weighted_sum: arity mismatch");
  T acc{0};
  for (std::size_t i = 0; i < terms.size(); ++i) acc += weights[i] * terms[i].item();
  return make_result<T>(Tensor<T>({1}, acc), terms, [weights](Node<T>& self) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      auto& p = *self.parents[i];
      if (p.requires_grad) p.grad_buffer()[0] += weights[i] * self.grad[0];
    }
  });
}

}  // namespace progsr::nn
