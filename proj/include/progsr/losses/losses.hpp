#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsr/core/types.hpp"
#include "progsr/nn/ops.hpp"

namespace progsr::losses {

using nn::Var;

inline constexpr double kProbEps = 1e-7;

struct LossReport {
  double rec = 0.0;
  double att = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
  std::optional<double> act;
};

inline void to_json(nlohmann::json& j, const LossReport& r) {
  j = {{"rec", r.rec}, {"att", r.att}, {"sparsity", r.sparsity}, {"total", r.total}};
  j["act"] = r.act ? nlohmann::json(*r.act) : nlohmann::json(nullptr);
}

/// N x K matrix of 0/1 targets.
template <typename T>
Tensor<T> label_matrix(const std::vector<LabelVector>& labels) {
  if (labels.empty()) throw ShapeError("empty label batch");
  const auto k = static_cast<std::int64_t>(labels.front().num_classes());
  Tensor<T> y({static_cast<std::int64_t>(labels.size()), k});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (static_cast<std::int64_t>(labels[i].num_classes()) != k) throw ShapeError("ragged label batch");
    for (std::int64_t c = 0; c < k; ++c) {
      y[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] = labels[i].y[static_cast<std::size_t>(c)] ? T{1} : T{0};
    }
  }
  return y;
}

namespace detail {

template <typename T>
void check_logits(const Tensor<T>& logits, const Tensor<T>& y) {
  if (logits.rank() != 2 || logits.shape() != y.shape()) {
    throw ShapeError("logits " + shape_str(logits.shape()) + " vs targets " + shape_str(y.shape()));
  }
  for (T v : logits.values()) {
    if (!std::isfinite(static_cast<double>(v))) throw DomainError("non-finite logit");
  }
}

// Numerically stable sigmoid.
inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Map weight for element (n, t, h, w): m is either N x 1 x T x H x W, or T x H x W
// shared by the batch.
template <typename T>
std::int64_t map_index(const Tensor<T>& m, const Dims5& vd, std::int64_t n, std::int64_t s) {
  return m.rank() == 5 ? n * vd.volume() + s : s;
}

template <typename T>
void check_map(const Tensor<T>& m, const Dims5& vd) {
  const bool full = m.rank() == 5 && m.shape() == Shape{vd.n, 1, vd.t, vd.h, vd.w};
  const bool shared = m.rank() == 3 && m.shape() == Shape{vd.t, vd.h, vd.w};
  if (!full && !shared) {
    throw ShapeError("attention map " + shape_str(m.shape()) + " does not fit video " + shape_str(vd.shape()));
  }
}

template <typename T>
Dims5 video_dims(const Tensor<T>& v) {
  if (v.rank() == 4) return {1, v.dim(0), v.dim(1), v.dim(2), v.dim(3)};
  return Dims5::of(v.shape());
}

}  // namespace detail

/// Mean over every element of |vhat - v| * m, with m broadcast over channels
/// (m == nullptr means weight 1). Gradients are written when the pointers are set.
template <typename T>
double reconstruction_loss(const Tensor<T>& vhat, const Tensor<T>& v, const Tensor<T>* m = nullptr,
                           Tensor<T>* d_vhat = nullptr, Tensor<T>* d_m = nullptr) {
  if (vhat.shape() != v.shape()) {
    throw ShapeError("reconstruction: " + shape_str(vhat.shape()) + " vs " + shape_str(v.shape()));
  }
  const Dims5 vd = detail::video_dims(vhat);
  if (m) detail::check_map(*m, vd);
  const std::int64_t vol = vd.volume();
  const double inv = 1.0 / static_cast<double>(vhat.size());
  double acc = 0.0;
  for (std::int64_t n = 0; n < vd.n; ++n)
    for (std::int64_t c = 0; c < vd.c; ++c) {
      const std::int64_t base = (n * vd.c + c) * vol;
      for (std::int64_t s = 0; s < vol; ++s) {
        const auto i = static_cast<std::size_t>(base + s);
        const double diff = static_cast<double>(vhat[i]) - static_cast<double>(v[i]);
        const double w = m ? static_cast<double>((*m)[static_cast<std::size_t>(detail::map_index(*m, vd, n, s))]) : 1.0;
        acc += std::abs(diff) * w;
        if (d_vhat) {
          const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
          (*d_vhat)[i] += static_cast<T>(sgn * w * inv);
        }
        if (d_m) (*d_m)[static_cast<std::size_t>(detail::map_index(*m, vd, n, s))] += static_cast<T>(std::abs(diff) * inv);
      }
    }
  return acc * inv;
}

/// Per-class binary cross-entropy from logits, summed over classes and
/// averaged over the batch. Probabilities are clamped to [eps, 1 - eps].
template <typename T>
double bce_loss(const Tensor<T>& logits, const Tensor<T>& y, Tensor<T>* d_logits = nullptr) {
  detail::check_logits(logits, y);
  const std::int64_t n = logits.dim(0);
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = detail::sigmoid(static_cast<double>(logits[i]));
    const double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
    const double t = static_cast<double>(y[i]);
    acc -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
    if (d_logits && pc == p) (*d_logits)[i] += static_cast<T>((p - t) / static_cast<double>(n));
  }
  return acc / static_cast<double>(n);
}

/// Categorical cross-entropy from logits against one-hot rows, batch-averaged.
template <typename T>
double softmax_ce_loss(const Tensor<T>& logits, const Tensor<T>& y, Tensor<T>* d_logits = nullptr) {
  detail::check_logits(logits, y);
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  double acc = 0.0;
  std::vector<double> p(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < n; ++i) {
    const T* z = logits.data() + i * k;
    const T* t = y.data() + i * k;
    const double zmax = static_cast<double>(*std::max_element(z, z + k));
    double sum = 0.0;
    for (std::int64_t c = 0; c < k; ++c) {
      p[static_cast<std::size_t>(c)] = std::exp(static_cast<double>(z[c]) - zmax);
      sum += p[static_cast<std::size_t>(c)];
    }
    std::int64_t truth = -1;
    for (std::int64_t c = 0; c < k; ++c) {
      p[static_cast<std::size_t>(c)] /= sum;
      if (t[c] != T{0}) {
        if (truth >= 0) throw DomainError("single-label target with more than one class");
        truth = c;
      }
    }
    if (truth < 0) throw DomainError("single-label target without a class");
    const double pt = p[static_cast<std::size_t>(truth)];
    const double pc = std::max(pt, kProbEps);
    acc -= std::log(pc);
    if (d_logits && pc == pt) {
      for (std::int64_t c = 0; c < k; ++c) {
        (*d_logits)[static_cast<std::size_t>(i * k + c)] +=
            static_cast<T>((p[static_cast<std::size_t>(c)] - (c == truth ? 1.0 : 0.0)) / static_cast<double>(n));
      }
    }
  }
  return acc / static_cast<double>(n);
}

template <typename T>
double classification_loss(const Tensor<T>& logits, const Tensor<T>& y, bool multi_label,
                           Tensor<T>* d_logits = nullptr) {
  return multi_label ? bce_loss(logits, y, d_logits) : softmax_ce_loss(logits, y, d_logits);
}

/// Normalised L1 mass of an attention map: the mean weight.
template <typename T>
double attention_mass(const Tensor<T>& m, Tensor<T>* d_m = nullptr) {
  if (m.empty()) throw ShapeError("empty attention map");
  double acc = 0.0;
  for (T v : m.values()) acc += static_cast<double>(v);
  const double inv = 1.0 / static_cast<double>(m.size());
  if (d_m) {
    for (auto& g : d_m->values()) g += static_cast<T>(inv);
  }
  return acc * inv;
}

inline double attention_mass(const AttentionMap& m) { return attention_mass(m.weights()); }

/// Classification term plus lambda_sparsity times the map's mass.
template <typename T>
double attention_loss(const Tensor<T>& logits, const Tensor<T>& y, const Tensor<T>& f_att,
                      double lambda_sparsity, bool multi_label, Tensor<T>* d_logits = nullptr,
                      Tensor<T>* d_f_att = nullptr) {
  const double cls = classification_loss(logits, y, multi_label, d_logits);
  double mass = 0.0;
  if (d_f_att) {
    Tensor<T> g(f_att.shape());
    mass = attention_mass(f_att, &g);
    for (std::size_t i = 0; i < g.size(); ++i) (*d_f_att)[i] += static_cast<T>(lambda_sparsity) * g[i];
  } else {
    mass = attention_mass(f_att);
  }
  return cls + lambda_sparsity * mass;
}

inline double combined_sr_loss(double rec, double att, const LossWeights& w) {
  return w.lambda_rec * rec + w.lambda_att * att;
}

template <typename T>
double action_loss(const Tensor<T>& logits, const Tensor<T>& y, bool multi_label,
                   Tensor<T>* d_logits = nullptr) {
  return classification_loss(logits, y, multi_label, d_logits);
}

// ---- graph versions ------------------------------------------------------------

template <typename T>
Var<T> reconstruction_loss(const Var<T>& vhat, const Tensor<T>& v) {
  const double value = reconstruction_loss<T>(vhat.value(), v);
  return nn::make_result<T>(Tensor<T>({1}, static_cast<T>(value)), {vhat}, [v](nn::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T> g(p.value.shape());
    reconstruction_loss<T>(p.value, v, nullptr, &g);
    for (auto& e : g.values()) e *= self.grad[0];
    nn::detail::accumulate_owned(p, std::move(g));
  });
}

/// f_att is N x 1 x T x H x W and receives a gradient too.
template <typename T>
Var<T> reconstruction_loss(const Var<T>& vhat, const Tensor<T>& v, const Var<T>& f_att) {
  const double value = reconstruction_loss<T>(vhat.value(), v, &f_att.value());
  return nn::make_result<T>(Tensor<T>({1}, static_cast<T>(value)), {vhat, f_att}, [v](nn::Node<T>& self) {
    auto& pv = *self.parents[0];
    auto& pm = *self.parents[1];
    Tensor<T> gv(pv.value.shape()), gm(pm.value.shape());
    reconstruction_loss<T>(pv.value, v, &pm.value, pv.requires_grad ? &gv : nullptr,
                           pm.requires_grad ? &gm : nullptr);
    const T s = self.grad[0];
    if (pv.requires_grad) {
      for (auto& e : gv.values()) e *= s;
      nn::detail::accumulate_owned(pv, std::move(gv));
    }
    if (pm.requires_grad) {
      for (auto& e : gm.values()) e *= s;
      nn::detail::accumulate_owned(pm, std::move(gm));
    }
  });
}

template <typename T>
Var<T> classification_loss(const Var<T>& logits, const Tensor<T>& y, bool multi_label) {
  const double value = classification_loss<T>(logits.value(), y, multi_label);
  return nn::make_result<T>(Tensor<T>({1}, static_cast<T>(value)), {logits},
                            [y, multi_label](nn::Node<T>& self) {
                              auto& p = *self.parents[0];
                              if (!p.requires_grad) return;
                              Tensor<T> g(p.value.shape());
                              classification_loss<T>(p.value, y, multi_label, &g);
                              for (auto& e : g.values()) e *= self.grad[0];
                              nn::detail::accumulate_owned(p, std::move(g));
                            });
}

template <typename T>
Var<T> attention_mass(const Var<T>& m) {
  return nn::mean(m);
}

template <typename T>
Var<T> attention_loss(const Var<T>& logits, const Tensor<T>& y, const Var<T>& f_att,
                      double lambda_sparsity, bool multi_label) {
  return nn::weighted_sum<T>({classification_loss(logits, y, multi_label), attention_mass(f_att)},
                             {T{1}, static_cast<T>(lambda_sparsity)});
}

template <typename T>
Var<T> combined_sr_loss(const Var<T>& rec, const Var<T>& att, const LossWeights& w) {
  return nn::weighted_sum<T>({rec, att}, {static_cast<T>(w.lambda_rec), static_cast<T>(w.lambda_att)});
}

template <typename T>
Var<T> action_loss(const Var<T>& logits, const Tensor<T>& y, bool multi_label) {
  return classification_loss(logits, y, multi_label);
}

}  // namespace progsr::losses
