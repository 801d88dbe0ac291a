#pragma once

// Straightforward reference implementations used as test oracles. They share
// no code with the library beyond its plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "progsr/core.hpp"
#include "progsr/data/tubes.hpp"
#include "progsr/nn/autograd.hpp"
#include "progsr/nn/conv.hpp"

namespace oracle {

using progsr::Shape;
using progsr::Tensor;

// ---- tensors -----------------------------------------------------------------

inline Tensor<double> random_tensor(Shape s, progsr::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(s));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Direct 7-deep loop convolution with zero padding.
inline Tensor<double> conv3d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                             const progsr::nn::ConvGeometry& g) {
  const auto N = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  const auto O = w.dim(0);
  const auto [kt, kh, kw] = g.kernel;
  const auto [st, sh, sw] = g.stride;
  const auto [pt, ph, pw] = g.pad;
  const auto To = (T + 2 * pt - kt) / st + 1, Ho = (H + 2 * ph - kh) / sh + 1, Wo = (W + 2 * pw - kw) / sw + 1;
  Tensor<double> y({N, O, To, Ho, Wo});
  auto X = [&](std::int64_t n, std::int64_t c, std::int64_t t, std::int64_t h, std::int64_t ww) {
    if (t < 0 || t >= T || h < 0 || h >= H || ww < 0 || ww >= W) return 0.0;
    return x[static_cast<std::size_t>((((n * C + c) * T + t) * H + h) * W + ww)];
  };
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t o = 0; o < O; ++o)
      for (std::int64_t t = 0; t < To; ++t)
        for (std::int64_t h = 0; h < Ho; ++h)
          for (std::int64_t ww = 0; ww < Wo; ++ww) {
            double acc = b[static_cast<std::size_t>(o)];
            for (std::int64_t c = 0; c < C; ++c)
              for (std::int64_t a = 0; a < kt; ++a)
                for (std::int64_t p = 0; p < kh; ++p)
                  for (std::int64_t q = 0; q < kw; ++q) {
                    acc += w[static_cast<std::size_t>((((o * C + c) * kt + a) * kh + p) * kw + q)] *
                           X(n, c, t * st - pt + a, h * sh - ph + p, ww * sw - pw + q);
                  }
            y[static_cast<std::size_t>((((n * O + o) * To + t) * Ho + h) * Wo + ww)] = acc;
          }
  return y;
}

// ---- finite differences ------------------------------------------------------------

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor)
inline double rel_err(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Central differences of `loss` against every entry of every named parameter.
/// Analytic gradients must already sit in the parameters' grad buffers.
/// `stride` > 1 checks every stride-th entry of each tensor (always the first and last).
inline GradCheck check_gradients(
    std::vector<std::pair<std::string, progsr::nn::Var<double>>>& params,
    const std::function<double()>& loss, double h = 1e-5, std::size_t stride = 1, double floor = 1e-6) {
  GradCheck r;
  for (auto& [name, p] : params) {
    Tensor<double>& v = p.mutable_value();
    const Tensor<double> grad = p.grad();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (stride > 1 && i % stride != 0 && i + 1 != v.size()) continue;
      const double keep = v[i];
      v[i] = keep + h;
      const double up = loss();
      v[i] = keep - h;
      const double down = loss();
      v[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad.empty() ? 0.0 : grad[i];
      const double e = rel_err(analytic, numeric, floor);
      ++r.checked;
      if (e > r.max_rel) {
        r.max_rel = e;
        r.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) + " numeric " +
                  std::to_string(numeric);
      }
    }
  }
  return r;
}

// ---- losses --------------------------------------------------------------------

// vhat, v: N x C x T x H x W; m: N x 1 x T x H x W (or empty for weight 1).
inline double l1_weighted(const Tensor<double>& vhat, const Tensor<double>& v, const Tensor<double>* m) {
  const auto N = vhat.dim(0), C = vhat.dim(1), T = vhat.dim(2), H = vhat.dim(3), W = vhat.dim(4);
  double sum = 0.0;
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t h = 0; h < H; ++h)
          for (std::int64_t w = 0; w < W; ++w) {
            const auto i = static_cast<std::size_t>((((n * C + c) * T + t) * H + h) * W + w);
            const double weight = m ? (*m)[static_cast<std::size_t>(((n * T + t) * H + h) * W + w)] : 1.0;
            sum += std::abs(vhat[i] - v[i]) * weight;
          }
  return sum / static_cast<double>(N * C * T * H * W);
}

// Binary cross-entropy summed over classes, averaged over rows.
inline double bce(const std::vector<std::vector<double>>& logits, const std::vector<std::vector<int>>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    for (std::size_t c = 0; c < logits[i].size(); ++c) {
      double p = 1.0 / (1.0 + std::exp(-logits[i][c]));
      p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
      total += y[i][c] ? -std::log(p) : -std::log(1.0 - p);
    }
  return total / static_cast<double>(logits.size());
}

inline double categorical_ce(const std::vector<std::vector<double>>& logits, const std::vector<int>& truth) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double z = 0.0;
    for (double l : logits[i]) z += std::exp(l);
    const double p = std::max(std::exp(logits[i][static_cast<std::size_t>(truth[i])]) / z, 1e-7);
    total -= std::log(p);
  }
  return total / static_cast<double>(logits.size());
}

inline double mean_of(const Tensor<double>& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s / static_cast<double>(t.size());
}

// ---- dataset builder ----------------------------------------------------------

using progsr::data::ActionTube;
using progsr::data::Box;
using progsr::data::ClipRecord;
using progsr::data::MergedTube;

inline double iou(const Box& a, const Box& b) {
  double inter = 0.0;
  // Pixel counting keeps this independent of the interval arithmetic in the library.
  for (std::int64_t y = std::min(a.y, b.y); y < std::max(a.y + a.h, b.y + b.h); ++y)
    for (std::int64_t x = std::min(a.x, b.x); x < std::max(a.x + a.w, b.x + b.w); ++x) {
      const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
      const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
      inter += in_a && in_b;
    }
  const double uni = static_cast<double>(a.w * a.h + b.w * b.h) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline bool overlap(const ActionTube& a, const ActionTube& b, double iou_min, std::int64_t temporal_min) {
  std::int64_t shared = 0;
  bool spatial = false;
  for (std::int64_t f = a.start_frame; f <= a.end_frame; ++f) {
    if (f < b.start_frame || f > b.end_frame) continue;
    ++shared;
    const Box& ba = a.boxes[static_cast<std::size_t>(f - a.start_frame)];
    const Box& bb = b.boxes[static_cast<std::size_t>(f - b.start_frame)];
    spatial = spatial || iou(ba, bb) >= iou_min;
  }
  return shared >= temporal_min && shared > 0 && spatial;
}

// All pairs, then components by repeated flood fill.
inline std::vector<std::set<std::int64_t>> components(const std::vector<ActionTube>& tubes, double iou_min,
                                                      std::int64_t temporal_min) {
  const std::size_t n = tubes.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && overlap(tubes[i], tubes[j], iou_min, temporal_min)) adj[i][j] = true;
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v)
        if (adj[u][v] && comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  std::vector<std::set<std::int64_t>> out(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) out[static_cast<std::size_t>(comp[i])].insert(tubes[i].id);
  return out;
}

// Per-frame label sets and union boxes of one component.
inline MergedTube merge(const std::vector<ActionTube>& tubes, const std::set<std::int64_t>& ids) {
  MergedTube m;
  m.start_frame = INT64_MAX;
  m.end_frame = INT64_MIN;
  for (const auto& t : tubes) {
    if (!ids.count(t.id)) continue;
    m.video_id = t.video_id;
    m.split = t.split;
    m.start_frame = std::min(m.start_frame, t.start_frame);
    m.end_frame = std::max(m.end_frame, t.end_frame);
  }
  m.source_ids.assign(ids.begin(), ids.end());
  for (std::int64_t f = m.start_frame; f <= m.end_frame; ++f) {
    std::set<int> labels;
    std::int64_t x0 = INT64_MAX, y0 = INT64_MAX, x1 = INT64_MIN, y1 = INT64_MIN;
    for (const auto& t : tubes) {
      if (!ids.count(t.id) || f < t.start_frame || f > t.end_frame) continue;
      labels.insert(t.label);
      const Box& b = t.boxes[static_cast<std::size_t>(f - t.start_frame)];
      x0 = std::min(x0, b.x);
      y0 = std::min(y0, b.y);
      x1 = std::max(x1, b.x + b.w);
      y1 = std::max(y1, b.y + b.h);
    }
    m.labels.emplace_back(labels.begin(), labels.end());
    m.boxes.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  return m;
}

// Frame-by-frame scan: a new segment starts wherever the label set differs
// from the previous frame's.
inline std::vector<std::pair<std::int64_t, std::int64_t>> label_runs(const MergedTube& m) {
  std::vector<std::pair<std::int64_t, std::int64_t>> runs;
  for (std::int64_t f = m.start_frame; f <= m.end_frame; ++f) {
    const auto i = static_cast<std::size_t>(f - m.start_frame);
    if (f == m.start_frame || m.labels[i] != m.labels[i - 1]) runs.push_back({f, f});
    else runs.back().second = f;
  }
  return runs;
}

struct PipelineOptions {
  double iou_min = 0.1;
  std::int64_t temporal_min = 1;
  std::int64_t max_hw = 128, min_frames = 16, chunk_len = 128, min_count = 50;
};

/// Whole extraction procedure written as nested scans over the raw tubes.
inline std::pair<std::vector<ClipRecord>, std::vector<int>> pipeline(const std::vector<ActionTube>& tubes,
                                                                     const PipelineOptions& o) {
  std::set<std::string> videos;
  for (const auto& t : tubes) videos.insert(t.video_id);
  std::vector<ClipRecord> records;
  for (const auto& v : videos) {
    std::vector<ActionTube> vt;
    for (const auto& t : tubes)
      if (t.video_id == v) vt.push_back(t);
    for (const auto& ids : components(vt, o.iou_min, o.temporal_min)) {
      const MergedTube m = merge(vt, ids);
      for (auto [s, e] : label_runs(m)) {
        std::int64_t x0 = INT64_MAX, y0 = INT64_MAX, x1 = INT64_MIN, y1 = INT64_MIN;
        for (std::int64_t f = s; f <= e; ++f) {
          const Box& b = m.boxes[static_cast<std::size_t>(f - m.start_frame)];
          x0 = std::min(x0, b.x);
          y0 = std::min(y0, b.y);
          x1 = std::max(x1, b.x + b.w);
          y1 = std::max(y1, b.y + b.h);
        }
        if (x1 - x0 >= o.max_hw || y1 - y0 >= o.max_hw) continue;
        for (std::int64_t cs = s; cs <= e; cs += o.chunk_len) {
          const std::int64_t ce = std::min(e, cs + o.chunk_len - 1);
          if (ce - cs + 1 < o.min_frames) continue;
          ClipRecord r;
          r.video_id = v;
          r.start_frame = cs;
          r.end_frame = ce;
          r.crop = {x0, y0, x1 - x0, y1 - y0};
          r.labels = m.labels[static_cast<std::size_t>(cs - m.start_frame)];
          r.split = m.split;
          records.push_back(r);
        }
      }
    }
  }
  // Histogram of training occurrences; every class seen anywhere is a candidate.
  std::map<int, std::int64_t> hist;
  for (const auto& r : records)
    for (int c : r.labels) hist[c] += r.split == "train" ? 1 : 0;
  std::vector<int> kept;
  for (auto [c, n] : hist)
    if (n >= o.min_count) kept.push_back(c);
  std::vector<ClipRecord> out;
  for (auto r : records) {
    std::vector<int> labels;
    for (int c : r.labels) {
      auto it = std::find(kept.begin(), kept.end(), c);
      if (it != kept.end()) labels.push_back(static_cast<int>(it - kept.begin()));
    }
    std::sort(labels.begin(), labels.end());
    if (labels.empty()) continue;
    r.labels = labels;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), progsr::data::record_less);
  return {out, kept};
}

// ---- metrics -------------------------------------------------------------------

inline double mse_psnr(const Tensor<float>& a, const Tensor<float>& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (double(a[i]) - double(b[i])) * (double(a[i]) - double(b[i]));
  return -10.0 * std::log10(se / static_cast<double>(a.size()));
}

}  // namespace oracle

namespace oracle {

/// Scalar <y, r> as a graph node, so any tensor op can be reduced for gradient checks.
inline progsr::nn::Var<double> dot(const progsr::nn::Var<double>& y, const Tensor<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += y.value()[i] * r[i];
  return progsr::nn::make_result<double>(Tensor<double>({1}, s), {y}, [r](progsr::nn::Node<double>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < r.size(); ++i) g[i] += r[i] * self.grad[0];
  });
}

inline double dot_value(const Tensor<double>& y, const Tensor<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += y[i] * r[i];
  return s;
}

}  // namespace oracle
