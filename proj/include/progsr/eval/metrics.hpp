#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsr/core/types.hpp"

namespace progsr::eval {

struct Counts {
  std::int64_t tp = 0, fp = 0, fn = 0;
};

inline double f1_from(const Counts& c) {
  const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline std::vector<Counts> per_class_counts(const std::vector<LabelVector>& pred,
                                            const std::vector<LabelVector>& truth) {
  if (pred.size() != truth.size()) {
    throw ShapeError("predictions (" + std::to_string(pred.size()) + ") and truths (" +
                     std::to_string(truth.size()) + ") differ in length");
  }
  if (pred.empty()) return {};
  const std::size_t k = truth.front().num_classes();
  std::vector<Counts> counts(k);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].num_classes() != k || truth[i].num_classes() != k) throw ShapeError("class count mismatch");
    for (std::size_t c = 0; c < k; ++c) {
      const bool p = pred[i].y[c] != 0, t = truth[i].y[c] != 0;
      counts[c].tp += p && t;
      counts[c].fp += p && !t;
      counts[c].fn += !p && t;
    }
  }
  return counts;
}

/// 2TP / (2TP + FP + FN) pooled over every (sample, class) pair; 1 when nothing
/// is positive on either side.
inline double micro_f1(const std::vector<LabelVector>& pred, const std::vector<LabelVector>& truth) {
  Counts total;
  for (const auto& c : per_class_counts(pred, truth)) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  return f1_from(total);
}

inline std::vector<double> per_class_f1(const std::vector<LabelVector>& pred,
                                        const std::vector<LabelVector>& truth) {
  std::vector<double> out;
  for (const auto& c : per_class_counts(pred, truth)) out.push_back(f1_from(c));
  return out;
}

inline double macro_f1(const std::vector<LabelVector>& pred, const std::vector<LabelVector>& truth) {
  const auto f = per_class_f1(pred, truth);
  if (f.empty()) return 1.0;
  double s = 0.0;
  for (double v : f) s += v;
  return s / static_cast<double>(f.size());
}

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("accuracy: length mismatch");
  if (pred.empty()) throw ShapeError("accuracy of an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

/// Index of the first set bit, -1 if none.
inline int argmax_label(const LabelVector& lv) {
  for (std::size_t c = 0; c < lv.y.size(); ++c) {
    if (lv.y[c]) return static_cast<int>(c);
  }
  return -1;
}

struct Psnr {
  double db = 0.0;
  bool infinite = false;
};

inline Psnr psnr(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("psnr: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  if (a.empty()) throw ShapeError("psnr of empty tensors");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(1.0 / mse), false};
}

inline Psnr psnr(const VideoClip& a, const VideoClip& b) { return psnr(a.data, b.data); }

struct EvalReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::optional<double> accuracy;
  double psnr_mean = 0.0;
  // Samples whose PSNR was infinite (identical clips); excluded from psnr_mean.
  std::int64_t psnr_infinite = 0;
  std::int64_t num_samples = 0;
  std::string config_hash;
};

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"micro_f1", r.micro_f1},         {"macro_f1", r.macro_f1},
       {"per_class_f1", r.per_class_f1}, {"psnr_mean", r.psnr_mean},
       {"psnr_infinite", r.psnr_infinite}, {"num_samples", r.num_samples},
       {"config_hash", r.config_hash}};
  j["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  r.micro_f1 = j.at("micro_f1").get<double>();
  r.macro_f1 = j.value("macro_f1", 0.0);
  r.per_class_f1 = j.at("per_class_f1").get<std::vector<double>>();
  if (j.contains("accuracy") && !j["accuracy"].is_null()) r.accuracy = j["accuracy"].get<double>();
  r.psnr_mean = j.value("psnr_mean", 0.0);
  r.psnr_infinite = j.value("psnr_infinite", std::int64_t{0});
  r.num_samples = j.at("num_samples").get<std::int64_t>();
  r.config_hash = j.value("config_hash", std::string{});
}

/// Builds the classification part of a report; PSNR fields are filled by the caller.
inline EvalReport make_report(const std::vector<LabelVector>& pred, const std::vector<LabelVector>& truth,
                              bool multi_label) {
  EvalReport r;
  r.micro_f1 = micro_f1(pred, truth);
  r.macro_f1 = macro_f1(pred, truth);
  r.per_class_f1 = per_class_f1(pred, truth);
  r.num_samples = static_cast<std::int64_t>(pred.size());
  if (!multi_label && !pred.empty()) {
    std::vector<int> p, t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      p.push_back(argmax_label(pred[i]));
      t.push_back(argmax_label(truth[i]));
    }
    r.accuracy = accuracy(p, t);
  }
  return r;
}

}  // namespace progsr::eval
