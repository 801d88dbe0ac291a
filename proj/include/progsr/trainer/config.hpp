#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "progsr/classifier/backbone.hpp"
#include "progsr/core/hash.hpp"
#include "progsr/core/types.hpp"
#include "progsr/dvsr/model.hpp"
#include "progsr/nn/adam.hpp"

namespace progsr::nn {

inline void to_json(nlohmann::json& j, const AdamOptions& o) {
  j = {{"lr", o.lr}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}, {"clip_norm", o.clip_norm}};
}

inline void from_json(const nlohmann::json& j, AdamOptions& o) {
  AdamOptions d;
  o.lr = j.value("lr", d.lr);
  o.beta1 = j.value("beta1", d.beta1);
  o.beta2 = j.value("beta2", d.beta2);
  o.eps = j.value("eps", d.eps);
  o.clip_norm = j.value("clip_norm", d.clip_norm);
}

}  // namespace progsr::nn

namespace progsr {

inline void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"lambda_rec", w.lambda_rec}, {"lambda_att", w.lambda_att}, {"lambda_sparsity", w.lambda_sparsity}};
}

inline void from_json(const nlohmann::json& j, LossWeights& w) {
  LossWeights d;
  w.lambda_rec = j.value("lambda_rec", d.lambda_rec);
  w.lambda_att = j.value("lambda_att", d.lambda_att);
  w.lambda_sparsity = j.value("lambda_sparsity", d.lambda_sparsity);
}

}  // namespace progsr

namespace progsr::trainer {

struct TrainConfig {
  dvsr::DvsrConfig dvsr;
  std::string backbone = "toy3d";
  nlohmann::json classifier = nlohmann::json::object();  // backbone config; num_classes filled from data
  nn::AdamOptions sr_optimizer;
  nn::AdamOptions classifier_optimizer;
  LossWeights weights;
  int batch_size = 1;
  std::int64_t iterations_per_stage = 2000;
  // Phase 1 without growth: all stages built, alpha = 1. 0 means iterations_per_stage.
  std::int64_t end_to_end_iterations = 0;
  bool progressive = true;
  double alpha_step = 5e-3;
  std::int64_t joint_iterations = 500;
  std::int64_t classifier_iterations = 500;
  bool freeze_classifier = false;  // phase 2: keep the classifier fixed
  int attention_hidden = 16;
  bool multi_label = true;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::int64_t log_every = 1;
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::string checkpoint_dir;

  void validate() const {
    dvsr.validate();
    weights.validate();
    if (!(alpha_step > 0.0 && alpha_step <= 1.0)) throw ConfigError("alpha_step must be in (0,1]");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (iterations_per_stage < 1) throw ConfigError("iterations_per_stage must be >= 1");
    if (end_to_end_iterations < 0 || joint_iterations < 0 || classifier_iterations < 0) {
      throw ConfigError("iteration counts must be >= 0");
    }
    if (attention_hidden < 1) throw ConfigError("attention_hidden must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must be in (0,1)");
    for (const auto* o : {&sr_optimizer, &classifier_optimizer}) {
      if (!(o->lr >= 0.0) || !(o->beta1 >= 0.0 && o->beta1 < 1.0) || !(o->beta2 >= 0.0 && o->beta2 < 1.0) ||
          !(o->eps > 0.0) || !(o->clip_norm >= 0.0)) {
        throw ConfigError("invalid optimizer settings");
      }
    }
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  }

  std::int64_t e2e_iterations() const {
    return end_to_end_iterations > 0 ? end_to_end_iterations : iterations_per_stage;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"dvsr", c.dvsr},
       {"backbone", c.backbone},
       {"classifier", c.classifier},
       {"sr_optimizer", c.sr_optimizer},
       {"classifier_optimizer", c.classifier_optimizer},
       {"weights", c.weights},
       {"batch_size", c.batch_size},
       {"iterations_per_stage", c.iterations_per_stage},
       {"end_to_end_iterations", c.end_to_end_iterations},
       {"progressive", c.progressive},
       {"alpha_step", c.alpha_step},
       {"joint_iterations", c.joint_iterations},
       {"classifier_iterations", c.classifier_iterations},
       {"freeze_classifier", c.freeze_classifier},
       {"attention_hidden", c.attention_hidden},
       {"multi_label", c.multi_label},
       {"threshold", c.threshold},
       {"seed", c.seed},
       {"log_every", c.log_every},
       {"checkpoint_every", c.checkpoint_every},
       {"checkpoint_dir", c.checkpoint_dir}};
}

// Missing keys keep their defaults; unknown keys are rejected so typos surface.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const char* known[] = {"dvsr", "backbone", "classifier", "sr_optimizer", "classifier_optimizer",
                                "weights", "batch_size", "iterations_per_stage", "end_to_end_iterations",
                                "progressive", "alpha_step", "joint_iterations", "classifier_iterations",
                                "freeze_classifier", "attention_hidden", "multi_label", "threshold", "seed",
                                "log_every", "checkpoint_every", "checkpoint_dir"};
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key '" + key + "'");
  }
  TrainConfig d;
  try {
    c.dvsr = j.value("dvsr", d.dvsr);
    c.backbone = j.value("backbone", d.backbone);
    c.classifier = j.value("classifier", d.classifier);
    c.sr_optimizer = j.value("sr_optimizer", d.sr_optimizer);
    c.classifier_optimizer = j.value("classifier_optimizer", d.classifier_optimizer);
    c.weights = j.value("weights", d.weights);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.iterations_per_stage = j.value("iterations_per_stage", d.iterations_per_stage);
    c.end_to_end_iterations = j.value("end_to_end_iterations", d.end_to_end_iterations);
    c.progressive = j.value("progressive", d.progressive);
    c.alpha_step = j.value("alpha_step", d.alpha_step);
    c.joint_iterations = j.value("joint_iterations", d.joint_iterations);
    c.classifier_iterations = j.value("classifier_iterations", d.classifier_iterations);
    c.freeze_classifier = j.value("freeze_classifier", d.freeze_classifier);
    c.attention_hidden = j.value("attention_hidden", d.attention_hidden);
    c.multi_label = j.value("multi_label", d.multi_label);
    c.threshold = j.value("threshold", d.threshold);
    c.seed = j.value("seed", d.seed);
    c.log_every = j.value("log_every", d.log_every);
    c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
    c.checkpoint_dir = j.value("checkpoint_dir", d.checkpoint_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

/// Hash of the fields that affect results; logging and checkpoint placement are left out.
inline std::string config_hash(const TrainConfig& c) {
  nlohmann::json j = c;
  for (const char* k : {"log_every", "checkpoint_every", "checkpoint_dir"}) j.erase(k);
  return hex64(hash_string(j.dump()));
}

/// Fade-in coefficient for the step-th iteration of a transition.
inline double alpha_schedule(std::int64_t step, double alpha_step) {
  if (step < 0) throw RangeError("alpha schedule step must be >= 0");
  if (!(alpha_step > 0.0 && alpha_step <= 1.0)) throw ConfigError("alpha_step must be in (0,1]");
  return std::min(1.0, static_cast<double>(step) * alpha_step);
}

/// Iterations needed for alpha to reach 1 and then take one step at alpha = 1.
inline std::int64_t transition_length(std::int64_t iterations, double alpha_step) {
  const auto ramp = static_cast<std::int64_t>(std::ceil(1.0 / alpha_step - 1e-9));
  return std::max(iterations, ramp + 1);
}

}  // namespace progsr::trainer
