#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsr/attention/branch.hpp"
#include "progsr/classifier/backbone.hpp"
#include "progsr/data/degrade.hpp"
#include "progsr/dvsr/model.hpp"
#include "progsr/eval/metrics.hpp"
#include "progsr/io/checkpoint.hpp"
#include "progsr/losses/losses.hpp"
#include "progsr/nn/adam.hpp"
#include "progsr/trainer/config.hpp"

namespace progsr::trainer {

using nn::Var;

/// One training example. `labels` may be empty for reconstruction-only use.
struct Sample {
  VideoClip lr;
  VideoClip hr;
  LabelVector labels;
};

/// Degrades every HR clip by `scale` and pairs it with its labels.
inline std::vector<Sample> make_samples(const std::vector<VideoClip>& hr,
                                        const std::vector<LabelVector>& labels, int scale) {
  if (!labels.empty() && labels.size() != hr.size()) throw DataError("labels and clips differ in count");
  std::vector<Sample> out;
  out.reserve(hr.size());
  for (std::size_t i = 0; i < hr.size(); ++i) {
    out.push_back({data::bicubic_downscale(hr[i], scale), hr[i], labels.empty() ? LabelVector{} : labels[i]});
  }
  return out;
}

/// Stacks C x T x H x W float tensors into an N x C x T x H x W batch.
template <typename T>
Tensor<T> stack(const std::vector<const Tensor<float>*>& items) {
  if (items.empty()) throw ShapeError("cannot stack an empty batch");
  Shape s{static_cast<std::int64_t>(items.size())};
  for (auto d : items.front()->shape()) s.push_back(d);
  Tensor<T> out(s);
  T* dst = out.data();
  for (const auto* t : items) {
    if (t->shape() != items.front()->shape()) throw ShapeError("ragged batch");
    for (float v : t->values()) *dst++ = static_cast<T>(v);
  }
  return out;
}

template <typename T>
struct JointOutputs {
  Var<T> video, map, logits;
  Var<T> rec, att, total;
};

/// Attention-guided objective: weighted reconstruction plus classifier loss on
/// the masked SR output plus the map's sparsity penalty.
template <typename T>
JointOutputs<T> joint_forward(const dvsr::DvsrModel<T>& g, const attention::AttentionBranch<T>& branch,
                              const classifier::ClassifierBackbone<T>& cls, const Var<T>& lr,
                              const Tensor<T>& target, const Tensor<T>& y, const LossWeights& w,
                              bool multi_label) {
  JointOutputs<T> o;
  const int stage = g.current_stage();
  auto res = g.forward(lr, stage, g.alpha());
  o.video = res.video;
  o.map = branch(res.features, g.config().stage_shape(stage));
  o.logits = cls.forward(attention::apply_mask(o.video, o.map));
  o.rec = losses::reconstruction_loss(o.video, target, o.map);
  o.att = losses::attention_loss(o.logits, y, o.map, w.lambda_sparsity, multi_label);
  o.total = losses::combined_sr_loss(o.rec, o.att, w);
  return o;
}

using LogFn = std::function<void(const nlohmann::json&)>;

struct TrainState {
  int phase = 0;
  bool phase1_complete = false;
  bool phase2_complete = false;
  bool baseline = false;  // phase 3 front-end is bicubic instead of the generator
  std::int64_t global_iter = 0;
  std::int64_t phase_iter = 0;
  std::int64_t stage_iter = 0;
  int stage = 1;
  double alpha = 1.0;
  Rng rng;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::vector<nlohmann::json> log;
};

/// Owns the generator, attention branch, classifier and their optimisers and
/// runs the three training phases as resumable step machines.
template <typename T>
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<Sample> data) : cfg_(std::move(cfg)), data_(std::move(data)) {
    cfg_.validate();
    check_data(data_);
    state_.rng = Rng(derive_seed(cfg_.seed, hash_string("sampler")));
    sr_opt_ = nn::Adam<T>(cfg_.sr_optimizer);
    cls_opt_ = nn::Adam<T>(cfg_.classifier_optimizer);
  }

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const TrainConfig& config() const { return cfg_; }
  const TrainState& state() const { return state_; }
  dvsr::DvsrModel<T>& generator() { return dvsr_; }
  const dvsr::DvsrModel<T>& generator() const { return dvsr_; }
  attention::AttentionBranch<T>& attention_branch() { return branch_; }
  classifier::ClassifierBackbone<T>& classifier_net() {
    if (!cls_) throw TransitionError("no classifier built yet");
    return *cls_;
  }
  bool has_generator() const { return dvsr_built_; }
  const std::vector<Sample>& data() const { return data_; }
  void set_log_sink(LogFn fn) { sink_ = std::move(fn); }

  // ---- phase 1: reconstruction-only SR ------------------------------------------

  void start_phase1() {
    const int s = cfg_.progressive ? 1 : cfg_.dvsr.num_stages;
    dvsr_ = dvsr::DvsrModel<T>(cfg_.dvsr, derive_seed(cfg_.seed, hash_string("dvsr")), s);
    dvsr_built_ = true;
    sr_opt_ = nn::Adam<T>(cfg_.sr_optimizer);
    sr_opt_.track(nn::named_parameters<T>(dvsr_));
    enter_phase(1);
    state_.stage = s;
    state_.alpha = 1.0;
    state_.phase1_complete = false;
  }

  std::int64_t stage_length(int stage) const {
    if (!cfg_.progressive) return cfg_.e2e_iterations();
    return stage == 1 ? cfg_.iterations_per_stage : transition_length(cfg_.iterations_per_stage, cfg_.alpha_step);
  }

  bool phase1_done() const {
    return state_.phase == 1 && state_.stage == cfg_.dvsr.num_stages &&
           state_.stage_iter >= stage_length(state_.stage);
  }

  losses::LossReport step_phase1() {
    require_phase(1);
    if (phase1_done()) throw TransitionError("phase 1 already finished");
    if (state_.stage_iter >= stage_length(state_.stage)) {
      dvsr_.set_alpha(1.0);
      dvsr_.grow();
      ++state_.stage;
      state_.stage_iter = 0;
      sr_opt_.track(nn::named_parameters<T>(dvsr_));
    }
    const bool fading = cfg_.progressive && state_.stage > 1;
    state_.alpha = fading ? alpha_schedule(state_.stage_iter, cfg_.alpha_step) : 1.0;
    dvsr_.set_alpha(state_.alpha);

    const auto idx = next_batch();
    Var<T> lr(batch_lr(idx));
    auto res = dvsr_.forward(lr, state_.stage, state_.alpha);
    Var<T> loss = losses::reconstruction_loss(res.video, batch_targets(idx, state_.stage));
    update(loss, sr_opt_);

    losses::LossReport r;
    r.rec = static_cast<double>(loss.item());
    r.total = cfg_.weights.lambda_rec * r.rec;
    finish_step(r);
    if (state_.stage_iter == stage_length(state_.stage)) {
      checkpoint_to("stage" + std::to_string(state_.stage) + ".ckpt");
      if (phase1_done()) state_.phase1_complete = true;
    }
    return r;
  }

  void train_phase1() {
    if (state_.phase != 1) start_phase1();
    while (!phase1_done()) step_phase1();
    state_.phase1_complete = true;
  }

  // ---- phase 2: joint attention-guided training --------------------------------

  void start_phase2() {
    if (!state_.phase1_complete) throw TransitionError("phase 2 needs a finished phase-1 generator");
    require_labels();
    branch_ = attention::AttentionBranch<T>(cfg_.dvsr.width, cfg_.attention_hidden,
                                            derive_seed(cfg_.seed, hash_string("attention")),
                                            cfg_.dvsr.leaky_slope);
    branch_built_ = true;
    build_classifier();
    sr_opt_.track(nn::named_parameters<T>(dvsr_));
    sr_opt_.track(nn::named_parameters<T>(branch_));
    cls_opt_ = nn::Adam<T>(cfg_.classifier_optimizer);
    cls_opt_.track(nn::named_parameters<T>(*cls_));
    enter_phase(2);
  }

  bool phase2_done() const { return state_.phase == 2 && state_.phase_iter >= cfg_.joint_iterations; }

  losses::LossReport step_phase2() {
    require_phase(2);
    if (phase2_done()) throw TransitionError("phase 2 already finished");
    const auto idx = next_batch();
    Var<T> lr(batch_lr(idx));
    auto o = joint_forward(dvsr_, branch_, *cls_, lr, batch_targets(idx, dvsr_.current_stage()),
                           batch_labels(idx), cfg_.weights, cfg_.multi_label);
    nn::zero_grad<T>(dvsr_);
    nn::zero_grad<T>(branch_);
    nn::zero_grad<T>(*cls_);
    nn::backward(o.total);
    sr_opt_.step();
    if (!cfg_.freeze_classifier) cls_opt_.step();

    losses::LossReport r;
    r.rec = static_cast<double>(o.rec.item());
    r.att = static_cast<double>(o.att.item());
    r.sparsity = losses::attention_mass(o.map.value());
    r.total = static_cast<double>(o.total.item());
    finish_step(r);
    if (phase2_done()) {
      state_.phase2_complete = true;
      checkpoint_to("phase2.ckpt");
    }
    return r;
  }

  void train_phase2() {
    if (state_.phase != 2) start_phase2();
    while (!phase2_done()) step_phase2();
  }

  // ---- phase 3: classifier on frozen generator outputs ------------------------

  /// baseline = true swaps the generator for a bicubic resize front-end.
  void start_phase3(bool baseline) {
    if (!baseline && !state_.phase1_complete) throw TransitionError("phase 3 needs a trained generator");
    require_labels();
    state_.baseline = baseline;
    cls_.reset();
    build_classifier();
    cls_opt_ = nn::Adam<T>(cfg_.classifier_optimizer);
    cls_opt_.track(nn::named_parameters<T>(*cls_));
    enter_phase(3);
    build_inputs();
  }

  bool phase3_done() const {
    return state_.phase == 3 && state_.phase_iter >= cfg_.classifier_iterations;
  }

  losses::LossReport step_phase3() {
    require_phase(3);
    if (phase3_done()) throw TransitionError("phase 3 already finished");
    if (inputs_.empty()) build_inputs();
    const auto idx = next_batch();
    std::vector<const Tensor<float>*> items;
    for (auto i : idx) items.push_back(&inputs_[i]);
    Var<T> x(stack<T>(items));
    Var<T> loss = losses::action_loss(cls_->forward(x), batch_labels(idx), cfg_.multi_label);
    update(loss, cls_opt_);

    losses::LossReport r;
    r.act = static_cast<double>(loss.item());
    r.total = *r.act;
    finish_step(r);
    if (phase3_done()) {
      if (dvsr_built_ && nn::parameter_hash<T>(dvsr_) != frozen_hash_) {
        throw Error("generator parameters changed during classifier training");
      }
      checkpoint_to("phase3.ckpt");
    }
    return r;
  }

  void train_phase3(bool baseline) {
    if (state_.phase != 3 || state_.baseline != baseline) start_phase3(baseline);
    while (!phase3_done()) step_phase3();
  }

  // ---- inference ----------------------------------------------------------------

  /// Generator output at the current stage, or the bicubic front-end in baseline mode.
  Tensor<float> front_end(const VideoClip& lr, bool baseline) const {
    if (baseline) return data::resample_video(lr.data, final_shape());
    if (!dvsr_built_) throw TransitionError("no generator built yet");
    nn::NoGradGuard guard;
    Var<T> x(stack<T>({&lr.data}));
    auto res = dvsr_.forward(x, dvsr_.current_stage(), dvsr_.alpha());
    const Shape& s = res.video.shape();
    return res.video.value().template cast<float>().reshaped({s[1], s[2], s[3], s[4]});
  }

  /// Attention map of one clip (T x H x W), after phase 2.
  AttentionMap attention_map(const VideoClip& lr) const {
    if (!branch_built_) throw TransitionError("no attention branch built yet");
    nn::NoGradGuard guard;
    Var<T> x(stack<T>({&lr.data}));
    auto res = dvsr_.forward(x, dvsr_.current_stage(), dvsr_.alpha());
    Var<T> m = branch_(res.features, dvsr_.config().stage_shape(dvsr_.current_stage()));
    return attention::to_attention_map(m.value());
  }

  std::vector<LabelVector> predict(const std::vector<Sample>& samples, bool baseline) const {
    if (!cls_) throw TransitionError("no classifier built yet");
    nn::NoGradGuard guard;
    std::vector<LabelVector> out;
    for (const auto& s : samples) {
      const Tensor<float> in = front_end(s.lr, baseline);
      Var<T> logits = cls_->forward(Var<T>(stack<T>({&in})));
      out.push_back(classifier::predict_batch(logits.value(), cfg_.multi_label, cfg_.threshold).front());
    }
    return out;
  }

  /// F1/accuracy of the classifier plus PSNR of the front-end against the HR clips.
  eval::EvalReport evaluate(const std::vector<Sample>& samples, bool baseline) const {
    if (samples.empty()) throw DataError("nothing to evaluate");
    std::vector<LabelVector> truth;
    for (const auto& s : samples) truth.push_back(s.labels);
    eval::EvalReport r = eval::make_report(predict(samples, baseline), truth, cfg_.multi_label);
    double sum = 0.0;
    std::int64_t finite = 0;
    for (const auto& s : samples) {
      const auto p = eval::psnr(front_end(s.lr, baseline), s.hr.data);
      if (p.infinite) {
        ++r.psnr_infinite;
      } else {
        sum += p.db;
        ++finite;
      }
    }
    r.psnr_mean = finite ? sum / static_cast<double>(finite) : 0.0;
    r.config_hash = config_hash(cfg_);
    return r;
  }

  /// Mean L1 between the generator output and the stage targets over every sample.
  double reconstruction_error(int stage = 0) const {
    nn::NoGradGuard guard;
    if (stage == 0) stage = dvsr_.current_stage();
    double acc = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      Var<T> x(stack<T>({&data_[i].lr.data}));
      auto res = dvsr_.forward(x, stage, stage == dvsr_.current_stage() ? dvsr_.alpha() : 1.0);
      acc += losses::reconstruction_loss<T>(res.video.value(), batch_targets({i}, stage));
    }
    return acc / static_cast<double>(data_.size());
  }

  // ---- persistence ---------------------------------------------------------------

  io::Checkpoint to_checkpoint() const {
    io::Checkpoint ck;
    ck.kind = "train_state";
    ck.config = cfg_;
    auto& m = ck.meta;
    m["phase"] = state_.phase;
    m["phase1_complete"] = state_.phase1_complete;
    m["phase2_complete"] = state_.phase2_complete;
    m["baseline"] = state_.baseline;
    m["global_iter"] = state_.global_iter;
    m["phase_iter"] = state_.phase_iter;
    m["stage_iter"] = state_.stage_iter;
    m["stage"] = state_.stage;
    m["alpha"] = state_.alpha;
    m["rng"] = state_.rng.serialize();
    m["order"] = state_.order;
    m["cursor"] = state_.cursor;
    m["log"] = state_.log;
    m["dvsr_built"] = dvsr_built_;
    m["attention_built"] = branch_built_;
    m["classifier_built"] = static_cast<bool>(cls_);
    m["frozen_hash"] = frozen_hash_;
    auto& self = const_cast<Trainer&>(*this);
    if (dvsr_built_) {
      m["dvsr_stages"] = dvsr_.built_stages();
      m["dvsr_seed"] = dvsr_.seed();
      io::store_module<T>(ck, "dvsr.", self.dvsr_);
    }
    if (branch_built_) io::store_module<T>(ck, "attention.", self.branch_);
    if (cls_) {
      m["classifier_config"] = cls_->config();
      io::store_module<T>(ck, "classifier.", *self.cls_);
    }
    io::store_adam(ck, "sr_adam.", sr_opt_);
    io::store_adam(ck, "cls_adam.", cls_opt_);
    return ck;
  }

  void save_state(const std::filesystem::path& path) const { io::save_checkpoint(path, to_checkpoint()); }

  /// Rebuilds a trainer mid-run. The data must be the same set the run used.
  static std::unique_ptr<Trainer> from_checkpoint(const io::Checkpoint& ck, std::vector<Sample> data) {
    if (ck.kind != "train_state") throw CheckpointError("not a training state checkpoint: " + ck.kind);
    TrainConfig cfg = ck.config.get<TrainConfig>();
    auto t = std::make_unique<Trainer>(cfg, std::move(data));
    const auto& m = ck.meta;
    auto& st = t->state_;
    st.phase = m.at("phase").get<int>();
    st.phase1_complete = m.at("phase1_complete").get<bool>();
    st.phase2_complete = m.at("phase2_complete").get<bool>();
    st.baseline = m.at("baseline").get<bool>();
    st.global_iter = m.at("global_iter").get<std::int64_t>();
    st.phase_iter = m.at("phase_iter").get<std::int64_t>();
    st.stage_iter = m.at("stage_iter").get<std::int64_t>();
    st.stage = m.at("stage").get<int>();
    st.alpha = m.at("alpha").get<double>();
    st.rng.deserialize(m.at("rng").get<std::string>());
    st.order = m.at("order").get<std::vector<std::size_t>>();
    st.cursor = m.at("cursor").get<std::size_t>();
    st.log = m.at("log").get<std::vector<nlohmann::json>>();
    t->frozen_hash_ = m.at("frozen_hash").get<std::uint64_t>();
    if (m.at("dvsr_built").get<bool>()) {
      t->dvsr_ = dvsr::DvsrModel<T>(cfg.dvsr, m.at("dvsr_seed").get<std::uint64_t>(), 1);
      t->dvsr_.set_progress(m.at("dvsr_stages").get<int>(), 1.0);
      t->dvsr_.set_progress(st.stage, st.alpha);
      t->dvsr_built_ = true;
      io::load_module<T>(ck, "dvsr.", t->dvsr_);
      t->sr_opt_.track(nn::named_parameters<T>(t->dvsr_));
    }
    if (m.at("attention_built").get<bool>()) {
      t->branch_ = attention::AttentionBranch<T>(cfg.dvsr.width, cfg.attention_hidden,
                                                 derive_seed(cfg.seed, hash_string("attention")),
                                                 cfg.dvsr.leaky_slope);
      t->branch_built_ = true;
      io::load_module<T>(ck, "attention.", t->branch_);
      t->sr_opt_.track(nn::named_parameters<T>(t->branch_));
    }
    if (m.at("classifier_built").get<bool>()) {
      t->cls_ = classifier::make_backbone<T>(cfg.backbone, m.at("classifier_config"), 0);
      io::load_module<T>(ck, "classifier.", *t->cls_);
      t->cls_opt_.track(nn::named_parameters<T>(*t->cls_));
    }
    io::load_adam(ck, "sr_adam.", t->sr_opt_);
    io::load_adam(ck, "cls_adam.", t->cls_opt_);
    return t;
  }

  static std::unique_ptr<Trainer> load_state(const std::filesystem::path& path, std::vector<Sample> data) {
    return from_checkpoint(io::load_checkpoint(path), std::move(data));
  }

 private:
  static void check_data(const std::vector<Sample>& data) {
    if (data.empty()) throw DataError("training set is empty");
    for (const auto& s : data) {
      if (s.lr.data.empty() || s.hr.data.empty()) throw DataError("sample without clip data");
    }
  }

  Extent3 final_shape() const { return cfg_.dvsr.stage_shape(cfg_.dvsr.num_stages); }

  void enter_phase(int p) {
    state_.phase = p;
    state_.phase_iter = 0;
    state_.stage_iter = 0;
    if (p > 1) {
      state_.stage = dvsr_built_ ? dvsr_.current_stage() : cfg_.dvsr.num_stages;
      state_.alpha = dvsr_built_ ? dvsr_.alpha() : 1.0;
    }
  }

  void require_phase(int p) const {
    if (state_.phase != p) {
      throw TransitionError("phase " + std::to_string(p) + " not started (current phase " +
                            std::to_string(state_.phase) + ")");
    }
  }

  void require_labels() const {
    const std::size_t k = data_.front().labels.num_classes();
    if (k == 0) throw DataError("samples carry no labels");
    for (const auto& s : data_) {
      if (s.labels.num_classes() != k) throw DataError("samples disagree on the class count");
      validate_labels(s.labels, !cfg_.multi_label);
    }
  }

  void build_classifier() {
    if (cls_) return;
    nlohmann::json c = cfg_.classifier;
    c["num_classes"] = static_cast<int>(data_.front().labels.num_classes());
    c["channels"] = cfg_.dvsr.channels;
    cls_ = classifier::make_backbone<T>(cfg_.backbone, c, derive_seed(cfg_.seed, hash_string("classifier")));
  }

  void build_inputs() {
    inputs_.clear();
    frozen_hash_ = dvsr_built_ ? nn::parameter_hash<T>(dvsr_) : 0;
    for (const auto& s : data_) inputs_.push_back(front_end(s.lr, state_.baseline));
  }

  std::vector<std::size_t> next_batch() {
    std::vector<std::size_t> idx;
    for (int b = 0; b < cfg_.batch_size; ++b) {
      if (state_.cursor >= state_.order.size()) {
        state_.order.resize(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) state_.order[i] = i;
        for (std::size_t i = data_.size(); i > 1; --i) {
          std::swap(state_.order[i - 1], state_.order[state_.rng.below(i)]);
        }
        state_.cursor = 0;
      }
      idx.push_back(state_.order[state_.cursor++]);
    }
    return idx;
  }

  Tensor<T> batch_lr(const std::vector<std::size_t>& idx) const {
    std::vector<const Tensor<float>*> items;
    for (auto i : idx) items.push_back(&data_[i].lr.data);
    return stack<T>(items);
  }

  // HR clips resampled to the stage's output shape; cached for the last stage asked.
  Tensor<T> batch_targets(const std::vector<std::size_t>& idx, int stage) const {
    const Extent3 shape = cfg_.dvsr.stage_shape(stage);
    std::vector<const Tensor<float>*> items;
    if (shape == final_shape()) {
      for (auto i : idx) items.push_back(&data_[i].hr.data);
      return stack<T>(items);
    }
    if (target_stage_ != stage) {
      targets_.assign(data_.size(), {});
      target_stage_ = stage;
    }
    for (auto i : idx) {
      if (targets_[i].empty()) targets_[i] = data::resample_video(data_[i].hr.data, shape);
      items.push_back(&targets_[i]);
    }
    return stack<T>(items);
  }

  Tensor<T> batch_labels(const std::vector<std::size_t>& idx) const {
    std::vector<LabelVector> ls;
    for (auto i : idx) ls.push_back(data_[i].labels);
    return losses::label_matrix<T>(ls);
  }

  template <typename Opt>
  void update(const Var<T>& loss, Opt& opt) {
    for (auto& [name, slot] : opt.slots()) slot.param.zero_grad();
    nn::backward(loss);
    opt.step();
  }

  void finish_step(const losses::LossReport& r) {
    ++state_.global_iter;
    ++state_.phase_iter;
    ++state_.stage_iter;
    if (state_.phase_iter % cfg_.log_every == 0 || state_.phase_iter == 1) {
      nlohmann::json line = r;
      line["phase"] = state_.phase;
      line["iter"] = state_.global_iter;
      line["stage"] = state_.stage;
      line["alpha"] = state_.alpha;
      line["wallclock"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      state_.log.push_back(line);
      if (sink_) sink_(line);
    }
    if (cfg_.checkpoint_every > 0 && state_.global_iter % cfg_.checkpoint_every == 0) {
      checkpoint_to("iter_" + std::to_string(state_.global_iter) + ".ckpt");
    }
  }

  void checkpoint_to(const std::string& name) const {
    if (cfg_.checkpoint_dir.empty()) return;
    save_state(std::filesystem::path(cfg_.checkpoint_dir) / name);
  }

  TrainConfig cfg_;
  std::vector<Sample> data_;
  TrainState state_;
  dvsr::DvsrModel<T> dvsr_;
  bool dvsr_built_ = false;
  attention::AttentionBranch<T> branch_;
  bool branch_built_ = false;
  std::unique_ptr<classifier::ClassifierBackbone<T>> cls_;
  nn::Adam<T> sr_opt_, cls_opt_;
  std::vector<Tensor<float>> inputs_;
  std::uint64_t frozen_hash_ = 0;
  mutable std::vector<Tensor<float>> targets_;
  mutable int target_stage_ = 0;
  LogFn sink_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace progsr::trainer
