#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsr/core/types.hpp"
#include "progsr/dvsr/blocks.hpp"

namespace progsr::dvsr {

struct DvsrConfig {
  int channels = 3;
  int width = 64;
  int growth = 32;
  int num_stages = 3;
  int input_frames = 16;
  int input_size = 14;
  // Residual scaling inside RDB/RRDB; 1 is a plain add.
  double residual_scale = 1.0;
  double leaky_slope = 0.2;
  int decoder_convs = 1;
  // Halve the decoder width at every stage after the first (floor: min_decoder_width).
  bool taper_decoder = false;
  int min_decoder_width = 4;
  // Add the linearly resized input to every projection head output.
  bool input_skip = false;

  void validate() const {
    if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
    if (width < 1 || growth < 1) throw ConfigError("width and growth must be positive");
    if (num_stages < 1 || num_stages > 6) throw ConfigError("num_stages must be in [1,6]");
    if (input_frames < 4 || input_frames % 4 != 0) throw ConfigError("input_frames must be a multiple of 4");
    if (input_size < 1) throw ConfigError("input_size must be positive");
    if (decoder_convs < 1) throw ConfigError("decoder_convs must be >= 1");
    if (!(residual_scale > 0.0)) throw ConfigError("residual_scale must be positive");
  }

  /// Output (T, H, W) of stage s: T doubles per stage starting from
  /// input_frames / 4, H and W double from input_size.
  Extent3 stage_shape(int stage) const {
    if (stage < 1 || stage > num_stages) {
      throw StageError("stage " + std::to_string(stage) + " outside [1," +
                       std::to_string(num_stages) + "]");
    }
    const std::int64_t t = static_cast<std::int64_t>(input_frames / 4) << (stage - 1);
    const std::int64_t hw = static_cast<std::int64_t>(input_size) << stage;
    return {t, hw, hw};
  }

  std::int64_t decoder_width(int stage) const {
    if (!taper_decoder) return width;
    return std::max<std::int64_t>(std::min(width, min_decoder_width), width >> (stage - 1));
  }
};

inline void to_json(nlohmann::json& j, const DvsrConfig& c) {
  j = {{"channels", c.channels},         {"width", c.width},
       {"growth", c.growth},             {"num_stages", c.num_stages},
       {"input_frames", c.input_frames}, {"input_size", c.input_size},
       {"residual_scale", c.residual_scale}, {"leaky_slope", c.leaky_slope},
       {"decoder_convs", c.decoder_convs},   {"taper_decoder", c.taper_decoder},
       {"min_decoder_width", c.min_decoder_width}, {"input_skip", c.input_skip}};
}

inline void from_json(const nlohmann::json& j, DvsrConfig& c) {
  DvsrConfig d;
  c.channels = j.value("channels", d.channels);
  c.width = j.value("width", d.width);
  c.growth = j.value("growth", d.growth);
  c.num_stages = j.value("num_stages", d.num_stages);
  c.input_frames = j.value("input_frames", d.input_frames);
  c.input_size = j.value("input_size", d.input_size);
  c.residual_scale = j.value("residual_scale", d.residual_scale);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  c.decoder_convs = j.value("decoder_convs", d.decoder_convs);
  c.taper_decoder = j.value("taper_decoder", d.taper_decoder);
  c.min_decoder_width = j.value("min_decoder_width", d.min_decoder_width);
  c.input_skip = j.value("input_skip", d.input_skip);
}

/// Blend used by both fade-in sites: alpha * fresh + (1 - alpha) * previous.
/// The endpoints return one operand unchanged.
template <typename T>
Var<T> fade_in_merge(const Var<T>& previous, const Var<T>& fresh, double alpha) {
  if (previous.shape() != fresh.shape()) {
    throw ShapeError("fade-in paths differ: " + shape_str(previous.shape()) + " vs " +
                     shape_str(fresh.shape()));
  }
  if (alpha < 0.0 || alpha > 1.0) throw RangeError("alpha outside [0,1]");
  if (alpha == 1.0) return fresh;
  if (alpha == 0.0) return previous;
  return nn::axpby(static_cast<T>(alpha), fresh, static_cast<T>(1.0 - alpha), previous);
}

/// Decoder-side fade: the previous stage's output is first interpolated to the
/// new stage's shape.
template <typename T>
Var<T> fade_in_output(const Var<T>& previous_output, const Var<T>& fresh_output, double alpha) {
  const Shape& s = fresh_output.shape();
  return fade_in_merge(nn::resize(previous_output, s[2], s[3], s[4]), fresh_output, alpha);
}

template <typename T>
struct DvsrResult {
  Var<T> video;     // N x C x T x H x W in [0,1]
  Var<T> features;  // encoder output, tapped by the attention branch
};

/// Progressive dense video super-resolution generator.
template <typename T>
class DvsrModel {
 public:
  DvsrModel() = default;

  /// A model with `stages` blocks built and alpha = 1.
  DvsrModel(DvsrConfig config, std::uint64_t seed, int stages = 1)
      : config_(config), seed_(seed) {
    config_.validate();
    if (stages < 1 || stages > config_.num_stages) throw StageError("invalid initial stage count");
    const auto w = static_cast<std::int64_t>(config_.width);
    Rng r0 = block_rng("encoder.conv_in");
    conv_in_ = nn::Conv3d<T>(config_.channels, w, nn::ConvGeometry::same(3), r0);
    const nn::ConvGeometry reduce{{3, 3, 3}, {2, 1, 1}, {1, 1, 1}};
    Rng r1 = block_rng("encoder.reduce1");
    reduce1_ = nn::Conv3d<T>(w, w, reduce, r1);
    Rng r2 = block_rng("encoder.reduce2");
    reduce2_ = nn::Conv3d<T>(w, w, reduce, r2);
    for (int s = 1; s <= stages; ++s) add_stage_blocks(s);
    stage_ = stages;
    alpha_ = 1.0;
  }

  const DvsrConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int current_stage() const { return stage_; }
  int built_stages() const { return static_cast<int>(rrdbs_.size()); }
  double alpha() const { return alpha_; }

  void set_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("alpha outside [0,1]");
    alpha_ = alpha;
  }

  /// Appends one encoder RRDB, one decoder stage and one projection head.
  void grow() {
    if (alpha_ != 1.0) throw TransitionError("grow() called before the fade-in finished");
    if (stage_ >= config_.num_stages) throw StageError("model already at its final stage");
    ++stage_;
    if (built_stages() < stage_) add_stage_blocks(stage_);
    alpha_ = 0.0;
  }

  /// Restores stage/alpha bookkeeping (checkpoint load); blocks up to `stage` must exist.
  void set_progress(int stage, double alpha) {
    if (stage < 1 || stage > config_.num_stages) throw StageError("invalid stage");
    while (built_stages() < stage) add_stage_blocks(built_stages() + 1);
    stage_ = stage;
    set_alpha(alpha);
  }

  DvsrResult<T> forward(const Var<T>& lr) const { return forward(lr, stage_, alpha_); }

  DvsrResult<T> forward(const Var<T>& lr, int stage, double alpha) const {
    if (stage < 1 || stage > built_stages()) {
      throw StageError("stage " + std::to_string(stage) + " not built (have " +
                       std::to_string(built_stages()) + ")");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("alpha outside [0,1]");
    const Shape& in = lr.shape();
    if (in.size() != 5 || in[1] != config_.channels || in[2] != config_.input_frames ||
        in[3] != config_.input_size || in[4] != config_.input_size) {
      throw ShapeError("dvsr input must be N x " + std::to_string(config_.channels) + " x " +
                       std::to_string(config_.input_frames) + " x " +
                       std::to_string(config_.input_size) + " x " +
                       std::to_string(config_.input_size) + ", got " + shape_str(in));
    }
    const T slope = static_cast<T>(config_.leaky_slope);
    const bool fading = stage > 1 && alpha < 1.0;

    Var<T> h = nn::leaky_relu(conv_in_(lr), slope);
    h = nn::leaky_relu(reduce1_(h), slope);
    h = nn::leaky_relu(reduce2_(h), slope);
    for (int s = 1; s <= stage; ++s) {
      Var<T> next = rrdbs_[static_cast<std::size_t>(s - 1)](h);
      h = (s == stage && fading) ? fade_in_merge(h, next, alpha) : next;
    }
    const Var<T> encoded = h;

    Var<T> d = encoded;
    Var<T> d_prev;
    for (int s = 1; s <= stage; ++s) {
      d_prev = d;
      d = decode(s, d);
    }
    Var<T> out = project(stage, d, lr);
    if (fading) {
      Var<T> prev = nn::clamp01(project(stage - 1, d_prev, lr));
      out = fade_in_output(prev, out, alpha);
    }
    return {nn::clamp01(out), encoded};
  }

  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
    conv_in_.visit(prefix + "encoder.conv_in", fn);
    reduce1_.visit(prefix + "encoder.reduce1", fn);
    reduce2_.visit(prefix + "encoder.reduce2", fn);
    for (std::size_t i = 0; i < rrdbs_.size(); ++i) {
      const std::string s = std::to_string(i + 1);
      rrdbs_[i].visit(prefix + "encoder.rrdb" + s, fn);
      for (std::size_t k = 0; k < decoders_[i].size(); ++k) {
        decoders_[i][k].visit(prefix + "decoder" + s + ".conv" + std::to_string(k + 1), fn);
      }
      heads_[i].first.visit(prefix + "head" + s + ".conv3", fn);
      heads_[i].second.visit(prefix + "head" + s + ".conv1", fn);
    }
  }

  const Rrdb<T>& rrdb(int stage) const { return rrdbs_.at(static_cast<std::size_t>(stage - 1)); }

 private:
  Rng block_rng(const std::string& name) const {
    return Rng(derive_seed(seed_, hash_string(name)));
  }

  void add_stage_blocks(int s) {
    const std::string id = std::to_string(s);
    const std::int64_t w = config_.width;
    Rng rr = block_rng("encoder.rrdb" + id);
    rrdbs_.emplace_back(w, config_.growth, rr, config_.residual_scale, config_.leaky_slope);
    std::vector<nn::Conv3d<T>> convs;
    const std::int64_t in_w = s == 1 ? w : config_.decoder_width(s - 1);
    const std::int64_t out_w = config_.decoder_width(s);
    for (int k = 0; k < config_.decoder_convs; ++k) {
      Rng rd = block_rng("decoder" + id + ".conv" + std::to_string(k + 1));
      convs.emplace_back(k == 0 ? in_w : out_w, out_w, nn::ConvGeometry::same(3), rd);
    }
    decoders_.push_back(std::move(convs));
    Rng rh3 = block_rng("head" + id + ".conv3");
    Rng rh1 = block_rng("head" + id + ".conv1");
    heads_.emplace_back(nn::Conv3d<T>(out_w, out_w, nn::ConvGeometry::same(3), rh3),
                        nn::Conv3d<T>(out_w, config_.channels, nn::ConvGeometry::same(1), rh1));
  }

  Var<T> decode(int s, const Var<T>& x) const {
    const Extent3 shape = config_.stage_shape(s);
    // The first stage only doubles space; later stages double time as well.
    Var<T> y = nn::resize(x, shape[0], shape[1], shape[2]);
    for (const auto& conv : decoders_[static_cast<std::size_t>(s - 1)]) {
      y = nn::leaky_relu(conv(y), static_cast<T>(config_.leaky_slope));
    }
    return y;
  }

  Var<T> project(int s, const Var<T>& d, const Var<T>& lr) const {
    const auto& [conv3, conv1] = heads_[static_cast<std::size_t>(s - 1)];
    Var<T> y = conv1(nn::leaky_relu(conv3(d), static_cast<T>(config_.leaky_slope)));
    if (config_.input_skip) {
      const Extent3 shape = config_.stage_shape(s);
      y = nn::add_constant(y, nn::resize_linear(lr.value(), shape[0], shape[1], shape[2]));
    }
    return y;
  }

  DvsrConfig config_;
  std::uint64_t seed_ = 0;
  int stage_ = 1;
  double alpha_ = 1.0;
  nn::Conv3d<T> conv_in_, reduce1_, reduce2_;
  std::vector<Rrdb<T>> rrdbs_;
  std::vector<std::vector<nn::Conv3d<T>>> decoders_;
  std::vector<std::pair<nn::Conv3d<T>, nn::Conv3d<T>>> heads_;
};

template <typename T>
std::int64_t count_params(DvsrModel<T>& model) {
  return nn::count_parameters<T>(model);
}

}  // namespace progsr::dvsr
