#pragma once

#include <string>
#include <vector>

#include "progsr/nn/module.hpp"

namespace progsr::dvsr {

using nn::Var;

/// Residual dense block: five densely connected 3x3x3 convs, a 1x1x1 local
/// fusion back to the input width, and a residual add. The fusion conv starts
/// at zero, so a fresh block is the identity.
template <typename T>
class Rdb {
 public:
  static constexpr int kLayers = 5;

  Rdb() = default;
  Rdb(std::int64_t width, std::int64_t growth, Rng& rng, double residual_scale = 1.0,
      double slope = 0.2)
      : width_(width), residual_scale_(residual_scale), slope_(slope) {
    for (int i = 0; i < kLayers; ++i) {
      convs_.emplace_back(width + i * growth, growth, nn::ConvGeometry::same(3), rng);
    }
    fusion_ = nn::Conv3d<T>(width + kLayers * growth, width, nn::ConvGeometry::same(1), rng,
                            nn::Init::zeros);
  }

  Var<T> operator()(const Var<T>& x) const {
    if (x.shape().size() != 5 || x.shape()[1] != width_) {
      throw ShapeError("rdb expects width " + std::to_string(width_) + ", got " +
                       shape_str(x.shape()));
    }
    std::vector<Var<T>> features{x};
    for (const auto& conv : convs_) {
      Var<T> y = nn::leaky_relu(conv(nn::concat_channels(features)), static_cast<T>(slope_));
      features.push_back(std::move(y));
    }
    Var<T> fused = fusion_(nn::concat_channels(features));
    if (residual_scale_ == 1.0) return nn::add(x, fused);
    return nn::axpby(T{1}, x, static_cast<T>(residual_scale_), fused);
  }

  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].visit(prefix + ".conv" + std::to_string(i + 1), fn);
    }
    fusion_.visit(prefix + ".fusion", fn);
  }

 private:
  std::int64_t width_ = 0;
  double residual_scale_ = 1.0;
  double slope_ = 0.2;
  std::vector<nn::Conv3d<T>> convs_;
  nn::Conv3d<T> fusion_;
};

/// Three residual dense blocks with an outer skip:
/// y = x + s * (rdb3(rdb2(rdb1(x))) - x).
/// With s = 1 the skip folds into the chain; with zero-initialised fusions the
/// block is the identity for every s.
template <typename T>
class Rrdb {
 public:
  Rrdb() = default;
  Rrdb(std::int64_t width, std::int64_t growth, Rng& rng, double residual_scale = 1.0,
       double slope = 0.2)
      : residual_scale_(residual_scale) {
    for (int i = 0; i < 3; ++i) blocks_.emplace_back(width, growth, rng, residual_scale, slope);
  }

  Var<T> operator()(const Var<T>& x) const {
    Var<T> y = x;
    for (const auto& b : blocks_) y = b(y);
    if (residual_scale_ == 1.0) return y;
    return nn::axpby(static_cast<T>(1.0 - residual_scale_), x, static_cast<T>(residual_scale_), y);
  }

  const Rdb<T>& block(std::size_t i) const { return blocks_.at(i); }
  double residual_scale() const { return residual_scale_; }

  void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i].visit(prefix + ".rdb" + std::to_string(i + 1), fn);
    }
  }

 private:
  double residual_scale_ = 1.0;
  std::vector<Rdb<T>> blocks_;
};

}  // namespace progsr::dvsr
