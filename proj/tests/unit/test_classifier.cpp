#include <gtest/gtest.h>

#include "progsr/classifier/backbone.hpp"
#include "progsr/eval/metrics.hpp"
#include "progsr/losses/losses.hpp"
#include "progsr/nn/adam.hpp"
#include "support/oracles.hpp"

using namespace progsr;
using nn::Var;

namespace {

classifier::Toy3dConfig toy(int k, int width = 4) {
  classifier::Toy3dConfig c;
  c.num_classes = k;
  c.width = width;
  return c;
}

}  // namespace

TEST(Toy3d, AcceptsEveryStageResolution) {
  classifier::Toy3d<float> net(toy(5), 1);
  Rng rng(2);
  for (Shape s : {Shape{2, 3, 4, 28, 28}, Shape{1, 3, 8, 56, 56}, Shape{1, 3, 16, 112, 112}, Shape{1, 3, 4, 14, 14}}) {
    nn::NoGradGuard guard;
    auto logits = net.forward(Var<float>(oracle::random_tensor(s, rng, 0, 1).cast<float>()));
    EXPECT_EQ(logits.shape(), (Shape{s[0], 5}));
    for (float v : logits.value().values()) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_THROW(net.forward(Var<float>(Tensor<float>({1, 3, 2, 28, 28}))), ShapeError);
  EXPECT_THROW(net.forward(Var<float>(Tensor<float>({1, 1, 4, 28, 28}))), ShapeError);
}

TEST(Toy3d, DeterministicGivenSeed) {
  classifier::Toy3d<float> a(toy(3), 7), b(toy(3), 7);
  Rng rng(3);
  Var<float> x(oracle::random_tensor({1, 3, 4, 28, 28}, rng, 0, 1).cast<float>());
  nn::NoGradGuard guard;
  EXPECT_EQ(a.forward(x).value(), a.forward(x).value());
  EXPECT_EQ(a.forward(x).value(), b.forward(x).value());
}

TEST(Toy3d, GradientMatchesFiniteDifferences) {
  classifier::Toy3d<double> net(toy(3, 2), 4);
  Rng rng(5);
  Var<double> x(oracle::random_tensor({1, 3, 4, 14, 14}, rng, 0, 1), true);
  Tensor<double> y({1, 3}, std::vector<double>{1, 0, 1});
  auto loss = [&](const Var<double>& in) { return losses::action_loss(net.forward(in), y, true); };
  nn::backward(loss(x));
  auto params = nn::named_parameters<double>(net);
  auto check = oracle::check_gradients(params, [&] {
    nn::NoGradGuard guard;
    return loss(Var<double>(x.value())).item();
  });
  EXPECT_LT(check.max_rel, 1e-3) << check.worst;
  std::vector<std::pair<std::string, Var<double>>> input{{"x", x}};
  auto cx = oracle::check_gradients(input, [&] {
    nn::NoGradGuard guard;
    return loss(Var<double>(x.value())).item();
  }, 1e-5, 7);
  EXPECT_LT(cx.max_rel, 1e-3) << cx.worst;
}

TEST(Toy3d, OverfitsTinySet) {
  classifier::Toy3d<float> net(toy(4, 8), 11);
  Rng rng(12);
  Tensor<float> x({6, 3, 4, 14, 14});
  std::vector<LabelVector> truth;
  for (std::int64_t i = 0; i < 6; ++i) {
    const int a = static_cast<int>(i % 4), b = static_cast<int>((i + 1) % 4);
    truth.push_back(i < 3 ? make_labels(4, {a}) : make_labels(4, {a, b}));
    // Each class brightens one channel or the temporal contrast so the set is separable.
    for (std::int64_t j = 0; j < 3 * 4 * 14 * 14; ++j) {
      const std::int64_t c = j / (4 * 14 * 14), t = (j / (14 * 14)) % 4;
      double v = 0.1 + 0.05 * rng.uniform();
      for (int cls : {a, b}) {
        if (i >= 3 || cls == a) {
          if (cls < 3 && c == cls) v += 0.5;
          if (cls == 3 && t % 2 == 0) v += 0.3;
        }
      }
      x[static_cast<std::size_t>(i * 3 * 4 * 14 * 14 + j)] = static_cast<float>(v);
    }
  }
  auto y = losses::label_matrix<float>(truth);
  nn::AdamOptions o;
  o.lr = 3e-3;
  o.beta1 = 0.9;
  o.beta2 = 0.999;
  nn::Adam<float> opt(o);
  opt.track(nn::named_parameters<float>(net));
  for (int step = 0; step < 150; ++step) {
    nn::zero_grad<float>(net);
    nn::backward(losses::action_loss(net.forward(Var<float>(x)), y, true));
    opt.step();
  }
  nn::NoGradGuard guard;
  auto pred = classifier::predict_batch(net.forward(Var<float>(x)).value(), true);
  EXPECT_GE(eval::micro_f1(pred, truth), 0.95);
}

TEST(PredictLabels, Examples) {
  std::vector<double> z{3.0, -3.0};
  EXPECT_EQ(classifier::predict_labels<double>(z, true).y, (std::vector<std::uint8_t>{1, 0}));
  std::vector<double> zeros(4, 0.0);
  EXPECT_EQ(classifier::predict_labels<double>(zeros, true).y, (std::vector<std::uint8_t>{1, 1, 1, 1}));
  EXPECT_EQ(classifier::predict_labels<double>(zeros, true, 0.6).count(), 0u);
  std::vector<double> tie{1.0, 2.0, 2.0, -1.0};
  EXPECT_EQ(classifier::predict_labels<double>(tie, false).y, (std::vector<std::uint8_t>{0, 1, 0, 0}));
  EXPECT_THROW(classifier::predict_labels<double>(std::span<const double>(), true), ShapeError);
}

TEST(PredictLabels, SingleLabelInvariantUnderPositiveAffineMaps) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto z = oracle::random_tensor({7}, rng, -4, 4).storage();
    const double a = rng.uniform(0.1, 5), b = rng.uniform(-10, 10);
    auto moved = z;
    for (auto& v : moved) v = a * v + b;
    EXPECT_EQ(classifier::predict_labels<double>(z, false).y, classifier::predict_labels<double>(moved, false).y);
  }
}

TEST(Registry, ToyIsRegisteredAndUnknownNamesFail) {
  auto& reg = classifier::BackboneRegistry<float>::instance();
  EXPECT_TRUE(reg.contains("toy3d"));
  auto net = classifier::make_backbone<float>("toy3d", {{"num_classes", 6}, {"width", 4}}, 1);
  EXPECT_EQ(net->num_classes(), 6);
  EXPECT_EQ(net->name(), "toy3d");
  EXPECT_EQ(net->config()["width"], 4);
  EXPECT_THROW(classifier::make_backbone<float>("i3d", {}, 1), ConfigError);
  EXPECT_THROW(classifier::make_backbone<float>("toy3d", {{"num_classes", 0}}, 1), ConfigError);
}
