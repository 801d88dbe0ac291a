#include <gtest/gtest.h>

#include <cmath>

#include "progsr/nn/adam.hpp"
#include "progsr/nn/module.hpp"
#include "support/oracles.hpp"

using namespace progsr;
using nn::Var;

namespace {

struct ConvCase {
  Shape x;
  std::int64_t cout;
  nn::ConvGeometry g;
};

std::vector<ConvCase> conv_cases() {
  return {
      {{2, 3, 4, 6, 5}, 4, nn::ConvGeometry::same(3)},
      {{1, 5, 6, 7, 7}, 9, nn::ConvGeometry::same(3)},
      {{1, 4, 8, 6, 6}, 3, {{3, 3, 3}, {2, 1, 1}, {1, 1, 1}}},
      {{2, 6, 3, 5, 4}, 5, nn::ConvGeometry::same(1)},
      {{1, 2, 5, 6, 6}, 3, {{2, 2, 2}, {1, 2, 2}, {1, 1, 1}}},
      {{1, 3, 4, 17, 19}, 16, nn::ConvGeometry::same(3)},
      {{1, 8, 2, 9, 33}, 8, nn::ConvGeometry::same(3)},
      {{1, 3, 3, 4, 4}, 2, {{1, 3, 3}, {1, 1, 1}, {0, 1, 1}}},
  };
}

Shape weight_shape(const ConvCase& c) {
  return {c.cout, c.x[1], c.g.kernel[0], c.g.kernel[1], c.g.kernel[2]};
}

}  // namespace

TEST(Conv3d, ForwardMatchesLoopOracle) {
  Rng rng(5);
  for (const auto& c : conv_cases()) {
    auto x = oracle::random_tensor(c.x, rng);
    auto w = oracle::random_tensor(weight_shape(c), rng);
    auto b = oracle::random_tensor({c.cout}, rng);
    auto y = nn::conv3d_forward(x, w, b, c.g);
    auto ref = oracle::conv3d(x, w, b, c.g);
    ASSERT_EQ(y.shape(), ref.shape());
    EXPECT_LT(oracle::max_abs_diff(y, ref), 1e-11) << shape_str(c.x);
  }
}

TEST(Conv3d, FloatForwardCloseToDouble) {
  Rng rng(6);
  auto x = oracle::random_tensor({1, 8, 4, 10, 10}, rng);
  auto w = oracle::random_tensor({8, 8, 3, 3, 3}, rng, -0.2, 0.2);
  auto b = oracle::random_tensor({8}, rng);
  auto g = nn::ConvGeometry::same(3);
  auto yd = nn::conv3d_forward(x, w, b, g);
  auto yf = nn::conv3d_forward(x.cast<float>(), w.cast<float>(), b.cast<float>(), g).cast<double>();
  EXPECT_LT(oracle::max_abs_diff(yd, yf), 1e-4);
}

TEST(Conv3d, GradientsMatchFiniteDifferencesOfOracle) {
  Rng rng(9);
  for (const auto& c : conv_cases()) {
    if (shape_numel(c.x) > 800) continue;
    Var<double> x(oracle::random_tensor(c.x, rng), true);
    Var<double> w(oracle::random_tensor(weight_shape(c), rng), true);
    Var<double> b(oracle::random_tensor({c.cout}, rng), true);
    Var<double> y = nn::conv3d(x, w, b, c.g);
    const auto r = oracle::random_tensor(y.shape(), rng);
    nn::backward(oracle::dot(y, r));
    std::vector<std::pair<std::string, Var<double>>> params{{"x", x}, {"w", w}, {"b", b}};
    auto check = oracle::check_gradients(params, [&] {
      return oracle::dot_value(oracle::conv3d(x.value(), w.value(), b.value(), c.g), r);
    });
    EXPECT_LT(check.max_rel, 1e-6) << shape_str(c.x) << " " << check.worst;
  }
}

TEST(Conv3d, RejectsBadShapes) {
  Rng rng(1);
  nn::Conv3d<double> conv(3, 4, nn::ConvGeometry::same(3), rng);
  EXPECT_THROW(conv(Var<double>(Tensor<double>({1, 2, 4, 4, 4}))), ShapeError);
  EXPECT_THROW(conv(Var<double>(Tensor<double>({3, 4, 4, 4}))), ShapeError);
}

namespace {

// Finite-difference check of a single-input op reduced by a random dot product.
template <typename Op>
double op_grad_error(const Shape& s, Op op, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Var<double> x(oracle::random_tensor(s, rng, lo, hi), true);
  Var<double> y = op(x);
  const auto r = oracle::random_tensor(y.shape(), rng);
  nn::backward(oracle::dot(y, r));
  std::vector<std::pair<std::string, Var<double>>> params{{"x", x}};
  return oracle::check_gradients(params, [&] {
           nn::NoGradGuard guard;
           return oracle::dot_value(op(Var<double>(x.value())).value(), r);
         }).max_rel;
}

}  // namespace

TEST(Ops, ElementwiseGradients) {
  const Shape s{2, 3, 2, 3, 3};
  EXPECT_LT(op_grad_error(s, [&](const Var<double>& x) { return nn::leaky_relu(x, 0.2); }, 1), 1e-6);
  EXPECT_LT(op_grad_error(s, [](const Var<double>& x) { return nn::sigmoid(x); }, 2), 1e-6);
  EXPECT_LT(op_grad_error(s, [](const Var<double>& x) { return nn::clamp01(x); }, 3, -0.5, 1.5), 1e-6);
  EXPECT_LT(op_grad_error(s, [](const Var<double>& x) { return nn::scale(x, 2.5); }, 4), 1e-6);
  EXPECT_LT(op_grad_error(s, [](const Var<double>& x) { return nn::add(x, x); }, 5), 1e-6);
  EXPECT_LT(op_grad_error(s, [](const Var<double>& x) { return nn::axpby(0.7, x, -1.2, nn::sigmoid(x)); }, 6),
            1e-6);
}

TEST(Ops, StructuralGradients) {
  EXPECT_LT(op_grad_error({2, 3, 4, 5, 6}, [](const Var<double>& x) { return nn::resize(x, 7, 3, 11); }, 7),
            1e-6);
  EXPECT_LT(op_grad_error({1, 2, 4, 6, 6}, [](const Var<double>& x) { return nn::avg_pool(x, 2, 2, 3); }, 8),
            1e-6);
  EXPECT_LT(op_grad_error({2, 3, 2, 3, 4}, [](const Var<double>& x) { return nn::global_avg_pool(x); }, 9),
            1e-6);
  EXPECT_LT(op_grad_error({2, 2, 2, 3, 3},
                          [](const Var<double>& x) {
                            return nn::concat_channels<double>({x, nn::sigmoid(x), x});
                          },
                          10),
            1e-6);
  EXPECT_LT(op_grad_error({3, 2, 2, 2, 2}, [](const Var<double>& x) { return nn::mean(x); }, 11), 1e-6);
  EXPECT_LT(op_grad_error({2, 3, 3, 4, 4},
                          [](const Var<double>& x) {
                            Tensor<double> m({2, 1, 3, 4, 4});
                            for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.1 * static_cast<double>(i % 7);
                            return nn::mul_channel_broadcast(x, Var<double>(m));
                          },
                          12),
            1e-6);
}

TEST(Ops, MaskAndLinearGradientsForBothInputs) {
  Rng rng(13);
  Var<double> v(oracle::random_tensor({2, 3, 2, 3, 3}, rng), true);
  Var<double> m(oracle::random_tensor({2, 1, 2, 3, 3}, rng, 0.0, 1.0), true);
  Var<double> x(oracle::random_tensor({3, 5}, rng), true);
  Var<double> w(oracle::random_tensor({4, 5}, rng), true);
  Var<double> b(oracle::random_tensor({4}, rng), true);
  const auto r1 = oracle::random_tensor({2, 3, 2, 3, 3}, rng);
  const auto r2 = oracle::random_tensor({3, 4}, rng);
  auto total = [&] {
    return nn::weighted_sum<double>(
        {oracle::dot(nn::mul_channel_broadcast(v, m), r1), oracle::dot(nn::linear(x, w, b), r2)}, {1.0, 0.7});
  };
  nn::backward(total());
  std::vector<std::pair<std::string, Var<double>>> params{{"v", v}, {"m", m}, {"x", x}, {"w", w}, {"b", b}};
  auto check = oracle::check_gradients(params, [&] {
    nn::NoGradGuard guard;
    return total().item();
  });
  EXPECT_LT(check.max_rel, 1e-6) << check.worst;
}

TEST(Resize, AdjointIdentity) {
  Rng rng(3);
  const Shape in{2, 3, 4, 5, 6};
  auto x = oracle::random_tensor(in, rng);
  auto y = oracle::random_tensor({2, 3, 8, 9, 3}, rng);
  const double lhs = oracle::dot_value(nn::resize_linear(x, 8, 9, 3), y);
  const double rhs = oracle::dot_value(x, nn::resize_linear_adjoint(y, in));
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Resize, PreservesConstantsAndRange) {
  Tensor<double> c({1, 1, 3, 4, 4}, 0.37);
  auto y = nn::resize_linear(c, 6, 8, 8);
  for (double v : y.values()) EXPECT_NEAR(v, 0.37, 1e-15);
  Rng rng(4);
  auto r = oracle::random_tensor({1, 1, 4, 7, 7}, rng, 0.0, 1.0);
  for (double v : nn::resize_linear(r, 8, 28, 28).values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Resize, DoublingMatchesHandComputedTaps) {
  // 1-D doubling of [0, 1]: samples at -0.25 (clamped to 0), 0.25, 0.75, 1.25 (clamped).
  Tensor<double> x({1, 1, 2}, std::vector<double>{0.0, 1.0});
  auto y = nn::resize_linear(x, 1, 1, 4);
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_DOUBLE_EQ(y[1], 0.25);
  EXPECT_DOUBLE_EQ(y[2], 0.75);
  EXPECT_DOUBLE_EQ(y[3], 1.0);
}

TEST(Autograd, NoGradGuardDetaches) {
  Var<double> x(Tensor<double>({2}, 1.0), true);
  {
    nn::NoGradGuard guard;
    auto y = nn::scale(x, 2.0);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(nn::scale(x, 2.0).requires_grad());
}

TEST(Autograd, LeafGradientsAccumulateAcrossBackwardCalls) {
  Var<double> x(Tensor<double>({1}, 3.0), true);
  nn::backward(nn::scale(x, 2.0));
  nn::backward(nn::scale(x, 2.0));
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
}

TEST(Adam, ZeroLearningRateLeavesParametersBitIdentical) {
  Rng rng(2);
  nn::Conv3d<float> conv(2, 3, nn::ConvGeometry::same(3), rng);
  auto before = nn::parameter_hash<float>(conv);
  nn::AdamOptions o;
  o.lr = 0.0;
  nn::Adam<float> opt(o);
  opt.track(nn::named_parameters<float>(conv));
  Var<float> x(Tensor<float>({1, 2, 3, 4, 4}, 0.5f));
  nn::backward(nn::mean(conv(x)));
  opt.step();
  EXPECT_EQ(nn::parameter_hash<float>(conv), before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps), about lr * sign(g).
  Var<double> p(Tensor<double>({2}, std::vector<double>{1.0, -1.0}), true);
  nn::Adam<double> opt;
  opt.track({{"p", p}});
  nn::backward(oracle::dot(p, Tensor<double>({2}, std::vector<double>{3.0, -0.5})));
  opt.step();
  EXPECT_NEAR(p.value()[0], 1.0 - 2e-4, 1e-10);
  EXPECT_NEAR(p.value()[1], -1.0 + 2e-4, 1e-10);
  EXPECT_EQ(opt.slots().at("p").steps, 1);
}

TEST(Adam, NewParametersStartTheirOwnStepCount) {
  Var<double> a(Tensor<double>({1}, 1.0), true), b(Tensor<double>({1}, 1.0), true);
  nn::Adam<double> opt;
  opt.track({{"a", a}});
  for (int i = 0; i < 3; ++i) {
    a.zero_grad();
    nn::backward(nn::scale(a, 1.0));
    opt.step();
  }
  opt.track({{"a", a}, {"b", b}});
  a.zero_grad();
  nn::backward(nn::add(nn::scale(a, 1.0), nn::scale(b, 1.0)));
  opt.step();
  EXPECT_EQ(opt.slots().at("a").steps, 4);
  EXPECT_EQ(opt.slots().at("b").steps, 1);
}

TEST(Module, KaimingBoundsAndDeterminism) {
  Rng r1(10), r2(10);
  nn::Conv3d<double> a(4, 5, nn::ConvGeometry::same(3), r1), b(4, 5, nn::ConvGeometry::same(3), r2);
  EXPECT_EQ(nn::parameter_hash<double>(a), nn::parameter_hash<double>(b));
  const double bound = std::sqrt(2.0 / 1.04) * std::sqrt(3.0 / (4 * 27));
  for (auto& [name, v] : nn::named_parameters<double>(a)) {
    for (double x : v.value().values()) EXPECT_LE(std::abs(x), bound);
  }
  EXPECT_EQ(nn::count_parameters<double>(a), 5 * 4 * 27 + 5);
}
