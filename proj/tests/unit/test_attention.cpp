#include <gtest/gtest.h>

#include <algorithm>

#include "progsr/attention/branch.hpp"
#include "progsr/losses/losses.hpp"
#include "support/oracles.hpp"

using namespace progsr;
using nn::Var;

TEST(AttentionBranch, RangeAndShape) {
  attention::AttentionBranch<double> branch(4, 3, 1);
  Rng rng(2);
  Var<double> f(oracle::random_tensor({2, 4, 4, 14, 14}, rng, -5, 5));
  auto m = branch(f, {4, 28, 28});
  EXPECT_EQ(m.shape(), (Shape{2, 1, 4, 28, 28}));
  for (double v : m.value().values()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  EXPECT_NO_THROW(attention::to_attention_map(m.value(), 1));
  EXPECT_THROW(branch(Var<double>(Tensor<double>({4, 4, 4, 4})), {4, 8, 8}), ShapeError);
  EXPECT_THROW(branch(f, {0, 8, 8}), ShapeError);
}

TEST(AttentionBranch, GradientMatchesFiniteDifferences) {
  attention::AttentionBranch<double> branch(4, 4, 3);
  Rng rng(4);
  Var<double> f(oracle::random_tensor({1, 4, 2, 3, 3}, rng), true);
  const auto r = oracle::random_tensor({1, 1, 4, 6, 6}, rng);
  nn::backward(oracle::dot(branch(f, {4, 6, 6}), r));
  auto params = nn::named_parameters<double>(branch);
  params.emplace_back("features", f);
  auto check = oracle::check_gradients(params, [&] {
    nn::NoGradGuard guard;
    return oracle::dot_value(branch(Var<double>(f.value()), {4, 6, 6}).value(), r);
  });
  EXPECT_LT(check.max_rel, 1e-3) << check.worst;
}

TEST(ApplyMask, IdentityZeroAndLoopOracle) {
  Rng rng(5);
  VideoClip v{oracle::random_tensor({3, 2, 4, 5}, rng, 0, 1).cast<float>()};
  EXPECT_EQ(attention::apply_mask(v, AttentionMap::constant(2, 4, 5, 1.0f)).data, v.data);
  const auto zeroed = attention::apply_mask(v, AttentionMap::constant(2, 4, 5, 0.0f));
  for (float x : zeroed.data.values()) EXPECT_EQ(x, 0.0f);

  AttentionMap m(oracle::random_tensor({2, 4, 5}, rng, 0, 1).cast<float>());
  auto out = attention::apply_mask(v, m);
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t t = 0; t < 2; ++t)
      for (std::int64_t h = 0; h < 4; ++h)
        for (std::int64_t w = 0; w < 5; ++w) {
          EXPECT_NEAR(out.at(c, t, h, w), v.at(c, t, h, w) * m.weights()[static_cast<std::size_t>((t * 4 + h) * 5 + w)],
                      1e-7);
        }
  EXPECT_THROW(attention::apply_mask(v, AttentionMap::constant(2, 4, 4, 1.0f)), ShapeError);
}

TEST(ApplyMask, GraphVersionIsBilinear) {
  Rng rng(6);
  auto v1 = oracle::random_tensor({1, 3, 2, 3, 3}, rng), v2 = oracle::random_tensor({1, 3, 2, 3, 3}, rng);
  auto m = oracle::random_tensor({1, 1, 2, 3, 3}, rng, 0, 1);
  auto sum = v1;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = 2.0 * v1[i] + v2[i];
  auto lhs = attention::apply_mask(Var<double>(sum), Var<double>(m)).value();
  auto a = attention::apply_mask(Var<double>(v1), Var<double>(m)).value();
  auto b = attention::apply_mask(Var<double>(v2), Var<double>(m)).value();
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], 2.0 * a[i] + b[i], 1e-12);
}

TEST(AttentionMass, ExamplesAndPermutationInvariance) {
  EXPECT_DOUBLE_EQ(losses::attention_mass(AttentionMap::constant(2, 3, 3, 1.0f)), 1.0);
  EXPECT_DOUBLE_EQ(losses::attention_mass(AttentionMap::constant(2, 3, 3, 0.0f)), 0.0);
  Tensor<float> half({2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) half[i] = 1.0f;
  EXPECT_DOUBLE_EQ(losses::attention_mass(AttentionMap(half)), 0.5);

  Rng rng(7);
  auto m = oracle::random_tensor({4, 6, 6}, rng, 0, 1);
  auto shuffled = m;
  std::vector<double>& s = shuffled.storage();
  for (std::size_t i = s.size() - 1; i > 0; --i) std::swap(s[i], s[rng.below(i + 1)]);
  EXPECT_NEAR(losses::attention_mass(m), losses::attention_mass(shuffled), 1e-12);
  EXPECT_NEAR(attention::attention_mass(Var<double>(m)).item(), oracle::mean_of(m), 1e-12);
}
