#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "progsr/core.hpp"

using namespace progsr;

TEST(Tensor, ShapeAndFill) {
  Tensor<float> t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  for (float v : t.values()) EXPECT_EQ(v, 1.5f);
  EXPECT_THROW(Tensor<float>({2, -1}), ShapeError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
}

TEST(Tensor, ReshapeAndCast) {
  Tensor<float> t({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  auto r = t.reshaped({3, 2});
  EXPECT_EQ(r.dim(0), 3);
  EXPECT_EQ(r[5], 6.0f);
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
  auto d = t.cast<double>();
  EXPECT_EQ(d[2], 3.0);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng(7).next_u64(), c.next_u64());
}

TEST(Rng, SerializeRoundTrip) {
  Rng a(3);
  for (int i = 0; i < 10; ++i) a.uniform();
  Rng b;
  b.deserialize(a.serialize());
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.normal(), b.normal());
  EXPECT_THROW(b.deserialize("garbage"), ParseError);
}

TEST(Rng, UniformAndBelowRanges) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(5), 5u);
  }
  EXPECT_THROW(r.below(0), DomainError);
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(42, s));
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
}

TEST(Hash, FnvKnownVector) {
  // FNV-1a 64 of "a".
  EXPECT_EQ(hash_string("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0x1f), "000000000000001f");
}

TEST(VideoClip, Validation) {
  VideoClip c = make_clip({3, 4, 8, 8}, 0.5f);
  EXPECT_NO_THROW(validate_clip(c));
  c.at(1, 2, 3, 4) = 1.5f;
  EXPECT_THROW(validate_clip(c), RangeError);
  c.at(1, 2, 3, 4) = std::nanf("");
  EXPECT_THROW(validate_clip(c), RangeError);
  EXPECT_THROW(make_clip({2, 4, 8, 8}), ShapeError);
  EXPECT_THROW(make_clip({3, 0, 8, 8}), ShapeError);
  VideoClip d = make_clip({1, 2, 2, 2}, 0.1f, 0.0);
  EXPECT_THROW(validate_clip(d), RangeError);
}

TEST(LabelVector, Construction) {
  auto lv = make_labels(4, {1, 3});
  EXPECT_EQ(lv.count(), 2u);
  EXPECT_THROW(make_labels(4, {4}), RangeError);
  EXPECT_THROW(make_labels(0, {}), ShapeError);
  EXPECT_THROW(make_labels(4, {1, 2}, true), RangeError);
  EXPECT_NO_THROW(validate_labels(make_labels(3, {2}, true), true));
}

TEST(AttentionMapType, RejectsOutOfRange) {
  EXPECT_NO_THROW(AttentionMap::constant(2, 3, 3, 1.0f));
  EXPECT_THROW(AttentionMap(Tensor<float>({2, 3, 3}, 1.01f)), RangeError);
  EXPECT_THROW(AttentionMap(Tensor<float>({2, 3, 3}, -0.01f)), RangeError);
  EXPECT_THROW(AttentionMap(Tensor<float>({3, 3}, 0.5f)), ShapeError);
}

TEST(LossWeightsType, Validation) {
  LossWeights w;
  EXPECT_EQ(w.lambda_rec, 1.0);
  EXPECT_EQ(w.lambda_att, 0.5);
  EXPECT_NO_THROW(w.validate());
  w.lambda_att = -1;
  EXPECT_THROW(w.validate(), ConfigError);
}
