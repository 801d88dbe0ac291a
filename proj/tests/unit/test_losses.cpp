#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "progsr/losses/losses.hpp"
#include "support/oracles.hpp"

using namespace progsr;
using nn::Var;

namespace {

std::vector<std::vector<double>> rows(const Tensor<double>& t) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(t.dim(0)));
  for (std::int64_t i = 0; i < t.dim(0); ++i)
    for (std::int64_t c = 0; c < t.dim(1); ++c) out[static_cast<std::size_t>(i)].push_back(t[static_cast<std::size_t>(i * t.dim(1) + c)]);
  return out;
}

std::vector<std::vector<int>> int_rows(const Tensor<double>& t) {
  std::vector<std::vector<int>> out;
  for (const auto& r : rows(t)) {
    out.emplace_back();
    for (double v : r) out.back().push_back(v != 0.0);
  }
  return out;
}

Tensor<double> random_multi_labels(std::int64_t n, std::int64_t k, Rng& rng) {
  Tensor<double> y({n, k});
  for (auto& v : y.values()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  return y;
}

Tensor<double> random_one_hot(std::int64_t n, std::int64_t k, Rng& rng, std::vector<int>* truth) {
  Tensor<double> y({n, k});
  for (std::int64_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k)));
    y[static_cast<std::size_t>(i * k + c)] = 1.0;
    if (truth) truth->push_back(static_cast<int>(c));
  }
  return y;
}

}  // namespace

TEST(Reconstruction, Examples) {
  Tensor<double> a({1, 3, 2, 4, 4}, 1.0), b({1, 3, 2, 4, 4}, 0.0);
  EXPECT_EQ(losses::reconstruction_loss(a, a), 0.0);
  EXPECT_DOUBLE_EQ(losses::reconstruction_loss(a, b), 1.0);
  Tensor<double> ones({2, 4, 4}, 1.0);
  EXPECT_DOUBLE_EQ(losses::reconstruction_loss(a, b, &ones), 1.0);
  EXPECT_THROW(losses::reconstruction_loss(a, Tensor<double>({1, 3, 2, 4, 5})), ShapeError);
  Tensor<double> bad({2, 4, 5}, 1.0);
  EXPECT_THROW(losses::reconstruction_loss(a, b, &bad), ShapeError);
}

TEST(Reconstruction, MatchesLoopOracleAndIsSymmetric) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape s{2, 3, 4, 8, 8};
    auto vhat = oracle::random_tensor(s, rng, 0, 1);
    auto v = oracle::random_tensor(s, rng, 0, 1);
    auto m = oracle::random_tensor({2, 1, 4, 8, 8}, rng, 0, 1);
    const double got = losses::reconstruction_loss(vhat, v, &m);
    EXPECT_NEAR(got, oracle::l1_weighted(vhat, v, &m), 1e-12);
    EXPECT_EQ(got, losses::reconstruction_loss(v, vhat, &m));
    EXPECT_GE(got, 0.0);
  }
}

TEST(Reconstruction, SharedMapEqualsBroadcastMap) {
  Rng rng(2);
  auto vhat = oracle::random_tensor({2, 3, 2, 3, 3}, rng, 0, 1);
  auto v = oracle::random_tensor({2, 3, 2, 3, 3}, rng, 0, 1);
  auto shared = oracle::random_tensor({2, 3, 3}, rng, 0, 1);
  Tensor<double> full({2, 1, 2, 3, 3});
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = shared[i % shared.size()];
  EXPECT_DOUBLE_EQ(losses::reconstruction_loss(vhat, v, &shared), losses::reconstruction_loss(vhat, v, &full));
}

TEST(Reconstruction, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  Var<double> vhat(oracle::random_tensor({1, 2, 2, 3, 3}, rng, 0, 1), true);
  Var<double> m(oracle::random_tensor({1, 1, 2, 3, 3}, rng, 0, 1), true);
  const auto v = oracle::random_tensor({1, 2, 2, 3, 3}, rng, 0, 1);
  nn::backward(losses::reconstruction_loss(vhat, v, m));
  std::vector<std::pair<std::string, Var<double>>> params{{"vhat", vhat}, {"m", m}};
  auto check = oracle::check_gradients(params, [&] { return losses::reconstruction_loss(vhat.value(), v, &m.value()); });
  EXPECT_LT(check.max_rel, 1e-4) << check.worst;
}

TEST(Bce, ClosedFormAndOracle) {
  Tensor<double> zero({1, 2}), y({1, 2}, std::vector<double>{1, 0});
  EXPECT_NEAR(losses::bce_loss(zero, y), 2.0 * std::numbers::ln2, 1e-12);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::int64_t>(1 + rng.below(4));
    const auto k = static_cast<std::int64_t>(1 + rng.below(8));
    auto logits = oracle::random_tensor({n, k}, rng, -6, 6);
    auto t = random_multi_labels(n, k, rng);
    EXPECT_NEAR(losses::bce_loss(logits, t), oracle::bce(rows(logits), int_rows(t)), 1e-12);
  }
}

TEST(Bce, ClampsExtremeLogitsAndRejectsNonFinite) {
  Tensor<double> logits({1, 2}, std::vector<double>{100.0, -100.0});
  Tensor<double> y({1, 2}, std::vector<double>{0, 1});
  EXPECT_NEAR(losses::bce_loss(logits, y), -2.0 * std::log(1e-7), 1e-9);
  Tensor<double> g({1, 2});
  losses::bce_loss(logits, y, &g);
  EXPECT_EQ(g[0], 0.0);
  logits[0] = std::nan("");
  EXPECT_THROW(losses::bce_loss(logits, y), DomainError);
  logits[0] = INFINITY;
  EXPECT_THROW(losses::bce_loss(logits, y), DomainError);
  EXPECT_THROW(losses::bce_loss(Tensor<double>({1, 3}), y), ShapeError);
}

TEST(SoftmaxCe, ExamplesAndOracle) {
  Tensor<double> uniform({1, 4}), y({1, 4}, std::vector<double>{0, 0, 1, 0});
  EXPECT_NEAR(losses::softmax_ce_loss(uniform, y), std::log(4.0), 1e-12);
  Tensor<double> sharp({1, 4}, std::vector<double>{0, 0, 40, 0});
  EXPECT_LT(losses::softmax_ce_loss(sharp, y), 1e-15);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::int64_t>(1 + rng.below(4));
    const auto k = static_cast<std::int64_t>(2 + rng.below(7));
    auto logits = oracle::random_tensor({n, k}, rng, -5, 5);
    std::vector<int> truth;
    auto t = random_one_hot(n, k, rng, &truth);
    EXPECT_NEAR(losses::softmax_ce_loss(logits, t), oracle::categorical_ce(rows(logits), truth), 1e-12);
  }
  Tensor<double> two({1, 4}, std::vector<double>{1, 1, 0, 0});
  EXPECT_THROW(losses::softmax_ce_loss(uniform, two), DomainError);
  EXPECT_THROW(losses::softmax_ce_loss(uniform, Tensor<double>({1, 4})), DomainError);
}

TEST(SoftmaxCe, ShiftInvariant) {
  Rng rng(6);
  auto logits = oracle::random_tensor({3, 5}, rng);
  auto y = random_one_hot(3, 5, rng, nullptr);
  auto shifted = logits;
  for (auto& v : shifted.values()) v += 3.25;
  EXPECT_NEAR(losses::softmax_ce_loss(logits, y), losses::softmax_ce_loss(shifted, y), 1e-12);
}

TEST(ClassificationLoss, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  for (bool multi : {true, false}) {
    Var<double> logits(oracle::random_tensor({3, 5}, rng, -3, 3), true);
    auto y = multi ? random_multi_labels(3, 5, rng) : random_one_hot(3, 5, rng, nullptr);
    nn::backward(losses::action_loss(logits, y, multi));
    std::vector<std::pair<std::string, Var<double>>> params{{"logits", logits}};
    auto check = oracle::check_gradients(params, [&] { return losses::action_loss(logits.value(), y, multi); });
    EXPECT_LT(check.max_rel, 1e-4) << multi << " " << check.worst;
  }
}

TEST(AttentionLoss, ExamplesAndOracle) {
  Tensor<double> perfect({1, 2}, std::vector<double>{40, -40});
  Tensor<double> y({1, 2}, std::vector<double>{1, 0});
  Tensor<double> zero_map({1, 1, 2, 3, 3});
  // Saturated probabilities are clamped at 1e-7, leaving about 2e-7 of loss.
  EXPECT_NEAR(losses::attention_loss(perfect, y, zero_map, 1.0, true), 0.0, 1e-6);
  EXPECT_NEAR(losses::attention_loss(Tensor<double>({1, 2}), y, zero_map, 1.0, true), 2.0 * std::numbers::ln2, 1e-12);

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::int64_t>(1 + rng.below(3));
    auto logits = oracle::random_tensor({n, 6}, rng, -4, 4);
    auto t = random_multi_labels(n, 6, rng);
    auto m = oracle::random_tensor({n, 1, 2, 4, 4}, rng, 0, 1);
    const double lambda = rng.uniform(0, 2);
    const double expected = oracle::bce(rows(logits), int_rows(t)) + lambda * oracle::mean_of(m);
    EXPECT_NEAR(losses::attention_loss(logits, t, m, lambda, true), expected, 1e-12);
  }
}

TEST(AttentionLoss, StrictlyIncreasingInSparsityWeight) {
  Rng rng(9);
  auto logits = oracle::random_tensor({2, 4}, rng);
  auto y = random_multi_labels(2, 4, rng);
  auto m = oracle::random_tensor({2, 1, 2, 3, 3}, rng, 0.01, 1);
  double prev = -1.0;
  for (double lambda : {0.0, 0.1, 0.5, 1.0, 4.0}) {
    const double l = losses::attention_loss(logits, y, m, lambda, true);
    EXPECT_GT(l, prev);
    prev = l;
  }
}

TEST(AttentionLoss, GraphGradientsMatchFiniteDifferences) {
  Rng rng(10);
  Var<double> logits(oracle::random_tensor({2, 3}, rng), true);
  Var<double> m(oracle::random_tensor({2, 1, 2, 2, 2}, rng, 0, 1), true);
  auto y = random_multi_labels(2, 3, rng);
  nn::backward(losses::attention_loss(logits, y, m, 0.7, true));
  std::vector<std::pair<std::string, Var<double>>> params{{"logits", logits}, {"m", m}};
  auto check = oracle::check_gradients(
      params, [&] { return losses::attention_loss(logits.value(), y, m.value(), 0.7, true); });
  EXPECT_LT(check.max_rel, 1e-4) << check.worst;
}

TEST(CombinedLoss, Arithmetic) {
  LossWeights w;
  EXPECT_DOUBLE_EQ(losses::combined_sr_loss(2.0, 4.0, w), 4.0);
  EXPECT_DOUBLE_EQ(losses::combined_sr_loss(4.0, 8.0, w), 8.0);
  w.lambda_att = 0.0;
  EXPECT_DOUBLE_EQ(losses::combined_sr_loss(2.0, 4.0, w), 2.0);
  Var<double> rec(Tensor<double>({1}, 2.0), true), att(Tensor<double>({1}, 4.0), true);
  auto total = losses::combined_sr_loss(rec, att, LossWeights{});
  EXPECT_DOUBLE_EQ(total.item(), 4.0);
  nn::backward(total);
  EXPECT_DOUBLE_EQ(rec.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(att.grad()[0], 0.5);
}

TEST(LossReport, JsonHasNullActWhenAbsent) {
  losses::LossReport r{0.1, 0.2, 0.3, 0.2, std::nullopt};
  nlohmann::json j = r;
  EXPECT_TRUE(j["act"].is_null());
  r.act = 0.5;
  j = r;
  EXPECT_EQ(j["act"], 0.5);
}

TEST(LabelMatrix, BuildsRows) {
  auto y = losses::label_matrix<double>({make_labels(3, {0, 2}), make_labels(3, {1})});
  EXPECT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_EQ(y.storage(), (std::vector<double>{1, 0, 1, 0, 1, 0}));
  EXPECT_THROW(losses::label_matrix<double>({make_labels(3, {0}), make_labels(2, {1})}), ShapeError);
}
