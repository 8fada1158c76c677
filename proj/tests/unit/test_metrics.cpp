#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsa/metrics.hpp"
#include "test_support.hpp"

using namespace gsa;

namespace {
dataset binary_ds(std::vector<std::pair<double, std::size_t>> xs) {
  dataset ds;
  ds.n_features = 1;
  ds.n_classes = 2;
  ds.label_names = {"0", "1"};
  for (auto [x, y] : xs) ds.samples.push_back({sparse_vec({{0, x}}, 1), y, 0.0});
  return ds;
}
}  // namespace

TEST(MeanCrossEntropy, Examples) {
  linear_model m(model_kind::logistic, 2, 1);
  EXPECT_NEAR(mean_cross_entropy(m, binary_ds({{1.0, 0}, {2.0, 1}})),
              std::log(2.0), 1e-15);

  m.rows[0][0] = -1e4;  // p(y=1) underflows to 0
  EXPECT_NEAR(mean_cross_entropy(m, binary_ds({{1.0, 1}})), 34.5387763949106853,
              1e-9);
  const double half = mean_cross_entropy(m, binary_ds({{1.0, 1}, {1.0, 0}}));
  EXPECT_NEAR(half, 17.269, 5e-4);
}

TEST(MeanCrossEntropy, BoundedForDivergedModels) {
  linear_model m(model_kind::softmax, 3, 1);
  m.rows[0][0] = std::nan("");
  dataset ds = binary_ds({{1.0, 0}});
  ds.n_classes = 3;
  const double loss = mean_cross_entropy(m, ds);
  EXPECT_NEAR(loss, 34.5387763949106853, 1e-9);
}

TEST(Precision, Examples) {
  linear_model m(model_kind::logistic, 2, 1);
  m.rows[0][0] = 1.0;
  EXPECT_EQ(precision(m, binary_ds({{1.0, 1}, {-1.0, 0}})), 1.0);
  EXPECT_DOUBLE_EQ(precision(m, binary_ds({{1.0, 1}, {-1.0, 1}, {2.0, 1}})),
                   2.0 / 3.0);
}

TEST(Precision, ConstantPredictorScoresMajorityFrequency) {
  linear_model m(model_kind::logistic, 2, 1);
  m.rows[0][0] = -1.0;
  std::vector<std::pair<double, std::size_t>> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back({1.0, i < 30 ? 1u : 0u});
  EXPECT_DOUBLE_EQ(precision(m, binary_ds(xs)), 0.970);
}

TEST(PredictClass, TiesGoToLowestIndex) {
  linear_model m(model_kind::softmax, 3, 1);
  EXPECT_EQ(predict_class(m, sparse_vec{{0, 1.0}}), 0u);
  m.rows[1][0] = 1.0;
  m.rows[2][0] = 1.0;
  EXPECT_EQ(predict_class(m, sparse_vec{{0, 1.0}}), 1u);
}

TEST(RocAuc, Examples) {
  auto auc = [](std::vector<double> s, std::vector<int> y) { return roc_auc(s, y); };
  EXPECT_EQ(auc({0.9, 0.1}, {1, 0}), 1.0);
  EXPECT_EQ(auc({0.8, 0.8}, {1, 0}), 0.5);
  EXPECT_EQ(auc({0.2, 0.6, 0.4}, {1, 0, 1}), 0.0);
  EXPECT_THROW(auc({0.1, 0.2}, {1, 1}), undefined_metric_error);
  EXPECT_THROW(auc({0.1, std::nan("")}, {1, 0}), std::invalid_argument);
}

TEST(RocAuc, MatchesBruteForceWithTies) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 10) / 10.0;  // many ties
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(roc_auc(s, y), gsa::testing::brute_force_auc(s, y), 1e-12);
  }
}

TEST(RocAuc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(60), t(60);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
      s[i] = g(rng);
      t[i] = std::exp(3.0 * s[i]) + 1.0;
      y[i] = static_cast<int>(i % 2);
    }
    EXPECT_NEAR(roc_auc(s, y), roc_auc(t, y), 1e-12);
  }
}

TEST(AveragePrecision, Examples) {
  std::vector<double> s{0.9, 0.8, 0.1};
  std::vector<int> y{1, 0, 1};
  EXPECT_NEAR(average_precision(s, y), 0.5 * 1.0 + 0.5 * (2.0 / 3.0), 1e-15);
  std::vector<double> perfect{0.9, 0.1};
  std::vector<int> py{1, 0};
  EXPECT_EQ(average_precision(perfect, py), 1.0);
}

TEST(TrackMinLoss, Examples) {
  min_loss_tracker t;
  for (double v : {3.0, 2.0, 5.0}) t = track_min_loss(t, v);
  EXPECT_EQ(t.f_m, 2.0);
  t = track_min_loss(t, std::nan(""));
  EXPECT_EQ(t.f_m, 2.0);
}

TEST(Evaluate, RecordShapeAndDivergence) {
  linear_model m(model_kind::logistic, 2, 1);
  m.rows[0][0] = 1.0;
  const auto ds = binary_ds({{1.0, 1}, {-1.0, 0}});
  auto r = evaluate(m, ds, 4);
  EXPECT_EQ(r.pass_index, 4u);
  ASSERT_TRUE(r.auc);
  EXPECT_EQ(*r.auc, 1.0);
  ASSERT_TRUE(r.precision);
  EXPECT_FALSE(r.diverged);

  m.rows[0][0] = std::numeric_limits<double>::infinity();
  r = evaluate(m, ds, 5);
  EXPECT_TRUE(r.diverged);

  linear_model sm(model_kind::softmax, 3, 1);
  dataset three = binary_ds({{1.0, 2}});
  three.n_classes = 3;
  r = evaluate(sm, three, 1);
  EXPECT_FALSE(r.auc);
  EXPECT_NEAR(r.loss, std::log(3.0), 1e-15);
}
