#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsa/models.hpp"
#include "test_support.hpp"

using namespace gsa;
using gsa::testing::random_instance;

TEST(LogisticForward, Examples) {
  EXPECT_EQ(logistic_forward(dense_vec{0, 0}, sparse_vec{{0, 3.0}, {1, -2.0}}), 0.5);
  EXPECT_NEAR(logistic_forward(dense_vec{std::log(19.0)}, sparse_vec{{0, 1.0}}),
              0.95, 1e-15);
  const double tiny = logistic_forward(dense_vec{-1000.0}, sparse_vec{{0, 1.0}});
  EXPECT_FALSE(std::isnan(tiny));
  EXPECT_GE(tiny, 0.0);
  EXPECT_LT(tiny, 1e-300);
}

TEST(LogisticLossGrad, Examples) {
  auto r = logistic_loss_grad(dense_vec{0.0}, sparse_vec{{0, 1.0}}, 1);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(r.coeffs[0], -0.5);

  const dense_vec w{std::log(19.0)};
  r = logistic_loss_grad(w, sparse_vec{{0, 1.0}}, 1);
  EXPECT_NEAR(r.loss, 0.0512932943875505334, 1e-14);
  EXPECT_NEAR(r.coeffs[0], -0.05, 1e-15);
  r = logistic_loss_grad(w, sparse_vec{{0, 1.0}}, 0);
  EXPECT_NEAR(r.loss, 2.99573227355399099, 1e-14);
  EXPECT_NEAR(r.coeffs[0], 0.95, 1e-15);

  r = logistic_loss_grad(dense_vec{1000.0}, sparse_vec{{0, 1.0}}, 0);
  EXPECT_NEAR(r.loss, 1000.0, 1e-9);
}

TEST(SoftmaxForward, Examples) {
  std::vector<dense_vec> W(4, dense_vec(3));
  for (double p : softmax_forward(W, sparse_vec{{0, 1.0}, {2, 5.0}}))
    EXPECT_NEAR(p, 0.25, 1e-15);

  std::vector<dense_vec> W2{dense_vec{std::log(1.0)}, dense_vec{std::log(3.0)}};
  auto p = softmax_forward(W2, sparse_vec{{0, 1.0}});
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);

  std::vector<dense_vec> W3{dense_vec{0.3}, dense_vec{-1.0}, dense_vec{2.0}};
  std::vector<dense_vec> W3p{W3[2], W3[0], W3[1]};
  auto a = softmax_forward(W3, sparse_vec{{0, 0.7}});
  auto b = softmax_forward(W3p, sparse_vec{{0, 0.7}});
  EXPECT_DOUBLE_EQ(a[2], b[0]);
  EXPECT_DOUBLE_EQ(a[0], b[1]);
  EXPECT_DOUBLE_EQ(a[1], b[2]);
}

TEST(SoftmaxLossGrad, Examples) {
  std::vector<dense_vec> W(4, dense_vec(2));
  auto r = softmax_loss_grad(W, sparse_vec{{0, 1.0}}, 2);
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-15);
  EXPECT_NEAR(r.coeffs[0], 0.25, 1e-15);
  EXPECT_NEAR(r.coeffs[2], -0.75, 1e-15);
  EXPECT_THROW(softmax_loss_grad(W, sparse_vec{{0, 1.0}}, 4), dimension_error);
}

TEST(SoftmaxLossGrad, BinaryReducesToLogistic) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto inst = random_instance(rng, 2);
    const std::size_t p = inst.x.dim();
    std::vector<dense_vec> rows{dense_vec(p), dense_vec(p)};
    dense_vec w_lr(p);
    for (std::size_t j = 0; j < p; ++j) {
      rows[0][j] = g(rng);
      rows[1][j] = g(rng);
      w_lr[j] = rows[1][j] - rows[0][j];
    }
    const std::size_t y = inst.label;
    const auto sm = softmax_loss_grad(rows, inst.x, y);
    const auto lr = logistic_loss_grad(w_lr, inst.x, y);
    EXPECT_NEAR(sm.loss, lr.loss, 1e-10 * std::max(1.0, lr.loss));
    // d/dw1 of the softmax loss equals the logistic coefficient.
    EXPECT_NEAR(sm.coeffs[1], lr.coeffs[0], 1e-12);
    EXPECT_NEAR(sm.coeffs[1] - sm.coeffs[0], 2.0 * lr.coeffs[0], 1e-12);
  }
}

TEST(LinregLossGrad, Examples) {
  auto r = linreg_loss_grad(dense_vec{0.0}, sparse_vec{{0, 1.0}}, 0.0);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.coeffs[0], 0.0);
  r = linreg_loss_grad(dense_vec{0.0}, sparse_vec{{0, 2.0}}, 4.0);
  EXPECT_EQ(r.loss, 8.0);
  EXPECT_EQ(r.coeffs[0], -4.0);
  r = linreg_loss_grad(dense_vec{2.0}, sparse_vec{{0, 2.0}}, 4.0);
  EXPECT_EQ(r.coeffs[0], 0.0);
}

TEST(ModelProperties, CoefficientInvariants) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t L = 2 + trial % 4;
    auto inst = random_instance(rng, L);
    const auto r = softmax_loss_grad(inst.rows, inst.x, inst.label);
    double sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      sum += r.coeffs[l];
      if (l == inst.label) {
        EXPECT_LE(r.coeffs[l], 0.0);
        EXPECT_GE(r.coeffs[l], -1.0);
      } else {
        EXPECT_GE(r.coeffs[l], 0.0);
        EXPECT_LE(r.coeffs[l], 1.0);
      }
    }
    EXPECT_NEAR(sum, 0.0, 1e-12);
    EXPECT_GE(r.loss, 0.0);
    EXPECT_TRUE(std::isfinite(r.loss));
  }
}

TEST(ModelProperties, FiniteDifferenceGradients) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto kind = static_cast<model_kind>(trial % 3);
    const std::size_t L = kind == model_kind::softmax ? 2 + trial % 4 : 1;
    auto inst = random_instance(rng, std::max<std::size_t>(L, 2));
    linear_model m(kind, L, inst.x.dim());
    for (std::size_t l = 0; l < m.n_rows(); ++l) m.rows[l] = inst.rows[l];
    sample s{inst.x, kind == model_kind::softmax ? inst.label : inst.label % 2,
             inst.target};
    EXPECT_LE(gsa::testing::max_gradient_error(m, s), 1e-5) << "trial " << trial;
  }
}
