#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gsa/data.hpp"
#include "gsa/linalg.hpp"

namespace gsa {

enum class model_kind { linear, logistic, softmax };

inline std::string_view to_string(model_kind k) {
  switch (k) {
    case model_kind::linear: return "linear";
    case model_kind::logistic: return "logistic";
    case model_kind::softmax: return "softmax";
  }
  return "?";
}

inline model_kind parse_model_kind(std::string_view s) {
  if (s == "linear") return model_kind::linear;
  if (s == "logistic") return model_kind::logistic;
  if (s == "softmax") return model_kind::softmax;
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "'");
}

/// Linear, logistic or softmax regression weights: L rows of p weights,
/// with L == 1 unless the kind is softmax.
struct linear_model {
  model_kind kind = model_kind::logistic;
  std::vector<dense_vec> rows;
  bool has_bias = false;

  linear_model() = default;
  linear_model(model_kind k, std::size_t n_classes, std::size_t n_features,
               bool bias = false)
      : kind(k), has_bias(bias) {
    if (k == model_kind::softmax && n_classes < 2) {
      throw dimension_error("softmax model needs L >= 2");
    }
    const std::size_t L = k == model_kind::softmax ? n_classes : 1;
    rows.assign(L, dense_vec(n_features));
  }

  /// Zero model suited to a dataset's label structure.
  static linear_model for_dataset(model_kind k, const dataset& ds) {
    if (k == model_kind::linear && !ds.regression) {
      throw std::invalid_argument("linear model needs a regression dataset");
    }
    if (k != model_kind::linear && ds.regression) {
      throw std::invalid_argument(std::string(to_string(k)) +
                                  " model needs class labels");
    }
    if (k == model_kind::logistic && ds.n_classes != 2) {
      throw std::invalid_argument("logistic model needs exactly 2 classes, got " +
                                  std::to_string(ds.n_classes));
    }
    return linear_model(k, ds.n_classes, ds.n_features, ds.has_bias);
  }

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_features() const { return rows.empty() ? 0 : rows[0].size(); }

  bool all_finite() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const dense_vec& r) { return r.all_finite(); });
  }

  friend bool operator==(const linear_model&, const linear_model&) = default;
};

/// Per-sample loss with its gradient kept as coefficients:
/// grad w.r.t. row l equals coeffs[l] * x.
struct loss_grad {
  real loss = 0.0;
  std::vector<real> coeffs;
};

inline real sigmoid(real z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const real e = std::exp(z);
  return e / (1.0 + e);
}

inline real logistic_forward(const dense_vec& w, const sparse_vec& x) {
  return sigmoid(sparse_dot(x, w));
}

/// Binary cross-entropy, y in {0, 1}.
inline loss_grad logistic_loss_grad(const dense_vec& w, const sparse_vec& x,
                                    std::size_t y) {
  const real z = sparse_dot(x, w);
  const real yy = y ? 1.0 : 0.0;
  const real loss = std::log1p(std::exp(-std::fabs(z))) + std::max(z, 0.0) -
                    yy * z;
  return {loss, {sigmoid(z) - yy}};
}

inline std::vector<real> logits(const std::vector<dense_vec>& rows,
                                const sparse_vec& x) {
  std::vector<real> z(rows.size());
  for (std::size_t l = 0; l < rows.size(); ++l) z[l] = sparse_dot(x, rows[l]);
  return z;
}

inline std::vector<real> softmax_forward(const std::vector<dense_vec>& rows,
                                         const sparse_vec& x) {
  return stable_softmax(logits(rows, x));
}

/// Multinomial cross-entropy for true class k; loss comes from shifted
/// logits, never from a clamped probability.
inline loss_grad softmax_loss_grad(const std::vector<dense_vec>& rows,
                                   const sparse_vec& x, std::size_t k) {
  if (k >= rows.size()) {
    throw dimension_error("class index " + std::to_string(k) +
                          " out of range for " + std::to_string(rows.size()) +
                          " classes");
  }
  const auto z = logits(rows, x);
  const real zmax = *std::max_element(z.begin(), z.end());
  real sum = 0.0;
  for (real v : z) sum += std::exp(v - zmax);
  loss_grad out;
  out.loss = std::log(sum) - (z[k] - zmax);
  out.coeffs.resize(z.size());
  for (std::size_t l = 0; l < z.size(); ++l) {
    out.coeffs[l] = std::exp(z[l] - zmax) / sum;
  }
  out.coeffs[k] -= 1.0;
  return out;
}

/// Squared loss r^2/2 with r = y - w.x; coefficient is -r.
inline loss_grad linreg_loss_grad(const dense_vec& w, const sparse_vec& x,
                                  real y) {
  const real r = y - sparse_dot(x, w);
  return {0.5 * r * r, {-r}};
}

inline loss_grad compute_loss_grad(const linear_model& m, const sample& s) {
  switch (m.kind) {
    case model_kind::linear: return linreg_loss_grad(m.rows[0], s.features, s.target);
    case model_kind::logistic: return logistic_loss_grad(m.rows[0], s.features, s.label);
    case model_kind::softmax: return softmax_loss_grad(m.rows, s.features, s.label);
  }
  throw std::logic_error("unreachable model kind");
}

/// rows[l] -= step * coeffs[l] * x
inline void apply_update(linear_model& m, real step,
                         const std::vector<real>& coeffs, const sparse_vec& x) {
  for (std::size_t l = 0; l < m.rows.size(); ++l) {
    const real a = -step * coeffs[l];
    if (a != 0.0) scaled_add(m.rows[l], a, x);
  }
}

}  // namespace gsa
