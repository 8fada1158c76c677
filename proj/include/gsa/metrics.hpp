#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "gsa/data.hpp"
#include "gsa/models.hpp"

namespace gsa {

class undefined_metric_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr real prob_clip = 1e-15;
inline constexpr real divergence_loss = 1e6;

struct metrics_record {
  std::size_t pass_index = 0;
  real loss = 0.0;
  std::optional<real> precision;  // absent for regression
  std::optional<real> auc;        // present iff binary task
  real elapsed_ms = 0.0;
  bool diverged = false;

  friend bool operator==(const metrics_record&, const metrics_record&) = default;
};

/// f_m(T): running minimum of the evaluated objective.
struct min_loss_tracker {
  std::optional<real> f_m;
};

inline min_loss_tracker track_min_loss(min_loss_tracker t, real loss) {
  if (std::isnan(loss)) return t;
  t.f_m = t.f_m ? std::min(*t.f_m, loss) : loss;
  return t;
}

/// Probability the model assigns to the sample's true class. Non-finite
/// values from a diverged model read as 0.
inline real true_class_probability(const linear_model& m, const sample& s) {
  real p = 0.0;
  if (m.kind == model_kind::logistic) {
    const real z = sparse_dot(s.features, m.rows[0]);
    p = sigmoid(s.label ? z : -z);
  } else if (m.kind == model_kind::softmax) {
    p = softmax_forward(m.rows, s.features)[s.label];
  } else {
    throw std::invalid_argument("class probability undefined for linear model");
  }
  return std::isnan(p) ? 0.0 : p;
}

/// Argmax class; ties go to the lowest class index.
inline std::size_t predict_class(const linear_model& m, const sparse_vec& x) {
  if (m.kind == model_kind::logistic) {
    return sparse_dot(x, m.rows[0]) > 0.0 ? 1 : 0;
  }
  if (m.kind == model_kind::softmax) {
    const auto z = logits(m.rows, x);
    std::size_t best = 0;
    for (std::size_t l = 1; l < z.size(); ++l) {
      if (z[l] > z[best]) best = l;
    }
    return best;
  }
  throw std::invalid_argument("class prediction undefined for linear model");
}

/// Mean of -ln(clip(p_true, 1e-15, 1 - 1e-15)); at most -ln(1e-15).
inline real mean_cross_entropy(const linear_model& m, const dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("mean_cross_entropy: empty dataset");
  real acc = 0.0;
  for (const auto& s : ds.samples) {
    const real p = std::clamp(true_class_probability(m, s), prob_clip,
                              1.0 - prob_clip);
    acc += -std::log(p);
  }
  return acc / static_cast<real>(ds.size());
}

/// Mean of r^2 / 2 over the dataset.
inline real mean_squared_loss(const linear_model& m, const dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("mean_squared_loss: empty dataset");
  real acc = 0.0;
  for (const auto& s : ds.samples) {
    acc += linreg_loss_grad(m.rows[0], s.features, s.target).loss;
  }
  return acc / static_cast<real>(ds.size());
}

/// Classification accuracy (reported under the name "precision").
inline real precision(const linear_model& m, const dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("precision: empty dataset");
  std::size_t hits = 0;
  for (const auto& s : ds.samples) hits += predict_class(m, s.features) == s.label;
  return static_cast<real>(hits) / static_cast<real>(ds.size());
}

namespace detail {
inline void check_binary(std::span<const real> scores,
                         std::span<const int> labels, std::string_view who) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument(std::string(who) + ": size mismatch");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw std::invalid_argument(std::string(who) + ": labels must be 0/1");
    }
    if (std::isnan(scores[i])) {
      throw std::invalid_argument(std::string(who) + ": NaN score");
    }
    pos += labels[i];
  }
  if (pos == 0 || pos == labels.size()) {
    throw undefined_metric_error(std::string(who) +
                                 ": both classes must be present");
  }
}
}  // namespace detail

/// Mann-Whitney rank statistic: P(random positive outscores random
/// negative), ties counted one half.
inline real roc_auc(std::span<const real> scores, std::span<const int> labels) {
  detail::check_binary(scores, labels, "roc_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled so
  // it stays an exact integer.
  std::size_t n_pos = 0;
  long double rank_sum2 = 0.0L;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const long double avg2 = static_cast<long double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        rank_sum2 += avg2;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  const long double u = rank_sum2 / 2.0L -
                        static_cast<long double>(n_pos) * (n_pos + 1) / 2.0L;
  return static_cast<real>(u / (static_cast<long double>(n_pos) * n_neg));
}

/// Step-wise average precision: sum over distinct thresholds of
/// (recall_n - recall_{n-1}) * precision_n.
inline real average_precision(std::span<const real> scores,
                              std::span<const int> labels) {
  detail::check_binary(scores, labels, "average_precision");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto total_pos =
      static_cast<real>(std::count(labels.begin(), labels.end(), 1));
  real ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0, i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]];
      ++seen;
      ++j;
    }
    const real recall = static_cast<real>(tp) / total_pos;
    ap += (recall - prev_recall) * static_cast<real>(tp) /
          static_cast<real>(seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

enum class precision_metric { accuracy, average_precision };

/// Positive-class scores and 0/1 labels for a binary logistic model.
inline std::pair<std::vector<real>, std::vector<int>> binary_scores(
    const linear_model& m, const dataset& ds) {
  std::vector<real> scores;
  std::vector<int> labels;
  scores.reserve(ds.size());
  labels.reserve(ds.size());
  for (const auto& s : ds.samples) {
    const real p = logistic_forward(m.rows[0], s.features);
    scores.push_back(std::isnan(p) ? 0.5 : p);
    labels.push_back(s.label ? 1 : 0);
  }
  return {std::move(scores), std::move(labels)};
}

/// Test-set evaluation for one pass; elapsed time is left to the caller.
inline metrics_record evaluate(const linear_model& m, const dataset& test,
                               std::size_t pass_index,
                               precision_metric pm = precision_metric::accuracy) {
  metrics_record r;
  r.pass_index = pass_index;
  if (m.kind == model_kind::linear) {
    r.loss = mean_squared_loss(m, test);
  } else {
    r.loss = mean_cross_entropy(m, test);
    r.precision = precision(m, test);
  }
  if (m.kind == model_kind::logistic) {
    const auto [scores, labels] = binary_scores(m, test);
    const bool both = std::find(labels.begin(), labels.end(), 1) != labels.end() &&
                      std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (both) {
      r.auc = roc_auc(scores, labels);
      if (pm == precision_metric::average_precision) {
        r.precision = average_precision(scores, labels);
      }
    }
  }
  r.diverged = !m.all_finite() || !std::isfinite(r.loss) ||
               r.loss > divergence_loss;
  return r;
}

}  // namespace gsa
