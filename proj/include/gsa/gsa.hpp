#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "gsa/data.hpp"
#include "gsa/linalg.hpp"
#include "gsa/models.hpp"

namespace gsa {

/// Which greedy step a logistic model takes.
enum class logistic_step {
  approx,  // softmax-derived two-class formula (default)
  exact,   // closed-form solve of sigmoid(w'.x) == p_hat
};

struct gsa_config {
  real p_hat = 0.95;          // confidence threshold, strictly in (0.5, 1)
  bool clamp_negative = true;  // floor greedy steps at 0
  real eta_max = 1e4;
  logistic_step logistic = logistic_step::approx;
  bool record_trace = false;

  void validate() const {
    if (!(p_hat > 0.5 && p_hat < 1.0)) {
      throw std::invalid_argument("p_hat must lie strictly in (0.5, 1)");
    }
    if (!(eta_max > 0.0) || !std::isfinite(eta_max)) {
      throw std::invalid_argument("eta_max must be positive and finite");
    }
  }
};

/// Running arithmetic mean of accepted greedy steps.
struct gsa_state {
  real mean_eta = 0.0;
  std::uint64_t t = 0;
};

/// Step lengths are std::nullopt when the sample is degenerate (zero-norm
/// features, saturated probability, vanishing denominator). A skipped sample
/// does not enter the running mean.
using greedy_step = std::optional<real>;

inline real clamp_step(real eta, const gsa_config& cfg) {
  const real lo = cfg.clamp_negative ? 0.0 : -cfg.eta_max;
  return std::clamp(eta, lo, cfg.eta_max);
}

/// 1 / x.x: the step that zeroes the residual of this sample.
inline greedy_step greedy_step_linreg(const sparse_vec& x) {
  const real xx = sparse_sq_norm(x);
  if (!(xx > 0.0)) return std::nullopt;
  return 1.0 / xx;
}

/// Exact step after which sigmoid(w'.x) equals p_hat (y = 1) or 1 - p_hat
/// (y = 0) along x (y - p). Unclamped.
inline greedy_step greedy_step_logistic_exact(const dense_vec& w,
                                              const sparse_vec& x,
                                              std::size_t y, real p_hat) {
  const real xx = sparse_sq_norm(x);
  if (!(xx > 0.0)) return std::nullopt;
  const real z = sparse_dot(x, w);
  const real p = sigmoid(z);
  const real yy = y ? 1.0 : 0.0;
  if (std::fabs(yy - p) < 1e-12) return std::nullopt;
  const real target = (y ? 1.0 : -1.0) * std::log(p_hat / (1.0 - p_hat));
  const real eta = (target - z) / (xx * (yy - p));
  if (!std::isfinite(eta)) return std::nullopt;
  return eta;
}

/// Linearised greedy step for softmax regression with true class k.
///
/// With e_j = exp(z_j), b_j = exp(p_j):
///
///   lambda = (e_k - p_hat * sum e_j)
///          / (p_hat * sum e_j (1 - b_j) + e_k - e * e_k / b_k),
///   eta    = lambda / x.x
///
/// Numerator and denominator are both homogeneous of degree one in e, so the
/// logits are max-shifted before exponentiating without changing lambda.
inline greedy_step greedy_step_softmax(const std::vector<dense_vec>& rows,
                                       const sparse_vec& x, std::size_t k,
                                       const gsa_config& cfg) {
  if (k >= rows.size()) throw dimension_error("class index out of range");
  const real xx = sparse_sq_norm(x);
  if (!(xx > 0.0)) return std::nullopt;
  const auto z = logits(rows, x);
  const real zmax = *std::max_element(z.begin(), z.end());
  std::vector<real> e(z.size());
  real sum_e = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    e[j] = std::exp(z[j] - zmax);
    sum_e += e[j];
  }
  real sum_eb = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    sum_eb += e[j] * (1.0 - std::exp(e[j] / sum_e));
  }
  const real b_k = std::exp(e[k] / sum_e);
  const real num = -cfg.p_hat * sum_e + e[k];
  const real den = cfg.p_hat * sum_eb + e[k] - std::numbers::e * e[k] / b_k;
  if (!(std::fabs(den) >= 1e-300)) return std::nullopt;
  const real eta = num / den / xx;
  if (std::isnan(eta)) return std::nullopt;
  return clamp_step(eta, cfg);
}

/// Two-class form of the softmax step for a single-row logistic model. It
/// already carries the factor 2 that maps a two-row softmax step onto the
/// w1 - w0 parameterisation.
inline greedy_step greedy_step_logistic_binary(const dense_vec& w,
                                               const sparse_vec& x,
                                               std::size_t y,
                                               const gsa_config& cfg) {
  const real xx = sparse_sq_norm(x);
  if (!(xx > 0.0)) return std::nullopt;
  const real z = sparse_dot(x, w);
  const real p1 = sigmoid(z);
  const real p0 = sigmoid(-z);
  const real b0 = std::exp(p0);
  const real b1 = std::exp(p1);
  const real shared = cfg.p_hat * (1.0 - p0 * b0 - p1 * b1);
  const real num = y ? p1 - cfg.p_hat : p0 - cfg.p_hat;
  const real den = y ? shared + p1 * (1.0 - b0) : shared + p0 * (1.0 - b1);
  if (!(std::fabs(den) >= 1e-300)) return std::nullopt;
  const real eta = num / den * 2.0 / xx;
  if (std::isnan(eta)) return std::nullopt;
  return clamp_step(eta, cfg);
}

/// E[eta]_t = (t-1)/t E[eta]_{t-1} + eta_t / t
inline gsa_state running_mean_update(gsa_state s, real eta) {
  s.t += 1;
  s.mean_eta += (eta - s.mean_eta) / static_cast<real>(s.t);
  return s;
}

inline greedy_step greedy_step_for(const linear_model& m, const sample& s,
                                   const gsa_config& cfg) {
  switch (m.kind) {
    case model_kind::linear:
      return greedy_step_linreg(s.features);
    case model_kind::logistic:
      if (cfg.logistic == logistic_step::exact) {
        auto eta = greedy_step_logistic_exact(m.rows[0], s.features, s.label,
                                              cfg.p_hat);
        if (eta) eta = clamp_step(*eta, cfg);
        return eta;
      }
      return greedy_step_logistic_binary(m.rows[0], s.features, s.label, cfg);
    case model_kind::softmax:
      return greedy_step_softmax(m.rows, s.features, s.label, cfg);
  }
  return std::nullopt;
}

struct gsa_step_result {
  real loss = 0.0;
  greedy_step eta;
};

/// One GSA iteration: greedy step for this sample, fold it into the running
/// mean, then move every row by -mean_eta * coeffs[l] * x.
inline gsa_step_result gsa_step(linear_model& model, gsa_state& state,
                                const gsa_config& cfg, const sample& s) {
  auto lg = compute_loss_grad(model, s);
  const auto eta = greedy_step_for(model, s, cfg);
  if (eta) state = running_mean_update(state, *eta);
  if (state.t > 0) apply_update(model, state.mean_eta, lg.coeffs, s.features);
  return {lg.loss, eta};
}

struct trace_row {
  std::uint64_t step;
  real eta;
  real mean_eta;
};

struct gsa_result {
  gsa_state state;
  std::vector<trace_row> trace;
  std::uint64_t skipped = 0;
};

/// Called after every full pass with the 1-based pass index.
using pass_hook = std::function<void(std::size_t, const linear_model&)>;

/// Runs `passes` shuffled passes. The running mean is never reset between
/// passes.
inline gsa_result gsa_train(linear_model& model, const dataset& ds,
                            std::size_t passes, std::uint64_t seed,
                            const gsa_config& cfg, const pass_hook& hook = {}) {
  if (passes == 0) throw std::invalid_argument("passes must be >= 1");
  if (ds.empty()) throw std::invalid_argument("empty training set");
  cfg.validate();
  gsa_result out;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (auto i : epoch_permutation(ds.size(), seed, pass)) {
      const auto r = gsa_step(model, out.state, cfg, ds.samples[i]);
      if (!r.eta) {
        ++out.skipped;
      } else if (cfg.record_trace) {
        out.trace.push_back({out.state.t, *r.eta, out.state.mean_eta});
      }
    }
    if (hook) hook(pass + 1, model);
  }
  return out;
}

inline void write_trace_csv(const std::vector<trace_row>& trace,
                            std::ostream& out) {
  out << "step,eta,mean_eta\n";
  char buf[96];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g\n",
                  static_cast<unsigned long long>(r.step), r.eta, r.mean_eta);
    out << buf;
  }
}

/// Diagnostic form of the step-size bound for a softmax greedy step:
/// lhs = eta * x.x * (e^{1/L} - 1), rhs = |p_hat - p_k|.
struct step_bound {
  real lhs;
  real rhs;
  bool holds(real slack = 1e-9) const { return lhs <= rhs + slack; }
};

inline step_bound softmax_step_bound(real eta, real xx, std::size_t n_classes,
                                     real p_hat, real p_k) {
  return {eta * xx * std::expm1(1.0 / static_cast<real>(n_classes)),
          std::fabs(p_hat - p_k)};
}

}  // namespace gsa
