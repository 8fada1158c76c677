#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsa/data.hpp"
#include "gsa/gsa.hpp"
#include "gsa/linalg.hpp"
#include "gsa/models.hpp"
#include "gsa/rng.hpp"

namespace gsa {

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Constant-rate SGD

struct sgd_config {
  real rate = 0.1;

  void validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw config_error("sgd rate must be positive and finite");
    }
  }
};

inline real sgd_step(linear_model& model, const sgd_config& cfg,
                     const sample& s) {
  const auto lg = compute_loss_grad(model, s);
  apply_update(model, cfg.rate, lg.coeffs, s.features);
  return lg.loss;
}

inline void sgd_train(linear_model& model, const dataset& ds,
                      std::size_t passes, std::uint64_t seed,
                      const sgd_config& cfg, const pass_hook& hook = {}) {
  if (passes == 0) throw std::invalid_argument("passes must be >= 1");
  cfg.validate();
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (auto i : epoch_permutation(ds.size(), seed, pass)) {
      sgd_step(model, cfg, ds.samples[i]);
    }
    if (hook) hook(pass + 1, model);
  }
}

// ---------------------------------------------------------------------------
// Adadelta with whole-time averaging (gamma_t = (t-1)/t)

/// Per-weight accumulators. With gamma_t = (t-1)/t each running mean is the
/// plain average over all t steps, zeros included for steps that did not
/// touch the weight, so storing the sums keeps sparse updates O(nnz) and
/// exact: mean at step t is sum / t.
class adadelta_state {
 public:
  adadelta_state(const linear_model& model, real eps) : eps_(eps) {
    if (!(eps > 0.0)) throw config_error("adadelta eps must be positive");
    sum_g2_.assign(model.n_rows(), std::vector<real>(model.n_features(), 0.0));
    sum_dx2_ = sum_g2_;
  }

  real eps() const { return eps_; }
  std::uint64_t t() const { return t_; }

  real mean_g2(std::size_t row, std::size_t i) const {
    return t_ == 0 ? 0.0 : sum_g2_[row][i] / static_cast<real>(t_);
  }
  real mean_dx2(std::size_t row, std::size_t i) const {
    return t_ == 0 ? 0.0 : sum_dx2_[row][i] / static_cast<real>(t_);
  }

  bool matches(const linear_model& m) const {
    return sum_g2_.size() == m.n_rows() &&
           (sum_g2_.empty() || sum_g2_[0].size() == m.n_features());
  }

 private:
  friend real adadelta_step(linear_model&, adadelta_state&, const sample&);

  real eps_;
  std::vector<std::vector<real>> sum_g2_;
  std::vector<std::vector<real>> sum_dx2_;
  std::uint64_t t_ = 0;
};

inline real adadelta_step(linear_model& model, adadelta_state& st,
                          const sample& s) {
  if (!st.matches(model)) {
    throw dimension_error("adadelta state shape does not match model");
  }
  const auto lg = compute_loss_grad(model, s);
  const real prev_t = static_cast<real>(st.t_);
  st.t_ += 1;
  const real t = static_cast<real>(st.t_);
  for (std::size_t l = 0; l < model.n_rows(); ++l) {
    auto& w = model.rows[l];
    auto& sg = st.sum_g2_[l];
    auto& sd = st.sum_dx2_[l];
    for (const auto& e : s.features) {
      const real g = lg.coeffs[l] * e.value;
      const real mean_g2 = (sg[e.index] + g * g) / t;
      const real prev_dx2 = prev_t > 0.0 ? sd[e.index] / prev_t : 0.0;
      const real dx =
          -std::sqrt(prev_dx2 + st.eps_) / (std::sqrt(mean_g2) + st.eps_) * g;
      w[e.index] += dx;
      sg[e.index] += g * g;
      sd[e.index] += dx * dx;
    }
  }
  return lg.loss;
}

inline void adadelta_train(linear_model& model, const dataset& ds,
                           std::size_t passes, std::uint64_t seed, real eps,
                           const pass_hook& hook = {}) {
  if (passes == 0) throw std::invalid_argument("passes must be >= 1");
  adadelta_state st(model, eps);
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (auto i : epoch_permutation(ds.size(), seed, pass)) {
      adadelta_step(model, st, ds.samples[i]);
    }
    if (hook) hook(pass + 1, model);
  }
}

// ---------------------------------------------------------------------------
// SCSG: batch-gradient anchors with Poisson-length inner loops

struct scsg_config {
  real rate = 0.1;
  std::size_t batch_size = 1;

  void validate(std::size_t n) const {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw config_error("scsg rate must be positive and finite");
    }
    if (batch_size == 0) throw config_error("scsg batch size must be >= 1");
    if (batch_size > n) {
      throw config_error("scsg batch size " + std::to_string(batch_size) +
                         " exceeds dataset size " + std::to_string(n));
    }
  }
};

/// Mean gradient over `batch` at `anchor`, one dense row per model row.
inline std::vector<dense_vec> scsg_batch_gradient(
    const linear_model& anchor, const dataset& ds,
    std::span<const std::size_t> batch) {
  std::vector<dense_vec> mu(anchor.n_rows(), dense_vec(anchor.n_features()));
  const real inv_b = 1.0 / static_cast<real>(batch.size());
  for (auto i : batch) {
    const auto& s = ds.samples[i];
    const auto lg = compute_loss_grad(anchor, s);
    for (std::size_t l = 0; l < mu.size(); ++l) {
      scaled_add(mu[l], lg.coeffs[l] * inv_b, s.features);
    }
  }
  return mu;
}

/// w <- w - rate * (grad_i(w) - grad_i(anchor) + mu)
inline void scsg_inner_step(linear_model& model, const linear_model& anchor,
                            const std::vector<dense_vec>& mu, real rate,
                            const sample& s) {
  const auto cur = compute_loss_grad(model, s);
  const auto ref = compute_loss_grad(anchor, s);
  for (std::size_t l = 0; l < model.n_rows(); ++l) {
    auto& w = model.rows[l];
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= rate * mu[l][j];
    scaled_add(w, -rate * (cur.coeffs[l] - ref.coeffs[l]), s.features);
  }
}

/// Invoked after every sample visit; returning false ends the epoch early.
using visit_hook = std::function<bool()>;

struct scsg_epoch_stats {
  std::uint64_t visits = 0;
  std::uint64_t inner_steps = 0;  // N drawn for this epoch
  bool stopped = false;
};

/// One epoch: batch of B indices without replacement, anchor at the current
/// weights, then N ~ 1 + Poisson(B) variance-corrected steps on uniformly
/// drawn samples. The epoch costs B + N visits.
inline scsg_epoch_stats scsg_epoch(linear_model& model, const scsg_config& cfg,
                                   const dataset& ds, xoshiro256ss& rng,
                                   const visit_hook& on_visit = {}) {
  const std::size_t n = ds.size();
  cfg.validate(n);
  scsg_epoch_stats st;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cfg.batch_size; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::span<const std::size_t> batch(idx.data(), cfg.batch_size);

  const linear_model anchor = model;
  const auto mu = scsg_batch_gradient(anchor, ds, batch);
  for (std::size_t b = 0; b < cfg.batch_size; ++b) {
    ++st.visits;
    if (on_visit && !on_visit()) {
      st.stopped = true;
      return st;
    }
  }

  st.inner_steps = 1 + rng.poisson(static_cast<double>(cfg.batch_size));
  for (std::uint64_t k = 0; k < st.inner_steps; ++k) {
    const auto i = static_cast<std::size_t>(rng.below(n));
    scsg_inner_step(model, anchor, mu, cfg.rate, ds.samples[i]);
    ++st.visits;
    if (on_visit && !on_visit()) {
      st.stopped = true;
      return st;
    }
  }
  return st;
}

inline constexpr std::uint64_t scsg_stream = 0x53435347ULL << 32;

/// Runs SCSG epochs until passes * n visits have been spent; the pass hook
/// fires whenever the visit count crosses a multiple of n, which may happen
/// mid-epoch.
inline void scsg_train(linear_model& model, const dataset& ds,
                       std::size_t passes, std::uint64_t seed,
                       const scsg_config& cfg, const pass_hook& hook = {}) {
  if (passes == 0) throw std::invalid_argument("passes must be >= 1");
  cfg.validate(ds.size());
  xoshiro256ss rng(derive_seed(seed, scsg_stream));
  const std::uint64_t n = ds.size();
  const std::uint64_t budget = n * passes;
  std::uint64_t visits = 0;
  const visit_hook on_visit = [&] {
    ++visits;
    if (visits % n == 0 && hook) hook(static_cast<std::size_t>(visits / n), model);
    return visits < budget;
  };
  while (visits < budget) scsg_epoch(model, cfg, ds, rng, on_visit);
}

}  // namespace gsa
