#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gsa {

using real = double;

class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class value_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct sparse_entry {
  std::size_t index;
  real value;

  friend bool operator==(const sparse_entry&, const sparse_entry&) = default;
};

/// One sample's features as sorted (index, value) pairs.
///
/// Indices are strictly increasing and every value is finite; both are
/// checked on construction so that corrupt input fails at ingestion.
/// `dim` is the declared dimensionality and may exceed the largest index.
class sparse_vec {
 public:
  sparse_vec() = default;

  explicit sparse_vec(std::vector<sparse_entry> entries, std::size_t dim = 0)
      : entries_(std::move(entries)), dim_(dim) {
    validate();
  }

  sparse_vec(std::initializer_list<sparse_entry> entries, std::size_t dim = 0)
      : sparse_vec(std::vector<sparse_entry>(entries), dim) {}

  std::span<const sparse_entry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return dim_; }

  /// 1 + largest stored index, or 0 when empty.
  std::size_t extent() const {
    return entries_.empty() ? 0 : entries_.back().index + 1;
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const sparse_vec&, const sparse_vec&) = default;

 private:
  void validate() const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!std::isfinite(entries_[i].value)) {
        throw value_error("sparse_vec: non-finite value at index " +
                          std::to_string(entries_[i].index));
      }
      if (i > 0 && entries_[i].index <= entries_[i - 1].index) {
        throw value_error("sparse_vec: indices must be strictly increasing");
      }
    }
    if (dim_ != 0 && extent() > dim_) {
      throw dimension_error("sparse_vec: index " +
                            std::to_string(entries_.back().index) +
                            " out of declared dimension " +
                            std::to_string(dim_));
    }
  }

  std::vector<sparse_entry> entries_;
  std::size_t dim_ = 0;
};

/// Fixed-length dense row of weights.
class dense_vec {
 public:
  dense_vec() = default;
  explicit dense_vec(std::size_t n, real fill = 0.0) : values_(n, fill) {}
  explicit dense_vec(std::vector<real> values) : values_(std::move(values)) {}
  dense_vec(std::initializer_list<real> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  real& operator[](std::size_t i) { return values_[i]; }
  real operator[](std::size_t i) const { return values_[i]; }
  std::span<real> values() { return values_; }
  std::span<const real> values() const { return values_; }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](real v) { return std::isfinite(v); });
  }

  friend bool operator==(const dense_vec&, const dense_vec&) = default;

 private:
  std::vector<real> values_;
};

namespace detail {
inline void check_fits(const sparse_vec& s, std::size_t n) {
  if (s.extent() > n) {
    throw dimension_error("sparse index " + std::to_string(s.extent() - 1) +
                          " out of range for dense length " +
                          std::to_string(n));
  }
}
}  // namespace detail

/// Accumulates in ascending index order, so results are bit-reproducible.
inline real sparse_dot(const sparse_vec& s, std::span<const real> d) {
  detail::check_fits(s, d.size());
  real acc = 0.0;
  for (const auto& e : s) acc += e.value * d[e.index];
  return acc;
}

inline real sparse_dot(const sparse_vec& s, const dense_vec& d) {
  return sparse_dot(s, d.values());
}

inline real sparse_sq_norm(const sparse_vec& s) {
  real acc = 0.0;
  for (const auto& e : s) acc += e.value * e.value;
  return acc;
}

/// d[index] += a * value for each stored entry of s.
inline void scaled_add(std::span<real> d, real a, const sparse_vec& s) {
  detail::check_fits(s, d.size());
  for (const auto& e : s) d[e.index] += a * e.value;
}

inline void scaled_add(dense_vec& d, real a, const sparse_vec& s) {
  scaled_add(d.values(), a, s);
}

/// Max-shifted softmax. Requires at least two logits.
inline std::vector<real> stable_softmax(std::span<const real> z) {
  if (z.size() < 2) throw dimension_error("stable_softmax: need L >= 2");
  const real zmax = *std::max_element(z.begin(), z.end());
  std::vector<real> p(z.size());
  real sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - zmax);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace gsa
