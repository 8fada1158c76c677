#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gsa/linalg.hpp"
#include "gsa/rng.hpp"

namespace gsa {

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " +
                                           what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class degenerate_dataset_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class split_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct sample {
  sparse_vec features;
  std::size_t label = 0;  // class index; 0 for regression
  real target = 0.0;      // regression target; unused for classification
};

struct dataset {
  std::vector<sample> samples;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;  // 1 for regression
  std::vector<std::string> label_names;  // class index -> raw label text
  bool has_bias = false;
  bool regression = false;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  std::map<std::string, std::size_t> label_map() const {
    std::map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < label_names.size(); ++i) m[label_names[i]] = i;
    return m;
  }

  /// Same schema, samples picked by index.
  dataset subset(std::span<const std::size_t> idx) const {
    dataset out = empty_like();
    out.samples.reserve(idx.size());
    for (auto i : idx) out.samples.push_back(samples.at(i));
    return out;
  }

  dataset empty_like() const {
    dataset out;
    out.n_features = n_features;
    out.n_classes = n_classes;
    out.label_names = label_names;
    out.has_bias = has_bias;
    out.regression = regression;
    return out;
  }
};

struct parse_options {
  bool add_bias = true;
  bool regression = false;
};

namespace detail {

inline std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct raw_line {
  std::string label;
  std::vector<sparse_entry> entries;
  std::size_t line_no = 0;
};

struct raw_file {
  std::vector<raw_line> lines;
  std::size_t extent = 0;  // 1 + max 0-based index
};

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline raw_file read_raw_libsvm(std::istream& in) {
  raw_file file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    auto tokens = split_ws(view);
    if (tokens.empty()) continue;

    raw_line rl;
    rl.line_no = line_no;
    rl.label = std::string(tokens[0]);
    rl.entries.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 ||
          colon + 1 == tok.size()) {
        throw parse_error("malformed pair '" + std::string(tok) + "'",
                          line_no);
      }
      std::uint64_t idx = 0;
      const auto idx_str = tok.substr(0, colon);
      auto [p, ec] =
          std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
      if (ec != std::errc() || p != idx_str.data() + idx_str.size()) {
        throw parse_error("malformed index '" + std::string(idx_str) + "'",
                          line_no);
      }
      if (idx == 0) throw parse_error("feature indices are 1-based", line_no);
      auto val = parse_real(tok.substr(colon + 1));
      if (!val) {
        throw parse_error(
            "non-numeric value '" + std::string(tok.substr(colon + 1)) + "'",
            line_no);
      }
      if (!std::isfinite(*val)) {
        throw parse_error("non-finite value '" + std::string(tok) + "'",
                          line_no);
      }
      const std::size_t zero_based = idx - 1;
      if (!rl.entries.empty() && zero_based <= rl.entries.back().index) {
        throw parse_error(zero_based == rl.entries.back().index
                              ? "duplicate index " + std::to_string(idx)
                              : "non-increasing index " + std::to_string(idx),
                          line_no);
      }
      rl.entries.push_back({zero_based, *val});
    }
    if (!rl.entries.empty()) {
      file.extent = std::max(file.extent, rl.entries.back().index + 1);
    }
    file.lines.push_back(std::move(rl));
  }
  if (file.lines.empty()) throw parse_error("empty input: no samples", 0);
  return file;
}

}  // namespace detail

/// Class order for raw labels: numeric order when every label parses as a
/// number, lexicographic otherwise. {-1,+1} therefore maps -1->0, +1->1.
inline std::vector<std::string> normalize_labels(
    std::span<const std::string> raw) {
  std::vector<std::string> names(raw.begin(), raw.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (names.size() < 2) {
    throw degenerate_dataset_error(
        "classification data needs at least 2 distinct labels, found " +
        std::to_string(names.size()));
  }
  const bool numeric = std::all_of(names.begin(), names.end(), [](auto& s) {
    return detail::parse_real(s).has_value();
  });
  if (numeric) {
    std::stable_sort(names.begin(), names.end(),
                     [](const std::string& a, const std::string& b) {
                       return *detail::parse_real(a) < *detail::parse_real(b);
                     });
  }
  return names;
}

namespace detail {

inline std::vector<dataset> assemble(std::vector<raw_file> files,
                                     const parse_options& opts) {
  std::size_t extent = 0;
  for (const auto& f : files) extent = std::max(extent, f.extent);
  const std::size_t n_features = extent + (opts.add_bias ? 1 : 0);

  std::vector<std::string> names;
  std::map<std::string, std::size_t> lookup;
  if (!opts.regression) {
    std::vector<std::string> raw;
    for (const auto& f : files)
      for (const auto& l : f.lines) raw.push_back(l.label);
    names = normalize_labels(raw);
    for (std::size_t i = 0; i < names.size(); ++i) lookup[names[i]] = i;
  }

  std::vector<dataset> out;
  for (auto& f : files) {
    dataset ds;
    ds.n_features = n_features;
    ds.n_classes = opts.regression ? 1 : names.size();
    ds.label_names = names;
    ds.has_bias = opts.add_bias;
    ds.regression = opts.regression;
    ds.samples.reserve(f.lines.size());
    for (auto& l : f.lines) {
      sample s;
      if (opts.regression) {
        auto t = parse_real(l.label);
        if (!t || !std::isfinite(*t)) {
          throw parse_error("non-numeric regression target '" + l.label + "'",
                            l.line_no);
        }
        s.target = *t;
      } else {
        s.label = lookup.at(l.label);
      }
      if (opts.add_bias) l.entries.push_back({n_features - 1, 1.0});
      s.features = sparse_vec(std::move(l.entries), n_features);
      ds.samples.push_back(std::move(s));
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace detail

/// Parse LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).
inline dataset parse_libsvm(std::istream& in, const parse_options& opts = {}) {
  std::vector<detail::raw_file> files;
  files.push_back(detail::read_raw_libsvm(in));
  return std::move(detail::assemble(std::move(files), opts).front());
}

/// Parse a train/test pair so both sides share the label map, feature count
/// and bias column.
inline std::pair<dataset, dataset> parse_libsvm_pair(
    std::istream& train, std::istream& test, const parse_options& opts = {}) {
  std::vector<detail::raw_file> files;
  files.push_back(detail::read_raw_libsvm(train));
  files.push_back(detail::read_raw_libsvm(test));
  auto ds = detail::assemble(std::move(files), opts);
  return {std::move(ds[0]), std::move(ds[1])};
}

/// Inverse of parse_libsvm: the bias column is dropped and indices are
/// written 1-based with round-trip precision.
inline void write_libsvm(const dataset& ds, std::ostream& out) {
  char buf[64];
  const std::size_t bias_index = ds.has_bias ? ds.n_features - 1 : SIZE_MAX;
  for (const auto& s : ds.samples) {
    if (ds.regression) {
      std::snprintf(buf, sizeof buf, "%.17g", s.target);
      out << buf;
    } else {
      out << ds.label_names.at(s.label);
    }
    for (const auto& e : s.features) {
      if (e.index == bias_index) continue;
      std::snprintf(buf, sizeof buf, " %zu:%.17g", e.index + 1, e.value);
      out << buf;
    }
    out << '\n';
  }
}

inline constexpr std::uint64_t split_stream = 0x53504C4954000000ULL;

namespace detail {
inline void fisher_yates(std::vector<std::size_t>& v, xoshiro256ss& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}
}  // namespace detail

/// Shuffle order for one pass; a pure function of (n, seed, epoch).
inline std::vector<std::size_t> epoch_permutation(std::size_t n,
                                                  std::uint64_t seed,
                                                  std::uint64_t epoch) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  xoshiro256ss rng(derive_seed(seed, epoch));
  detail::fisher_yates(perm, rng);
  return perm;
}

/// Seeded train/test partition: ceil(n * (1 - test_fraction)) samples train.
inline std::pair<dataset, dataset> split_train_test(const dataset& ds,
                                                    double test_fraction,
                                                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw split_error("test_fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  // The epsilon keeps e.g. 100 * 0.7 from rounding up to 71.
  const auto n_train = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * (1.0 - test_fraction) - 1e-9));
  if (n_train == 0 || n_train >= n) {
    throw split_error("split of " + std::to_string(n) +
                      " samples leaves one side empty");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  xoshiro256ss rng(derive_seed(seed, split_stream));
  detail::fisher_yates(perm, rng);
  std::span<const std::size_t> all(perm);
  return {ds.subset(all.first(n_train)), ds.subset(all.subspan(n_train))};
}

}  // namespace gsa
