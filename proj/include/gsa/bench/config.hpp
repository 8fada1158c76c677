#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsa/baselines.hpp"
#include "gsa/bench/text.hpp"
#include "gsa/gsa.hpp"
#include "gsa/metrics.hpp"

namespace gsa::bench {

enum class optimizer_kind { gsa, sgd, adadelta, scsg };

inline std::string_view to_string(optimizer_kind k) {
  switch (k) {
    case optimizer_kind::gsa: return "gsa";
    case optimizer_kind::sgd: return "sgd";
    case optimizer_kind::adadelta: return "adadelta";
    case optimizer_kind::scsg: return "scsg";
  }
  return "?";
}

inline optimizer_kind parse_optimizer(std::string_view s) {
  for (auto k : {optimizer_kind::gsa, optimizer_kind::sgd,
                 optimizer_kind::adadelta, optimizer_kind::scsg}) {
    if (s == to_string(k)) return k;
  }
  throw config_error("unknown optimizer '" + std::string(s) +
                     "' (expected gsa, sgd, adadelta or scsg)");
}

struct hyperparams {
  std::optional<real> rate;
  std::optional<real> eps;
  std::optional<std::size_t> batch_size;

  friend bool operator==(const hyperparams&, const hyperparams&) = default;
};

/// Report label for a cell's hyperparameters; GSA has none and shows "/".
inline std::string format_hyperparams(optimizer_kind k, const hyperparams& hp) {
  if (k == optimizer_kind::gsa) return "/";
  std::string out;
  auto add = [&](std::string_view key, const std::string& v) {
    if (!out.empty()) out += ' ';
    out += key;
    out += '=';
    out += v;
  };
  auto num = [](real v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    auto back = parse_real(buf);
    return back && *back == v ? std::string(buf) : format_real(v);
  };
  if (hp.rate) add("rate", num(*hp.rate));
  if (hp.eps) add("eps", num(*hp.eps));
  if (hp.batch_size) add("batch_size", std::to_string(*hp.batch_size));
  return out;
}

/// Throws unless exactly the hyperparameters the optimizer uses are set.
inline void check_hyperparams(optimizer_kind k, const hyperparams& hp) {
  const bool need_rate = k == optimizer_kind::sgd || k == optimizer_kind::scsg;
  const bool need_eps = k == optimizer_kind::adadelta;
  const bool need_batch = k == optimizer_kind::scsg;
  const std::string who(to_string(k));
  auto check = [&](bool need, bool have, std::string_view key) {
    if (need && !have) throw config_error(who + " requires " + std::string(key));
    if (!need && have) {
      throw config_error(who + " does not take " + std::string(key));
    }
  };
  check(need_rate, hp.rate.has_value(), "rate");
  check(need_eps, hp.eps.has_value(), "eps");
  check(need_batch, hp.batch_size.has_value(), "batch_size");
  if (hp.rate) sgd_config{*hp.rate}.validate();
  if (hp.eps && !(*hp.eps > 0.0)) throw config_error("eps must be positive");
  if (hp.batch_size && *hp.batch_size == 0) {
    throw config_error("batch_size must be >= 1");
  }
}

struct run_config {
  std::string dataset;               // registry name or file path
  std::string test = "split";        // split | official | <path>
  real test_fraction = 0.2;
  std::optional<std::uint64_t> split_seed;  // defaults to seed
  std::string model = "auto";        // auto | logistic | softmax | linear
  optimizer_kind optimizer = optimizer_kind::gsa;
  hyperparams hp;
  std::optional<std::size_t> passes;  // defaults to the registry entry, else 5
  std::uint64_t seed = 1;
  std::vector<std::size_t> eval_passes;  // empty: every pass
  bool add_bias = true;
  std::string output_dir;
  gsa_config gsa;
  precision_metric precision = precision_metric::accuracy;
  bool trace = false;

  std::uint64_t effective_split_seed() const { return split_seed.value_or(seed); }

  void set(std::string_view key, std::string_view raw) {
    const std::string k(key);
    const std::string_view v = trim(raw);
    auto bad = [&](std::string_view what) {
      return config_error("bad value '" + std::string(v) + "' for " + k + ": " +
                          std::string(what));
    };
    auto real_of = [&] {
      auto r = parse_real(v);
      if (!r || !std::isfinite(*r)) throw bad("expected a finite number");
      return *r;
    };
    auto uint_of = [&] {
      auto r = parse_uint(v);
      if (!r) throw bad("expected a non-negative integer");
      return *r;
    };
    auto bool_of = [&] {
      auto r = parse_bool(v);
      if (!r) throw bad("expected true or false");
      return *r;
    };
    if (k == "dataset") dataset = v;
    else if (k == "test") test = v;
    else if (k == "test_fraction") test_fraction = real_of();
    else if (k == "split_seed") split_seed = uint_of();
    else if (k == "model") {
      if (v != "auto" && v != "logistic" && v != "softmax" && v != "linear") {
        throw bad("expected auto, logistic, softmax or linear");
      }
      model = v;
    } else if (k == "optimizer") optimizer = parse_optimizer(v);
    else if (k == "rate") hp.rate = real_of();
    else if (k == "eps") hp.eps = real_of();
    else if (k == "batch_size") hp.batch_size = static_cast<std::size_t>(uint_of());
    else if (k == "passes") passes = static_cast<std::size_t>(uint_of());
    else if (k == "seed") seed = uint_of();
    else if (k == "eval_passes") {
      eval_passes.clear();
      std::string_view rest = v;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto tok = trim(rest.substr(0, comma));
        auto p = parse_uint(tok);
        if (!p || *p == 0) throw bad("expected comma-separated passes >= 1");
        eval_passes.push_back(static_cast<std::size_t>(*p));
        rest = comma == std::string_view::npos ? std::string_view{}
                                               : rest.substr(comma + 1);
      }
      std::sort(eval_passes.begin(), eval_passes.end());
      eval_passes.erase(std::unique(eval_passes.begin(), eval_passes.end()),
                        eval_passes.end());
    } else if (k == "add_bias") add_bias = bool_of();
    else if (k == "output_dir") output_dir = v;
    else if (k == "p_hat") gsa.p_hat = real_of();
    else if (k == "clamp_negative") gsa.clamp_negative = bool_of();
    else if (k == "eta_max") gsa.eta_max = real_of();
    else if (k == "logistic_step") {
      if (v == "approx") gsa.logistic = logistic_step::approx;
      else if (v == "exact") gsa.logistic = logistic_step::exact;
      else throw bad("expected approx or exact");
    } else if (k == "precision_metric") {
      if (v == "accuracy") precision = precision_metric::accuracy;
      else if (v == "average_precision") precision = precision_metric::average_precision;
      else throw bad("expected accuracy or average_precision");
    } else if (k == "trace") trace = bool_of();
    else throw config_error("unknown key '" + k + "'");
  }

  void validate() const {
    if (dataset.empty()) throw config_error("dataset is required");
    if (passes && *passes == 0) throw config_error("passes must be >= 1");
    if (test == "split" && !(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw config_error("test_fraction must lie in (0, 1)");
    }
    if (passes) {
      for (auto p : eval_passes) {
        if (p > *passes) {
          throw config_error("eval pass " + std::to_string(p) +
                             " exceeds passes " + std::to_string(*passes));
        }
      }
    }
    check_hyperparams(optimizer, hp);
    gsa.validate();
  }
};

struct kv_line {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// `key = value` lines; '#' starts a comment, blank lines are skipped.
inline std::vector<kv_line> read_kv(std::istream& in) {
  std::vector<kv_line> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::string_view s = line;
    if (auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw config_error("line " + std::to_string(no) + ": expected key = value");
    }
    const auto key = trim(s.substr(0, eq));
    if (key.empty()) {
      throw config_error("line " + std::to_string(no) + ": empty key");
    }
    out.push_back({std::string(key), std::string(trim(s.substr(eq + 1))), no});
  }
  return out;
}

/// Splits a `key=value` override as given on the command line.
inline std::pair<std::string, std::string> split_override(std::string_view s) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw config_error("override '" + std::string(s) + "' is not key=value");
  }
  return {std::string(trim(s.substr(0, eq))), std::string(trim(s.substr(eq + 1)))};
}

inline void apply_line(run_config& cfg, const kv_line& kv) {
  try {
    cfg.set(kv.key, kv.value);
  } catch (const config_error& e) {
    throw config_error("line " + std::to_string(kv.line) + ": " + e.what());
  }
}

inline run_config parse_run_config(std::istream& in,
                                   const std::vector<std::string>& overrides = {}) {
  run_config cfg;
  for (const auto& kv : read_kv(in)) apply_line(cfg, kv);
  for (const auto& o : overrides) {
    auto [k, v] = split_override(o);
    cfg.set(k, v);
  }
  cfg.validate();
  return cfg;
}

struct grid_cell {
  optimizer_kind optimizer = optimizer_kind::gsa;
  hyperparams hp;

  std::string label() const { return format_hyperparams(optimizer, hp); }
  friend bool operator==(const grid_cell&, const grid_cell&) = default;
};

/// "sgd rate=0.1", "scsg rate=0.1 batch_size=1000", "gsa".
inline grid_cell parse_cell(std::string_view text) {
  grid_cell c;
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) toks.push_back(text.substr(i, j - i));
    i = j;
  }
  if (toks.empty()) throw config_error("empty grid cell");
  c.optimizer = parse_optimizer(toks[0]);
  run_config scratch;
  for (std::size_t t = 1; t < toks.size(); ++t) {
    auto [k, v] = split_override(toks[t]);
    if (k != "rate" && k != "eps" && k != "batch_size") {
      throw config_error("grid cell key '" + k + "' is not a hyperparameter");
    }
    scratch.set(k, v);
  }
  c.hp = scratch.hp;
  check_hyperparams(c.optimizer, c.hp);
  return c;
}

struct grid_config {
  run_config base;
  std::vector<grid_cell> cells;
  std::size_t repeats = 1;

  void validate() const {
    if (cells.empty()) throw config_error("grid has no cells");
    if (repeats == 0) throw config_error("repeats must be >= 1");
    for (const auto& c : cells) {
      run_config r = base;
      r.optimizer = c.optimizer;
      r.hp = c.hp;
      r.validate();
    }
  }

  run_config cell_config(const grid_cell& c, std::size_t repeat) const {
    run_config r = base;
    r.optimizer = c.optimizer;
    r.hp = c.hp;
    r.seed = base.seed + repeat;
    if (base.split_seed) r.split_seed = *base.split_seed + repeat;
    return r;
  }
};

/// Same key = value format as a run file, plus `cell = <optimizer> k=v ...`
/// (repeatable) and `repeats = N`. Hyperparameter keys outside a cell line
/// are not allowed.
inline grid_config parse_grid_config(std::istream& in,
                                     const std::vector<std::string>& overrides = {}) {
  grid_config g;
  auto apply = [&](const std::string& key, const std::string& value) {
    if (key == "cell") {
      g.cells.push_back(parse_cell(value));
    } else if (key == "repeats") {
      auto r = parse_uint(value);
      if (!r || *r == 0) throw config_error("repeats must be an integer >= 1");
      g.repeats = static_cast<std::size_t>(*r);
    } else if (key == "optimizer" || key == "rate" || key == "eps" ||
               key == "batch_size") {
      throw config_error("'" + key + "' belongs on a cell line in a grid file");
    } else {
      g.base.set(key, value);
    }
  };
  for (const auto& kv : read_kv(in)) {
    try {
      apply(kv.key, kv.value);
    } catch (const config_error& e) {
      throw config_error("line " + std::to_string(kv.line) + ": " + e.what());
    }
  }
  for (const auto& o : overrides) {
    auto [k, v] = split_override(o);
    apply(k, v);
  }
  g.validate();
  return g;
}

}  // namespace gsa::bench
