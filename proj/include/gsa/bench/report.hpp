#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "gsa/bench/text.hpp"
#include "gsa/metrics.hpp"

namespace gsa::bench {

struct result_row {
  std::string dataset;
  std::string optimizer;
  std::string hyperparams;
  std::uint64_t seed = 0;
  metrics_record m;

  friend bool operator==(const result_row&, const result_row&) = default;
};

inline constexpr std::string_view csv_header =
    "dataset,optimizer,hyperparams,seed,pass,loss,precision,auc,elapsed_ms,diverged";

inline int optimizer_rank(std::string_view o) {
  if (o == "gsa") return 0;
  if (o == "sgd") return 1;
  if (o == "adadelta") return 2;
  if (o == "scsg") return 3;
  return 4;
}

/// Numeric-aware ordering of hyperparameter labels, so rate=0.01 sorts
/// before rate=0.1 and batch sizes compare as numbers.
inline bool hyperparams_less(const std::string& a, const std::string& b) {
  auto tokens = [](const std::string& s) {
    std::vector<std::pair<std::string, double>> out;
    std::size_t i = 0;
    while (i < s.size()) {
      auto j = s.find(' ', i);
      if (j == std::string::npos) j = s.size();
      const std::string tok = s.substr(i, j - i);
      const auto eq = tok.find('=');
      double v = 0.0;
      if (eq != std::string::npos) {
        if (auto r = parse_real(tok.substr(eq + 1))) v = *r;
      }
      out.emplace_back(tok.substr(0, eq), v);
      i = j + 1;
    }
    return out;
  };
  const auto ta = tokens(a), tb = tokens(b);
  if (ta != tb) return ta < tb;
  return a < b;
}

inline bool row_less(const result_row& a, const result_row& b) {
  if (a.dataset != b.dataset) return a.dataset < b.dataset;
  const int ra = optimizer_rank(a.optimizer), rb = optimizer_rank(b.optimizer);
  if (ra != rb) return ra < rb;
  if (a.optimizer != b.optimizer) return a.optimizer < b.optimizer;
  if (a.hyperparams != b.hyperparams) return hyperparams_less(a.hyperparams, b.hyperparams);
  if (a.seed != b.seed) return a.seed < b.seed;
  return a.m.pass_index < b.m.pass_index;
}

inline void sort_rows(std::vector<result_row>& rows) {
  std::stable_sort(rows.begin(), rows.end(), row_less);
}

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line,
                                               std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw parse_error("unterminated quote", line_no);
  out.push_back(std::move(cur));
  return out;
}
}  // namespace detail

/// Elapsed time is written with microsecond resolution; pass
/// `with_elapsed = false` to zero it for byte comparisons.
inline void write_csv(const std::vector<result_row>& rows, std::ostream& out,
                      bool with_elapsed = true) {
  if (rows.empty()) throw std::invalid_argument("no records to report");
  out << csv_header << '\n';
  char ms[48];
  for (const auto& r : rows) {
    std::snprintf(ms, sizeof ms, "%.3f", with_elapsed ? r.m.elapsed_ms : 0.0);
    out << detail::csv_field(r.dataset) << ',' << detail::csv_field(r.optimizer)
        << ',' << detail::csv_field(r.hyperparams) << ',' << r.seed << ','
        << r.m.pass_index << ',' << format_real(r.m.loss) << ','
        << (r.m.precision ? format_real(*r.m.precision) : "") << ','
        << (r.m.auc ? format_real(*r.m.auc) : "") << ',' << ms << ','
        << (r.m.diverged ? 1 : 0) << '\n';
  }
}

inline std::vector<result_row> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty CSV", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header) throw parse_error("unexpected CSV header '" + line + "'", 1);
  std::vector<result_row> rows;
  std::size_t no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line, no);
    if (f.size() != 10) {
      throw parse_error("expected 10 fields, got " + std::to_string(f.size()), no);
    }
    auto num = [&](const std::string& s, const char* what) {
      auto v = parse_real(s);
      if (!v) throw parse_error(std::string("bad ") + what + " '" + s + "'", no);
      return *v;
    };
    auto uint = [&](const std::string& s, const char* what) {
      auto v = parse_uint(s);
      if (!v) throw parse_error(std::string("bad ") + what + " '" + s + "'", no);
      return *v;
    };
    result_row r;
    r.dataset = f[0];
    r.optimizer = f[1];
    r.hyperparams = f[2];
    r.seed = uint(f[3], "seed");
    r.m.pass_index = static_cast<std::size_t>(uint(f[4], "pass"));
    r.m.loss = num(f[5], "loss");
    if (!f[6].empty()) r.m.precision = num(f[6], "precision");
    if (!f[7].empty()) r.m.auc = num(f[7], "auc");
    r.m.elapsed_ms = num(f[8], "elapsed_ms");
    if (f[9] != "0" && f[9] != "1") throw parse_error("bad diverged '" + f[9] + "'", no);
    r.m.diverged = f[9] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation over repeats

struct summary_stat {
  real mean = 0.0;
  real sd = std::nan("");  // sample standard deviation; NaN for one value
  std::size_t n = 0;
};

inline std::optional<summary_stat> summarize_values(const std::vector<real>& v) {
  if (v.empty()) return std::nullopt;
  summary_stat s;
  s.n = v.size();
  for (real x : v) s.mean += x;
  s.mean /= static_cast<real>(s.n);
  if (s.n > 1) {
    real ss = 0.0;
    for (real x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<real>(s.n - 1));
  }
  return s;
}

struct cell_key {
  std::string dataset;
  std::string optimizer;
  std::string hyperparams;

  friend bool operator==(const cell_key&, const cell_key&) = default;
};

inline bool cell_less(const cell_key& a, const cell_key& b) {
  result_row ra{a.dataset, a.optimizer, a.hyperparams, 0, {}};
  result_row rb{b.dataset, b.optimizer, b.hyperparams, 0, {}};
  return row_less(ra, rb);
}

enum class metric_id { loss, precision, auc };

inline std::string_view to_string(metric_id m) {
  switch (m) {
    case metric_id::loss: return "loss";
    case metric_id::precision: return "prec.";
    case metric_id::auc: return "auc";
  }
  return "?";
}

inline bool lower_is_better(metric_id m) { return m == metric_id::loss; }

struct cell_summary {
  cell_key key;
  std::size_t runs = 0;     // distinct seeds
  std::size_t diverged = 0;  // records flagged diverged
  // (metric, pass) -> stats over seeds
  std::map<std::pair<metric_id, std::size_t>, summary_stat> stats;

  std::optional<summary_stat> get(metric_id m, std::size_t pass) const {
    auto it = stats.find({m, pass});
    if (it == stats.end()) return std::nullopt;
    return it->second;
  }
};

/// Groups rows by cell and reduces each (metric, pass) over seeds. Output is
/// in report order.
inline std::vector<cell_summary> summarize(const std::vector<result_row>& rows) {
  std::vector<cell_summary> cells;
  std::vector<std::map<std::pair<metric_id, std::size_t>, std::vector<real>>> vals;
  std::vector<std::set<std::uint64_t>> seeds;
  for (const auto& r : rows) {
    const cell_key k{r.dataset, r.optimizer, r.hyperparams};
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const cell_summary& c) { return c.key == k; });
    std::size_t i = static_cast<std::size_t>(it - cells.begin());
    if (it == cells.end()) {
      cells.push_back({k, 0, 0, {}});
      vals.emplace_back();
      seeds.emplace_back();
    }
    seeds[i].insert(r.seed);
    if (r.m.diverged) ++cells[i].diverged;
    vals[i][{metric_id::loss, r.m.pass_index}].push_back(r.m.loss);
    if (r.m.precision) vals[i][{metric_id::precision, r.m.pass_index}].push_back(*r.m.precision);
    if (r.m.auc) vals[i][{metric_id::auc, r.m.pass_index}].push_back(*r.m.auc);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cells[i].runs = seeds[i].size();
    for (const auto& [k, v] : vals[i]) cells[i].stats[k] = *summarize_values(v);
  }
  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cell_less(cells[a].key, cells[b].key);
  });
  std::vector<cell_summary> out;
  for (auto i : order) out.push_back(std::move(cells[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Markdown

namespace detail {
inline std::string fmt3(real v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline bool better(metric_id m, real a, real b) {
  if (std::isnan(b)) return !std::isnan(a);
  if (std::isnan(a)) return false;
  return lower_is_better(m) ? a < b : a > b;
}

struct column {
  metric_id metric;
  std::size_t pass;
};

inline std::vector<column> columns_for(const std::vector<const cell_summary*>& cells) {
  std::set<std::size_t> passes;
  std::set<metric_id> metrics;
  for (const auto* c : cells) {
    for (const auto& [k, s] : c->stats) {
      metrics.insert(k.first);
      passes.insert(k.second);
    }
  }
  std::vector<column> cols;
  for (auto m : {metric_id::loss, metric_id::precision, metric_id::auc}) {
    if (!metrics.count(m)) continue;
    for (auto p : passes) cols.push_back({m, p});
  }
  return cols;
}
}  // namespace detail

/// One table per dataset: rows are cells, columns are metric x pass, a
/// leading **best** row holds the best mean per column and the winning cells
/// are bolded. With repeats, cells show mean ± sample standard deviation.
inline void write_markdown(const std::vector<result_row>& rows, std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("no records to report");
  const auto cells = summarize(rows);
  std::vector<std::string> datasets;
  for (const auto& c : cells) {
    if (std::find(datasets.begin(), datasets.end(), c.key.dataset) == datasets.end()) {
      datasets.push_back(c.key.dataset);
    }
  }
  bool first = true;
  for (const auto& ds : datasets) {
    std::vector<const cell_summary*> group;
    for (const auto& c : cells) {
      if (c.key.dataset == ds) group.push_back(&c);
    }
    const auto cols = detail::columns_for(group);
    std::vector<real> best(cols.size(), std::nan(""));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (const auto* c : group) {
        if (auto s = c->get(cols[j].metric, cols[j].pass)) {
          if (detail::better(cols[j].metric, s->mean, best[j])) best[j] = s->mean;
        }
      }
    }
    if (!first) out << '\n';
    first = false;
    out << "### " << ds << "\n\n| optimizer | hyperparams |";
    for (const auto& c : cols) out << ' ' << to_string(c.metric) << " @" << c.pass << " |";
    out << "\n|---|---|";
    for (std::size_t j = 0; j < cols.size(); ++j) out << "---|";
    out << "\n| **best** | |";
    for (std::size_t j = 0; j < cols.size(); ++j) out << " **" << detail::fmt3(best[j]) << "** |";
    out << '\n';
    for (const auto* c : group) {
      out << "| " << c->key.optimizer << " | " << c->key.hyperparams << " |";
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto s = c->get(cols[j].metric, cols[j].pass);
        if (!s) {
          out << " |";
          continue;
        }
        std::string v = detail::fmt3(s->mean);
        if (s->n > 1) v += " ± " + detail::fmt3(s->sd);
        const bool is_best = !std::isnan(best[j]) && s->mean == best[j];
        out << ' ' << (is_best ? "**" + v + "**" : v) << " |";
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// GSA against the best other method, across datasets

struct gap_cell {
  real mean_err = std::nan("");  // mean over datasets of GSA - best other
  std::size_t n_best = 0;       // datasets where GSA matches or beats the rest
  std::size_t n_datasets = 0;
};

/// Columns are (metric, slot) with slot 0 = first evaluated pass, 1 = second,
/// 2 = last, matching how datasets with different pass budgets line up.
struct gap_summary {
  std::map<std::pair<metric_id, int>, gap_cell> cells;
};

inline gap_summary compute_gap_summary(const std::vector<result_row>& rows) {
  const auto cells = summarize(rows);
  std::map<std::string, std::vector<const cell_summary*>> by_ds;
  for (const auto& c : cells) by_ds[c.key.dataset].push_back(&c);
  std::map<std::pair<metric_id, int>, std::vector<real>> errs;
  gap_summary g;
  for (const auto& [ds, group] : by_ds) {
    const cell_summary* gsa = nullptr;
    for (const auto* c : group) {
      if (c->key.optimizer == "gsa") gsa = c;
    }
    if (!gsa || group.size() < 2) continue;
    std::set<std::size_t> passes;
    for (const auto& [k, s] : gsa->stats) passes.insert(k.second);
    if (passes.empty()) continue;
    const std::vector<std::size_t> pv(passes.begin(), passes.end());
    std::vector<std::pair<int, std::size_t>> slots{{0, pv.front()}};
    if (pv.size() > 2) slots.push_back({1, pv[1]});
    if (pv.size() > 1) slots.push_back({2, pv.back()});
    for (auto m : {metric_id::loss, metric_id::precision, metric_id::auc}) {
      for (auto [slot, pass] : slots) {
        const auto mine = gsa->get(m, pass);
        if (!mine) continue;
        real best = std::nan("");
        for (const auto* c : group) {
          if (c == gsa) continue;
          if (auto s = c->get(m, pass); s && detail::better(m, s->mean, best)) best = s->mean;
        }
        if (std::isnan(best)) continue;
        auto& cell = g.cells[{m, slot}];
        ++cell.n_datasets;
        if (!detail::better(m, best, mine->mean)) ++cell.n_best;
        errs[{m, slot}].push_back(mine->mean - best);
      }
    }
  }
  for (auto& [k, v] : errs) g.cells[k].mean_err = summarize_values(v)->mean;
  return g;
}

inline void write_gap_summary(const gap_summary& g, std::ostream& out) {
  static const char* slot_names[] = {"1", "2", "last"};
  std::vector<std::pair<metric_id, int>> cols;
  for (const auto& [k, c] : g.cells) cols.push_back(k);
  out << "| | ";
  for (auto [m, s] : cols) out << to_string(m) << " @" << slot_names[s] << " | ";
  out << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
  out << "\n| mean(Err) | ";
  for (const auto& k : cols) out << detail::fmt3(g.cells.at(k).mean_err) << " | ";
  out << "\n| #best | ";
  for (const auto& k : cols) {
    const auto& c = g.cells.at(k);
    out << c.n_best << "/" << c.n_datasets << " | ";
  }
  out << '\n';
}

}  // namespace gsa::bench
