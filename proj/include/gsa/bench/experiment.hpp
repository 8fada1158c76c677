#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gsa/baselines.hpp"
#include "gsa/bench/config.hpp"
#include "gsa/bench/fetch.hpp"
#include "gsa/bench/io.hpp"
#include "gsa/bench/report.hpp"
#include "gsa/gsa.hpp"
#include "gsa/metrics.hpp"

namespace gsa::bench {

/// Everything loaded from disk for one dataset; shared read-only by runs.
struct data_source {
  std::string name;
  dataset full;                    // file used for training (and splitting)
  std::optional<dataset> test;     // official or user-supplied test file
  const dataset_entry* entry = nullptr;
};

inline bool wants_regression(const run_config& cfg) { return cfg.model == "linear"; }

/// Resolves `dataset` as a file path first, then as a registry name (cached
/// or fetched). `test` is loaded with the same schema when it names a file or
/// is "official".
inline data_source load_data(const run_config& cfg,
                             const fetch_options& fopts = {},
                             const std::vector<dataset_entry>& reg = default_registry()) {
  data_source src;
  parse_options popts;
  popts.add_bias = cfg.add_bias;
  popts.regression = wants_regression(cfg);

  fs::path train_path;
  std::optional<fs::path> test_path;
  if (fs::exists(cfg.dataset)) {
    train_path = cfg.dataset;
    src.name = fs::path(cfg.dataset).filename().string();
    if (const auto* e = find_entry(reg, src.name)) src.entry = e;
    if (cfg.test == "official") {
      throw config_error("test = official needs a registry dataset name");
    }
  } else {
    src.entry = find_entry(reg, cfg.dataset);
    if (!src.entry) {
      throw config_error("dataset '" + cfg.dataset +
                         "' is neither a file nor a registry name");
    }
    src.name = src.entry->name;
    const bool need_test = cfg.test == "official";
    if (need_test && src.entry->test_url.empty()) {
      throw config_error(src.name + " has no official test file");
    }
    auto paths = fetch_dataset(*src.entry, fopts, need_test);
    train_path = paths.train;
    test_path = paths.test;
  }
  if (cfg.test != "split" && cfg.test != "official") test_path = cfg.test;

  if (test_path) {
    auto [tr, te] = load_libsvm_pair(train_path, *test_path, popts);
    src.full = std::move(tr);
    src.test = std::move(te);
  } else {
    src.full = load_libsvm_file(train_path, popts);
  }
  return src;
}

inline std::pair<dataset, dataset> train_test_for(const data_source& src,
                                                  const run_config& cfg) {
  if (cfg.test == "split") {
    return split_train_test(src.full, cfg.test_fraction, cfg.effective_split_seed());
  }
  if (!src.test) throw config_error("no test set loaded for " + src.name);
  return {src.full, *src.test};
}

inline model_kind resolve_model(const run_config& cfg, const dataset& ds) {
  if (cfg.model == "auto") {
    if (ds.regression) return model_kind::linear;
    return ds.n_classes == 2 ? model_kind::logistic : model_kind::softmax;
  }
  return parse_model_kind(cfg.model);
}

inline std::size_t resolve_passes(const run_config& cfg, const data_source& src) {
  if (cfg.passes) return *cfg.passes;
  return src.entry ? src.entry->default_passes : 5;
}

inline std::vector<std::size_t> resolve_eval_passes(const run_config& cfg,
                                                    std::size_t passes) {
  std::vector<std::size_t> out = cfg.eval_passes;
  if (out.empty()) {
    for (std::size_t p = 1; p <= passes; ++p) out.push_back(p);
  }
  for (auto p : out) {
    if (p == 0 || p > passes) {
      throw config_error("eval pass " + std::to_string(p) + " outside 1.." +
                         std::to_string(passes));
    }
  }
  return out;
}

struct run_result {
  std::vector<result_row> rows;
  linear_model model;
  std::vector<trace_row> trace;
};

/// Trains one configuration on an already-split problem and evaluates the
/// test set after each requested pass. elapsed_ms counts training time only.
inline run_result run_on(const std::string& name, const dataset& train,
                         const dataset& test, const run_config& cfg,
                         std::size_t passes) {
  cfg.validate();
  const auto eval = resolve_eval_passes(cfg, passes);
  run_result out;
  out.model = linear_model::for_dataset(resolve_model(cfg, train), train);
  const std::string opt(to_string(cfg.optimizer));
  const std::string hp = format_hyperparams(cfg.optimizer, cfg.hp);

  using clock = std::chrono::steady_clock;
  double train_ms = 0.0;
  auto t0 = clock::now();
  const pass_hook hook = [&](std::size_t pass, const linear_model& m) {
    train_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    if (std::binary_search(eval.begin(), eval.end(), pass)) {
      auto rec = evaluate(m, test, pass, cfg.precision);
      rec.elapsed_ms = train_ms;
      out.rows.push_back({name, opt, hp, cfg.seed, rec});
    }
    t0 = clock::now();
  };

  switch (cfg.optimizer) {
    case optimizer_kind::gsa: {
      gsa_config g = cfg.gsa;
      g.record_trace = cfg.trace;
      auto res = gsa_train(out.model, train, passes, cfg.seed, g, hook);
      out.trace = std::move(res.trace);
      break;
    }
    case optimizer_kind::sgd:
      sgd_train(out.model, train, passes, cfg.seed, sgd_config{*cfg.hp.rate}, hook);
      break;
    case optimizer_kind::adadelta:
      adadelta_train(out.model, train, passes, cfg.seed, *cfg.hp.eps, hook);
      break;
    case optimizer_kind::scsg:
      scsg_train(out.model, train, passes, cfg.seed,
                 scsg_config{*cfg.hp.rate, *cfg.hp.batch_size}, hook);
      break;
  }
  return out;
}

inline run_result run_experiment(const data_source& src, const run_config& cfg) {
  auto [train, test] = train_test_for(src, cfg);
  return run_on(src.name, train, test, cfg, resolve_passes(cfg, src));
}

inline run_result run_experiment(const run_config& cfg, const fetch_options& fopts = {}) {
  cfg.validate();
  return run_experiment(load_data(cfg, fopts), cfg);
}

/// Rows for a cell that threw: one per evaluation pass, loss NaN, flagged
/// diverged.
inline std::vector<result_row> failed_rows(const std::string& name,
                                           const run_config& cfg,
                                           const std::vector<std::size_t>& eval) {
  std::vector<result_row> rows;
  for (auto p : eval) {
    metrics_record m;
    m.pass_index = p;
    m.loss = std::nan("");
    m.diverged = true;
    rows.push_back({name, std::string(to_string(cfg.optimizer)),
                    format_hyperparams(cfg.optimizer, cfg.hp), cfg.seed, m});
  }
  return rows;
}

/// Runs every cell x repeat on a pool of `jobs` workers. Each repeat r uses
/// seed base.seed + r for both the split and the shuffles, and all cells of
/// a repeat see the same split. Output order does not depend on scheduling.
inline std::vector<result_row> run_grid(const data_source& src, const grid_config& g,
                                        std::size_t jobs = 1) {
  g.validate();
  const std::size_t passes = resolve_passes(g.base, src);
  const auto eval = resolve_eval_passes(g.base, passes);

  std::vector<std::optional<std::pair<dataset, dataset>>> splits(g.repeats);
  for (std::size_t r = 0; r < g.repeats; ++r) {
    try {
      splits[r] = train_test_for(src, g.cell_config(g.cells.front(), r));
    } catch (const split_error&) {
      splits[r].reset();
    }
  }

  const std::size_t n_tasks = g.cells.size() * g.repeats;
  std::vector<std::vector<result_row>> results(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const auto& cell = g.cells[t / g.repeats];
      const std::size_t r = t % g.repeats;
      const auto cfg = g.cell_config(cell, r);
      try {
        if (!splits[r]) throw split_error("degenerate split");
        results[t] = run_on(src.name, splits[r]->first, splits[r]->second, cfg, passes).rows;
      } catch (const std::exception&) {
        results[t] = failed_rows(src.name, cfg, eval);
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, n_tasks);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<result_row> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  sort_rows(rows);
  return rows;
}

inline std::vector<result_row> run_grid(const grid_config& g, std::size_t jobs = 1,
                                        const fetch_options& fopts = {}) {
  g.validate();
  return run_grid(load_data(g.base, fopts), g, jobs);
}

}  // namespace gsa::bench
