#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "gsa/bench/config.hpp"
#include "gsa/bench/experiment.hpp"
#include "gsa/bench/fetch.hpp"
#include "gsa/bench/io.hpp"
#include "gsa/bench/model_io.hpp"
#include "gsa/bench/report.hpp"

namespace fs = std::filesystem;
using namespace gsa;
using namespace gsa::bench;

namespace {

struct common_opts {
  std::string cache_dir;
  bool full = false;
  bool offline = false;

  fetch_options fetch() const {
    fetch_options f;
    if (!cache_dir.empty()) f.cache_dir = cache_dir;
    f.full = full;
    f.allow_network = !offline;
    return f;
  }
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

void write_outputs(const std::vector<result_row>& rows, const std::string& csv_path,
                   const std::string& md_path) {
  if (csv_path.empty() || csv_path == "-") {
    write_csv(rows, std::cout);
  } else {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    write_csv(rows, out);
  }
  if (!md_path.empty()) {
    std::ofstream out(md_path);
    if (!out) throw std::runtime_error("cannot write " + md_path);
    write_markdown(rows, out);
  }
}

int cmd_fetch(const std::vector<std::string>& names, bool list, const common_opts& c) {
  const auto& reg = default_registry();
  if (list) {
    for (const auto& e : reg) {
      std::printf("%-20s passes=%zu%s%s\n  %s\n", e.name.c_str(), e.default_passes,
                  e.official_test ? " official-test" : "", e.large ? " large" : "",
                  e.url.c_str());
    }
    return 0;
  }
  if (names.empty()) throw std::runtime_error("fetch: name a dataset or use --list");
  int rc = 0;
  for (const auto& n : names) {
    const auto* e = find_entry(reg, n);
    if (!e) {
      std::fprintf(stderr, "fetch: unknown dataset '%s'\n", n.c_str());
      rc = 1;
      continue;
    }
    try {
      const auto p = fetch_dataset(*e, c.fetch());
      std::printf("%s %s\n", n.c_str(), p.train.string().c_str());
      if (p.test) std::printf("%s.test %s\n", n.c_str(), p.test->string().c_str());
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "fetch: %s: %s\n", n.c_str(), ex.what());
      rc = 1;
    }
  }
  return rc;
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets,
            const common_opts& c) {
  auto in = open_in(config);
  const auto cfg = parse_run_config(in, sets);
  const auto res = run_experiment(cfg, c.fetch());
  if (cfg.output_dir.empty()) {
    write_csv(res.rows, std::cout);
    return 0;
  }
  fs::create_directories(cfg.output_dir);
  const fs::path dir = cfg.output_dir;
  write_outputs(res.rows, (dir / "records.csv").string(), (dir / "report.md").string());
  save_model(res.model, dir / "model.txt");
  if (cfg.trace) {
    std::ofstream t(dir / "trace.csv");
    write_trace_csv(res.trace, t);
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_grid(const std::string& config, const std::vector<std::string>& sets,
             std::size_t jobs, const std::string& csv, const std::string& md,
             const common_opts& c) {
  auto in = open_in(config);
  const auto g = parse_grid_config(in, sets);
  const auto rows = run_grid(g, jobs, c.fetch());
  std::string csv_path = csv, md_path = md;
  if (!g.base.output_dir.empty()) {
    fs::create_directories(g.base.output_dir);
    const fs::path dir = g.base.output_dir;
    if (csv_path.empty()) csv_path = (dir / "grid.csv").string();
    if (md_path.empty()) md_path = (dir / "grid.md").string();
  }
  write_outputs(rows, csv_path, md_path);
  return 0;
}

int cmd_parse_check(const std::string& path, bool regression, bool bias) {
  parse_options o;
  o.regression = regression;
  o.add_bias = bias;
  const auto ds = load_libsvm_file(path, o);
  std::size_t nnz = 0;
  for (const auto& s : ds.samples) nnz += s.features.nnz();
  std::printf("samples    %zu\nfeatures   %zu%s\nnnz        %zu\n", ds.size(),
              ds.n_features, ds.has_bias ? " (incl. bias)" : "", nnz);
  if (ds.regression) {
    std::printf("task       regression\n");
  } else {
    std::vector<std::size_t> counts(ds.n_classes, 0);
    for (const auto& s : ds.samples) ++counts[s.label];
    std::printf("classes    %zu\n", ds.n_classes);
    for (std::size_t l = 0; l < ds.n_classes; ++l) {
      std::printf("  %zu <- %-10s %zu\n", l, ds.label_names[l].c_str(), counts[l]);
    }
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format,
               bool gaps) {
  std::vector<result_row> rows;
  for (const auto& p : inputs) {
    auto in = open_in(p);
    auto r = read_csv(in);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  sort_rows(rows);
  if (format == "csv") {
    write_csv(rows, std::cout);
  } else {
    write_markdown(rows, std::cout);
    if (gaps) {
      std::cout << "\n### GSA vs best other method\n\n";
      write_gap_summary(compute_gap_summary(rows), std::cout);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark runner for greedy step averaging and baseline optimizers"};
  app.require_subcommand(1);
  common_opts common;
  app.add_option("--cache-dir", common.cache_dir,
                 "Dataset cache (default: $GSA_CACHE_DIR, else $XDG_CACHE_HOME/gsa-bench)");
  app.add_flag("--full", common.full, "Allow the large registry datasets");
  app.add_flag("--offline", common.offline, "Never touch the network; use the cache only");

  auto* fetch = app.add_subcommand("fetch", "Download registry datasets into the cache");
  std::vector<std::string> names;
  bool list = false;
  fetch->add_option("names", names, "Registry names");
  fetch->add_flag("--list", list, "Print the registry");

  std::string config;
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "Train one configuration and report per-pass metrics");
  run->add_option("config", config, "key = value run file")->required()->check(CLI::ExistingFile);
  run->add_option("--set", sets, "Override a key, e.g. --set passes=10");

  auto* grid = app.add_subcommand("grid", "Run every cell of a grid file");
  std::size_t jobs = 1;
  std::string csv, md;
  grid->add_option("config", config, "Grid file")->required()->check(CLI::ExistingFile);
  grid->add_option("--set", sets, "Override a key or add `cell=...`");
  grid->add_option("--jobs,-j", jobs, "Cells run in parallel")->check(CLI::PositiveNumber);
  grid->add_option("--csv", csv, "CSV output path (default stdout or output_dir)");
  grid->add_option("--markdown", md, "Markdown report path");

  auto* pc = app.add_subcommand("parse-check", "Parse a LIBSVM file and print its shape");
  std::string path;
  bool regression = false, no_bias = false;
  pc->add_option("file", path, "LIBSVM file (.gz accepted)")->required();
  pc->add_flag("--regression", regression, "Treat labels as real-valued targets");
  pc->add_flag("--no-bias", no_bias, "Do not append a bias column");

  auto* rep = app.add_subcommand("report", "Render CSV records as tables");
  std::vector<std::string> inputs;
  std::string format = "markdown";
  bool gaps = false;
  rep->add_option("csv", inputs, "CSV files written by run or grid")->required();
  rep->add_option("--format", format, "markdown or csv")
      ->check(CLI::IsMember({"markdown", "csv"}));
  rep->add_flag("--gaps", gaps, "Append the GSA-vs-best mean(Err) / #best table");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fetch) return cmd_fetch(names, list, common);
    if (*run) return cmd_run(config, sets, common);
    if (*grid) return cmd_grid(config, sets, jobs, csv, md, common);
    if (*pc) return cmd_parse_check(path, regression, !no_bias);
    if (*rep) return cmd_report(inputs, format, gaps);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gsa_bench: %s\n", e.what());
    return 1;
  }
  return 0;
}
