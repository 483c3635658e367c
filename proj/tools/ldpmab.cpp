// Copyright 2026 The ldpmab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ldpmab: run experiments, sweeps, self-checks and dataset ingestion.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldpmab/environments.hpp"
#include "ldpmab/errors.hpp"
#include "ldpmab/harness.hpp"
#include "ldpmab/log.hpp"
#include "ldpmab/validation.hpp"

namespace fs = std::filesystem;
using namespace ldpmab;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;
  bool quiet = false;
  double noise_scale_factor = 1.0;
};

void apply_overrides(ExperimentConfig& c, const CommonFlags& f) {
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.output.dir = *f.out;
  if (f.noise_scale_factor != 1.0) c.noise_scale_factor = f.noise_scale_factor;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  return os;
}

std::size_t count_events(const RunResult& run, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : run.events) n += e.kind == kind ? 1 : 0;
  return n;
}

void print_run_summary(const RunResult& run) {
  const auto& s = run.series;
  const std::size_t bins = s.size() ? s.n_bins.back() : 0;
  std::printf("%s seed=%llu steps=%zu cum_regret=%.6g cum_reward=%.6g bins=%zu "
              "eliminations=%zu refinements=%zu\n",
              run.config_id.c_str(), static_cast<unsigned long long>(run.seed), s.size(),
              s.size() ? s.cum_regret.back() : 0.0, s.size() ? s.cum_reward.back() : 0.0,
              bins, count_events(run, EventKind::kElimination),
              count_events(run, EventKind::kRefinement));
}

void write_runs(const std::vector<const RunResult*>& runs, const ExperimentConfig& config) {
  fs::create_directories(config.output.dir);
  auto results = open_output(output_path(config.output, config.output.results));
  write_results_header(results, config.env.arms);
  for (const auto* r : runs) write_results_rows(results, *r, config.output.log_every);
  auto events = open_output(output_path(config.output, config.output.events));
  write_events_header(events);
  for (const auto* r : runs) write_events_rows(events, *r);
  if (!config.output.snapshot.empty()) {
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto* r : runs) {
      snaps.push_back({{"config_id", r->config_id}, {"seed", r->seed}, {"policy", r->snapshot}});
    }
    open_output(output_path(config.output, config.output.snapshot)) << snaps.dump(2) << '\n';
  }
}

int cmd_run(const CommonFlags& f) {
  ExperimentConfig config = load_config(f.config);
  apply_overrides(config, f);
  config.validate();
  const auto runs = run_replications(config, f.jobs);
  std::vector<const RunResult*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);
  write_runs(ptrs, config);
  if (!f.quiet) {
    for (const auto& r : runs) print_run_summary(r);
  }
  return kOk;
}

int cmd_sweep(const CommonFlags& f) {
  SweepConfig sweep = load_sweep(f.config);
  apply_overrides(sweep.base, f);
  if (f.seed) sweep.base_json["seed"] = *f.seed;
  const auto cells = [&] {
    auto c = expand_grid(sweep);
    for (auto& cell : c) apply_overrides(cell, f);
    return c;
  }();
  const SweepResult result = run_sweep(cells, f.jobs);
  std::vector<const RunResult*> ptrs;
  std::size_t runs = 0;
  for (const auto& cell : result.cells) {
    for (const auto& r : cell.runs) ptrs.push_back(&r);
    runs += cell.runs.size();
  }
  write_runs(ptrs, sweep.base);
  auto summary = open_output(output_path(sweep.base.output, "summary.csv"));
  write_sweep_summary(summary, result);
  if (!f.quiet) {
    for (const auto& cell : result.cells) {
      if (!cell.error.empty()) {
        std::printf("%s FAILED: %s\n", cell.config.config_id.c_str(), cell.error.c_str());
        continue;
      }
      std::printf("%s replications=%zu final_cum_regret=%.6g [%.6g, %.6g]\n",
                  cell.config.config_id.c_str(), cell.runs.size(), cell.final_cum_regret.mean,
                  cell.final_cum_regret.lower, cell.final_cum_regret.upper);
    }
    std::printf("cells=%zu runs=%zu failed_cells=%zu\n", result.cells.size(), runs,
                result.failed_cells());
  }
  return result.failed_cells() == 0 ? kOk : kRuntimeError;
}

int cmd_validate(const CommonFlags& f) {
  ValidationOptions opts;
  opts.noise_scale_factor = f.noise_scale_factor;
  bool ok = true;
  for (const auto& c : run_fast_validation(opts)) {
    ok = ok && c.passed;
    if (!f.quiet || !c.passed) {
      std::printf("%-22s %s  %.2fs  %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                  c.seconds, c.detail.c_str());
    }
  }
  return ok ? kOk : kRuntimeError;
}

struct IngestFlags {
  std::string input;
  int d = 0;
  std::string label_column = "label";
  int arms = 0;
  std::string out = "out";
};

int cmd_ingest(const IngestFlags& f, bool quiet) {
  RawTable table = read_table_csv(f.input, f.label_column);
  if (static_cast<int>(table.feature_names.size()) != f.d) {
    throw ConfigError("'" + f.input + "' has " + std::to_string(table.feature_names.size()) +
                      " feature columns, --d is " + std::to_string(f.d));
  }
  if (f.arms < 2) throw ConfigError("--arms must be >= 2");
  const MinMaxScaler scaler = MinMaxScaler::fit(table.features);
  std::vector<Eigen::VectorXd> scaled;
  scaled.reserve(table.features.size());
  for (const auto& row : table.features) scaled.push_back(scaler.apply(row));
  to_classification_rows(scaled, table.labels, f.arms);  // label range check

  const std::string stem = fs::path(f.input).stem().string();
  fs::create_directories(f.out);
  const std::string csv_path = (fs::path(f.out) / (stem + ".scaled.csv")).string();
  const std::string meta_path = (fs::path(f.out) / (stem + ".scaled.json")).string();
  {
    auto os = open_output(csv_path);
    for (const auto& name : table.feature_names) os << name << ',';
    os << table.label_name << '\n';
    char buf[32];
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      for (Eigen::Index k = 0; k < scaled[i].size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", scaled[i][k]);
        os << buf << ',';
      }
      os << table.labels[i] << '\n';
    }
  }
  nlohmann::json meta;
  meta["input"] = fs::path(f.input).filename().string();
  meta["output"] = fs::path(csv_path).filename().string();
  meta["rows"] = scaled.size();
  meta["d"] = f.d;
  meta["arms"] = f.arms;
  meta["label_column"] = table.label_name;
  meta["feature_names"] = table.feature_names;
  meta["min"] = std::vector<double>(scaler.min().data(), scaler.min().data() + scaler.min().size());
  meta["max"] = std::vector<double>(scaler.max().data(), scaler.max().data() + scaler.max().size());
  open_output(meta_path) << meta.dump(2) << '\n';
  if (!quiet) std::printf("ingested %zu rows -> %s\n", scaled.size(), csv_path.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual bandits under local differential privacy"};
  app.require_subcommand(1, 1);
  CommonFlags flags;
  IngestFlags ingest;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) sub->add_option("--config", flags.config, "Config file (JSON)")->required();
    sub->add_option("--seed", flags.seed, "Master seed override");
    sub->add_option("--out", flags.out, "Output directory override");
    sub->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", flags.quiet, "Only report errors");
    // Mutation hook for the validation suite; not for real runs.
    sub->add_option("--noise-scale-factor", flags.noise_scale_factor)->group("");
  };
  auto* run = app.add_subcommand("run", "Run one experiment config");
  add_common(run, true);
  auto* sweep = app.add_subcommand("sweep", "Run a config grid");
  add_common(sweep, true);
  auto* validate = app.add_subcommand("validate", "Fast self-check suite");
  validate->add_flag("--quiet", flags.quiet, "Only report failures");
  validate->add_option("--noise-scale-factor", flags.noise_scale_factor)->group("");
  auto* ing = app.add_subcommand("ingest", "Scale and validate a classification CSV");
  ing->add_option("--input", ingest.input, "Raw CSV")->required();
  ing->add_option("--d", ingest.d, "Number of feature columns")->required();
  ing->add_option("--label-column", ingest.label_column, "Label column name");
  ing->add_option("--arms", ingest.arms, "Number of classes K")->required();
  ing->add_option("--out", ingest.out, "Output directory");
  ing->add_flag("--quiet", flags.quiet, "Only report errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  if (flags.quiet) set_log_level(LogLevel::kError);

  try {
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (validate->parsed()) return cmd_validate(flags);
    if (ing->parsed()) return cmd_ingest(ingest, flags.quiet);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
