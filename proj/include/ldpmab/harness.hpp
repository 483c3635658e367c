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
#ifndef LDPMAB_HARNESS_HPP_
#define LDPMAB_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "ldpmab/environments.hpp"
#include "ldpmab/policy.hpp"
#include "ldpmab/stats.hpp"

namespace ldpmab {

enum class PolicyKind { kLdp, kNonPrivate, kUniform, kOracle };
const char* to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);

struct SourceConfig {
  double gamma = 0.0;
  double kappa = 1.0;
  double epsilon = 8.0;  // +inf allowed ("inf" in config files)
  std::int64_t n = 0;
  std::string data;  // classification mode: ingested CSV path
};

struct OutputConfig {
  std::string dir = "out";
  std::string results = "results.csv";
  std::string events = "events.csv";
  std::string snapshot;  // empty disables the JSON export
  std::int64_t log_every = 1;  // results row every log_every target steps
};

struct ExperimentConfig {
  std::string config_id = "default";
  std::string mode = "synthetic";  // synthetic | classification
  PolicyKind policy = PolicyKind::kLdp;
  SyntheticEnvSpec env;
  std::vector<SourceConfig> sources;
  // Consumption order as indices into sources. Empty keeps file order.
  std::vector<int> source_order;
  double epsilon = 1.0;
  std::int64_t n_P = 1000;
  double c_conf = 40.0;
  int max_depth = -1;
  std::uint64_t seed = 1;
  int replications = 1;
  // Local-metric probe; empty means (1/3, ..., 1/3).
  Eigen::VectorXd probe;
  // Classification mode: ingested target CSV and its label column.
  std::string target_data;
  std::string label_column = "label";
  OutputConfig output;
  // Fresh contexts for the end-of-run expected regret probe; 0 skips it.
  std::int64_t probe_mc = 0;
  // Test hook only: scales every Laplace noise scale.
  double noise_scale_factor = 1.0;

  // Throws ConfigError.
  void validate() const;
  Eigen::VectorXd probe_point() const;
  std::vector<int> consumption_order() const;
  PolicyConfig policy_config() const;
};

// Parsing fills defaults and rejects unknown keys. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Values recorded after each target step t = 1..n_P.
struct MetricSeries {
  int arms = 0;
  std::vector<double> inst_regret;  // NaN in classification mode
  std::vector<double> cum_regret;
  std::vector<double> global_avg_regret;
  std::vector<double> local_avg_regret;
  Eigen::MatrixXd arm_ratio;  // steps x arms, running mean at the probe
  std::vector<double> cum_reward;
  std::vector<std::size_t> n_bins;
  std::vector<std::size_t> n_active_arms_total;

  std::size_t size() const { return cum_regret.size(); }
};

struct RunResult {
  std::string config_id;
  std::uint64_t seed = 0;  // replication seed
  MetricSeries series;
  RunRecord record;
  std::vector<StructuralEvent> events;
  std::int64_t n_auxiliary = 0;  // jump-start users; event t is step - n_auxiliary
  double final_expected_regret = 0.0;  // probe at end, synthetic only
  nlohmann::json snapshot;  // null for baselines
};

// Replication r runs with seed config.seed + r. Streams are named and
// derived from that seed alone, so cells sharing a seed reuse the same
// contexts, rewards and auxiliary datasets.
RunResult run_experiment(const ExperimentConfig& config, int replication = 0);

// Monte Carlo E_X[f*(X) - sum_k p_k(X) f_k(X)] with n_mc fresh contexts.
double expected_regret_probe(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& distribution,
    const SyntheticEnvSpec& env, std::int64_t n_mc, Rng& rng);
double expected_regret_probe(const LdpPolicy& policy, const SyntheticEnvSpec& env,
                             std::int64_t n_mc, Rng& rng);

// Partition, active arms and accumulators as JSON.
nlohmann::json policy_snapshot(const LdpPolicy& policy);

// ---- sweeps ----

struct GridAxis {
  std::string key;  // dotted path, e.g. "epsilon" or "sources.0.gamma"
  std::vector<nlohmann::json> values;
};

struct SweepConfig {
  ExperimentConfig base;
  nlohmann::json base_json;
  std::vector<GridAxis> axes;
};

// A config file with an optional "grid" object of axis -> value list.
SweepConfig parse_sweep(const nlohmann::json& j);
SweepConfig load_sweep(const std::string& path);

// Cartesian product of the axes (first axis slowest). Throws ConfigError for
// axes that do not name a config field.
std::vector<ExperimentConfig> expand_grid(const SweepConfig& sweep);

struct CellResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  std::string error;  // non-empty when the cell failed
  MeanCi final_cum_regret;
  MeanCi final_cum_reward;
};

struct SweepResult {
  std::vector<CellResult> cells;
  std::size_t failed_cells() const;
};

// Runs every cell x replication on up to jobs threads. The result does not
// depend on jobs.
SweepResult run_sweep(const std::vector<ExperimentConfig>& cells, int jobs);

// Replications of one config in parallel, in replication order.
std::vector<RunResult> run_replications(const ExperimentConfig& config, int jobs);

// ---- export ----

void write_results_header(std::ostream& os, int arms);
void write_results_rows(std::ostream& os, const RunResult& run, std::int64_t log_every);
void write_events_header(std::ostream& os);
void write_events_rows(std::ostream& os, const RunResult& run);
void write_sweep_summary(std::ostream& os, const SweepResult& result);

// Resolves a file name inside the output directory; rejects names that
// would escape it.
std::string output_path(const OutputConfig& output, const std::string& name);

}  // namespace ldpmab

#endif  // LDPMAB_HARNESS_HPP_
