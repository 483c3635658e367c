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
#include "ldpmab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "ldpmab/errors.hpp"

namespace ldpmab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reads keys of one JSON object and complains about the ones left over.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return raw(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  double epsilon(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      std::transform(s.begin(), s.end(), s.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (s == "inf" || s == "infinity") return kInf;
    }
    throw ConfigError(where_ + "." + key + ": expected a number or \"inf\"");
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(where_ + ": unknown field '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json epsilon_json(double eps) {
  if (std::isinf(eps)) return "inf";
  return eps;
}

RewardNoise parse_noise(const std::string& name) {
  if (name == "bernoulli") return RewardNoise::kBernoulli;
  if (name == "truncated_gaussian") return RewardNoise::kTruncatedGaussian;
  throw ConfigError("env.noise: unknown noise model '" + name + "'");
}

const char* noise_name(RewardNoise noise) {
  return noise == RewardNoise::kBernoulli ? "bernoulli" : "truncated_gaussian";
}

bool plain_file_name(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  return name.find('/') == std::string::npos && name.find('\\') == std::string::npos;
}

}  // namespace

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kLdp:
      return "ldp";
    case PolicyKind::kNonPrivate:
      return "nonprivate";
    case PolicyKind::kUniform:
      return "uniform";
    case PolicyKind::kOracle:
      return "oracle";
  }
  return "?";
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "ldp") return PolicyKind::kLdp;
  if (name == "nonprivate") return PolicyKind::kNonPrivate;
  if (name == "uniform") return PolicyKind::kUniform;
  if (name == "oracle") return PolicyKind::kOracle;
  throw ConfigError("policy: unknown policy '" + name + "'");
}

// ---- config ----

void ExperimentConfig::validate() const {
  if (mode != "synthetic" && mode != "classification") {
    throw ConfigError("mode: expected synthetic or classification, got '" + mode + "'");
  }
  try {
    env.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon: must be positive");
  if (mode == "synthetic" && n_P < 1) throw ConfigError("n_P: must be >= 1");
  if (mode == "classification" && n_P < 0) throw ConfigError("n_P: must be >= 0");
  if (!(c_conf > 0.0) || std::isinf(c_conf)) throw ConfigError("c_conf: must be positive");
  if (max_depth > PartitionTree::kHardDepthLimit) {
    throw ConfigError("max_depth: at most 62");
  }
  if (replications < 1) throw ConfigError("replications: must be >= 1");
  if (output.log_every < 1) throw ConfigError("output.log_every: must be >= 1");
  if (probe_mc < 0) throw ConfigError("probe_mc: must be >= 0");
  if (!(noise_scale_factor > 0.0)) throw ConfigError("noise_scale_factor: must be positive");
  for (const auto* name : {&output.results, &output.events}) {
    if (!plain_file_name(*name)) {
      throw ConfigError("output: '" + *name + "' must be a plain file name");
    }
  }
  if (!output.snapshot.empty() && !plain_file_name(output.snapshot)) {
    throw ConfigError("output: '" + output.snapshot + "' must be a plain file name");
  }
  if (probe.size() != 0) {
    if (probe.size() != env.d) throw ConfigError("probe: dimension must equal env.d");
    if ((probe.array() < 0.0).any() || (probe.array() > 1.0).any()) {
      throw ConfigError("probe: must lie in [0,1]^d");
    }
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const std::string where = "sources." + std::to_string(i);
    if (!(s.gamma >= 0.0) || std::isinf(s.gamma)) throw ConfigError(where + ".gamma: must be >= 0");
    if (!(s.kappa > 0.0 && s.kappa <= 1.0)) throw ConfigError(where + ".kappa: must be in (0,1]");
    if (!(s.epsilon > 0.0)) throw ConfigError(where + ".epsilon: must be positive");
    if (s.n < 0) throw ConfigError(where + ".n: must be >= 0");
    if (mode == "synthetic" && s.n < 1) throw ConfigError(where + ".n: must be >= 1");
    if (mode == "classification" && s.data.empty()) {
      throw ConfigError(where + ".data: required in classification mode");
    }
  }
  if (!source_order.empty()) {
    std::vector<int> sorted = source_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != sources.size() || sorted[i] != static_cast<int>(i)) {
        throw ConfigError("source_order: must be a permutation of 0..M-1");
      }
    }
  }
  if (mode == "classification" && target_data.empty()) {
    throw ConfigError("target_data: required in classification mode");
  }
}

Eigen::VectorXd ExperimentConfig::probe_point() const {
  if (probe.size() != 0) return probe;
  return Eigen::VectorXd::Constant(env.d, 1.0 / 3.0);
}

std::vector<int> ExperimentConfig::consumption_order() const {
  if (!source_order.empty()) return source_order;
  std::vector<int> order(sources.size());
  std::iota(order.begin(), order.end(), 0);
  return order;
}

PolicyConfig ExperimentConfig::policy_config() const {
  const bool nonprivate = policy == PolicyKind::kNonPrivate;
  PolicyConfig pc;
  pc.dim = env.d;
  pc.arms = env.arms;
  pc.target_budget = PrivacyBudget(nonprivate ? kInf : epsilon);
  pc.n_target = std::max<std::int64_t>(n_P, 1);
  for (int idx : consumption_order()) {
    const auto& s = sources[idx];
    pc.source_budgets.push_back(PrivacyBudget(nonprivate ? kInf : s.epsilon));
    pc.source_sizes.push_back(s.n);
  }
  pc.c_conf = c_conf;
  pc.max_depth = max_depth;
  pc.noise_scale_factor = noise_scale_factor;
  return pc;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  ObjectReader r(j, "config");
  c.config_id = r.get<std::string>("config_id", c.config_id);
  c.mode = r.get<std::string>("mode", c.mode);
  c.policy = parse_policy_kind(r.get<std::string>("policy", to_string(c.policy)));
  if (r.has("env")) {
    ObjectReader e(r.raw("env"), "env");
    c.env.d = e.get<int>("d", c.env.d);
    c.env.arms = e.get<int>("arms", c.env.arms);
    c.env.reward_family = e.get<std::string>("reward_family", c.env.reward_family);
    c.env.noise = parse_noise(e.get<std::string>("noise", noise_name(c.env.noise)));
    c.env.noise_sd = e.get<double>("noise_sd", c.env.noise_sd);
    e.finish();
  }
  if (r.has("sources")) {
    const json& arr = r.raw("sources");
    if (!arr.is_array()) throw ConfigError("sources: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ObjectReader s(arr[i], "sources." + std::to_string(i));
      SourceConfig sc;
      sc.gamma = s.get<double>("gamma", sc.gamma);
      sc.kappa = s.get<double>("kappa", sc.kappa);
      sc.epsilon = s.epsilon("epsilon", sc.epsilon);
      sc.n = s.get<std::int64_t>("n", sc.n);
      sc.data = s.get<std::string>("data", sc.data);
      s.finish();
      c.sources.push_back(sc);
    }
  }
  c.source_order = r.get<std::vector<int>>("source_order", c.source_order);
  c.epsilon = r.epsilon("epsilon", c.epsilon);
  c.n_P = r.get<std::int64_t>("n_P", c.n_P);
  c.c_conf = r.get<double>("c_conf", c.c_conf);
  c.max_depth = r.get<int>("max_depth", c.max_depth);
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.replications = r.get<int>("replications", c.replications);
  if (r.has("probe")) {
    const auto p = r.get<std::vector<double>>("probe", {});
    c.probe = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  }
  c.probe_mc = r.get<std::int64_t>("probe_mc", c.probe_mc);
  c.target_data = r.get<std::string>("target_data", c.target_data);
  c.label_column = r.get<std::string>("label_column", c.label_column);
  if (r.has("output")) {
    ObjectReader o(r.raw("output"), "output");
    c.output.dir = o.get<std::string>("dir", c.output.dir);
    c.output.results = o.get<std::string>("results", c.output.results);
    c.output.events = o.get<std::string>("events", c.output.events);
    c.output.snapshot = o.get<std::string>("snapshot", c.output.snapshot);
    c.output.log_every = o.get<std::int64_t>("log_every", c.output.log_every);
    o.finish();
  }
  c.noise_scale_factor = r.get<double>("noise_scale_factor", c.noise_scale_factor);
  r.finish();
  c.validate();
  return c;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  json j = read_json_file(path);
  if (j.is_object()) j.erase("grid");
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["config_id"] = c.config_id;
  j["mode"] = c.mode;
  j["policy"] = to_string(c.policy);
  j["env"] = {{"d", c.env.d},
              {"arms", c.env.arms},
              {"reward_family", c.env.reward_family},
              {"noise", noise_name(c.env.noise)},
              {"noise_sd", c.env.noise_sd}};
  j["sources"] = json::array();
  for (const auto& s : c.sources) {
    json sj = {{"gamma", s.gamma}, {"kappa", s.kappa}, {"epsilon", epsilon_json(s.epsilon)},
               {"n", s.n}};
    if (!s.data.empty()) sj["data"] = s.data;
    j["sources"].push_back(sj);
  }
  j["source_order"] = c.source_order;
  j["epsilon"] = epsilon_json(c.epsilon);
  j["n_P"] = c.n_P;
  j["c_conf"] = c.c_conf;
  j["max_depth"] = c.max_depth;
  j["seed"] = c.seed;
  j["replications"] = c.replications;
  const Eigen::VectorXd p = c.probe_point();
  j["probe"] = std::vector<double>(p.data(), p.data() + p.size());
  j["probe_mc"] = c.probe_mc;
  j["target_data"] = c.target_data;
  j["label_column"] = c.label_column;
  j["output"] = {{"dir", c.output.dir},
                 {"results", c.output.results},
                 {"events", c.output.events},
                 {"snapshot", c.output.snapshot},
                 {"log_every", c.output.log_every}};
  j["noise_scale_factor"] = c.noise_scale_factor;
  return j;
}

// ---- metrics ----

namespace {

// Running metrics over target steps.
class MetricRecorder {
 public:
  MetricRecorder(const ExperimentConfig& config, bool synthetic)
      : synthetic_(synthetic), env_(config.env) {
    series_.arms = config.env.arms;
    const auto n = static_cast<std::size_t>(std::max<std::int64_t>(config.n_P, 0));
    series_.inst_regret.reserve(n);
    series_.cum_regret.reserve(n);
    series_.global_avg_regret.reserve(n);
    series_.local_avg_regret.reserve(n);
    series_.cum_reward.reserve(n);
    series_.n_bins.reserve(n);
    series_.n_active_arms_total.reserve(n);
    ratio_rows_.reserve(n);
    ratio_sum_ = Eigen::VectorXd::Zero(config.env.arms);
    if (synthetic_) probe_means_ = env_.means(config.probe_point());
  }

  // p_probe is the arm distribution at the probe when the step was taken.
  void record(const Eigen::VectorXd& x, int arm, double reward,
              const Eigen::VectorXd& p_probe, std::size_t n_bins,
              std::size_t n_active) {
    const double t = static_cast<double>(series_.size() + 1);
    double inst = std::numeric_limits<double>::quiet_NaN();
    double local = std::numeric_limits<double>::quiet_NaN();
    if (synthetic_) {
      const Eigen::VectorXd f = env_.means(x);
      inst = f.maxCoeff() - f[arm];
      local = probe_means_.maxCoeff() - p_probe.dot(probe_means_);
    }
    cum_regret_ += inst;
    local_sum_ += local;
    cum_reward_ += reward;
    ratio_sum_ += p_probe;
    series_.inst_regret.push_back(inst);
    series_.cum_regret.push_back(cum_regret_);
    series_.global_avg_regret.push_back(cum_regret_ / t);
    series_.local_avg_regret.push_back(local_sum_ / t);
    ratio_rows_.push_back(ratio_sum_ / t);
    series_.cum_reward.push_back(cum_reward_);
    series_.n_bins.push_back(n_bins);
    series_.n_active_arms_total.push_back(n_active);
  }

  MetricSeries finish() {
    series_.arm_ratio.resize(static_cast<Eigen::Index>(ratio_rows_.size()), series_.arms);
    for (std::size_t i = 0; i < ratio_rows_.size(); ++i) {
      series_.arm_ratio.row(static_cast<Eigen::Index>(i)) = ratio_rows_[i].transpose();
    }
    return std::move(series_);
  }

 private:
  bool synthetic_;
  SyntheticEnvSpec env_;
  Eigen::VectorXd probe_means_;
  MetricSeries series_;
  std::vector<Eigen::VectorXd> ratio_rows_;
  Eigen::VectorXd ratio_sum_;
  double cum_regret_ = 0.0;
  double local_sum_ = 0.0;
  double cum_reward_ = 0.0;
};

std::vector<ClassificationRow> load_rows(const std::string& path,
                                         const ExperimentConfig& config) {
  RawTable table = read_table_csv(path, config.label_column);
  if (static_cast<int>(table.feature_names.size()) != config.env.d) {
    throw ConfigError("'" + path + "' has " + std::to_string(table.feature_names.size()) +
                      " features, env.d is " + std::to_string(config.env.d));
  }
  return to_classification_rows(table.features, table.labels, config.env.arms);
}

// The auxiliary datasets in consumption order, each from its own stream keyed
// by the source's index in the config.
std::vector<std::vector<AuxSample>> make_aux(const ExperimentConfig& config,
                                             std::uint64_t seed) {
  std::vector<std::vector<AuxSample>> out;
  for (int idx : config.consumption_order()) {
    const SourceConfig& s = config.sources[idx];
    Rng rng(derive_seed(seed, 0, 0, "env/aux/" + std::to_string(idx)));
    if (config.mode == "synthetic") {
      SourceSpec spec;
      spec.gamma = s.gamma;
      spec.kappa = s.kappa;
      spec.epsilon = PrivacyBudget(s.epsilon);
      spec.n = s.n;
      out.push_back(gen_aux_dataset(spec, config.env, rng));
    } else {
      auto data = classification_to_bandit(load_rows(s.data, config),
                                           behavior_policy_vector(s.kappa, config.env.arms),
                                           rng);
      if (s.n > 0) {
        if (s.n > static_cast<std::int64_t>(data.size())) {
          throw ConfigError("sources." + std::to_string(idx) + ".n exceeds the rows in '" +
                            s.data + "'");
        }
        data.resize(static_cast<std::size_t>(s.n));
      }
      out.push_back(std::move(data));
    }
  }
  return out;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& input, int replication) {
  input.validate();
  if (replication < 0) throw std::invalid_argument("replication must be >= 0");
  ExperimentConfig config = input;
  const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(replication);
  const bool synthetic = config.mode == "synthetic";

  RunResult result;
  result.config_id = config.config_id;
  result.seed = seed;

  // Target stream.
  Rng context_rng(derive_seed(seed, 0, 0, "env/context"));
  Rng reward_rng(derive_seed(seed, 0, 0, "env/reward"));
  std::vector<ClassificationRow> target_rows;
  if (!synthetic) {
    Rng perm(derive_seed(seed, 0, 0, "env/permutation"));
    target_rows = permute_rows(load_rows(config.target_data, config), perm);
    if (config.n_P == 0) config.n_P = static_cast<std::int64_t>(target_rows.size());
    if (config.n_P > static_cast<std::int64_t>(target_rows.size())) {
      throw ConfigError("n_P exceeds the rows in '" + config.target_data + "'");
    }
  }
  std::size_t next_row = 0;
  const ClassificationRow* current = nullptr;
  auto next_context = [&]() -> Eigen::VectorXd {
    if (synthetic) return sample_target_context(config.env.d, context_rng);
    current = &target_rows[next_row++];
    return current->features;
  };
  auto pull = [&](const Eigen::VectorXd& x, int arm) -> double {
    if (synthetic) return draw_reward(arm, x, config.env, reward_rng);
    return classification_reward(*current, arm);
  };

  MetricRecorder recorder(config, synthetic);
  const Eigen::VectorXd probe = config.probe_point();
  const int arms = config.env.arms;

  if (config.policy == PolicyKind::kLdp || config.policy == PolicyKind::kNonPrivate) {
    const auto aux = make_aux(config, seed);
    PolicyConfig pc = config.policy_config();
    RunSchedule schedule;
    schedule.n_target = config.n_P;
    pc.n_target = config.n_P;
    for (std::size_t m = 0; m < aux.size(); ++m) {
      pc.source_sizes[m] = static_cast<std::int64_t>(aux[m].size());
      schedule.auxiliary.push_back({static_cast<int>(m) + 1, &aux[m]});
      result.n_auxiliary += static_cast<std::int64_t>(aux[m].size());
    }
    LdpPolicy policy(pc, derive_seed(seed, 0, 0, "policy"));
    Eigen::VectorXd p_probe = policy.arm_distribution(probe);
    result.record = run(policy, schedule, next_context, pull,
                        [&](const LdpPolicy& pol, const StepRow& row) {
                          if (row.source == 0) {
                            recorder.record(row.x, row.arm, row.reward, p_probe,
                                            row.n_bins, row.n_active_arms_total);
                          }
                          p_probe = pol.arm_distribution(probe);
                        });
    result.events = policy.events();
    result.snapshot = policy_snapshot(policy);
    if (synthetic && config.probe_mc > 0) {
      Rng mc(derive_seed(seed, 0, 0, "probe/mc"));
      result.final_expected_regret =
          expected_regret_probe(policy, config.env, config.probe_mc, mc);
    }
  } else {
    Rng select_rng(derive_seed(seed, 0, 0, "baseline/select"));
    const bool oracle = config.policy == PolicyKind::kOracle;
    auto distribution = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      if (!oracle) return Eigen::VectorXd::Constant(arms, 1.0 / arms);
      Eigen::VectorXd p = Eigen::VectorXd::Zero(arms);
      p[best_arm(config.env.means(x))] = 1.0;
      return p;
    };
    // The classification oracle plays the label, which is only known per row.
    const Eigen::VectorXd p_probe =
        (oracle && !synthetic) ? Eigen::VectorXd::Constant(arms, 1.0 / arms) : distribution(probe);
    for (std::int64_t t = 1; t <= config.n_P; ++t) {
      const Eigen::VectorXd x = next_context();
      int arm;
      if (oracle) {
        arm = synthetic ? best_arm(config.env.means(x)) : current->label;
      } else {
        arm = static_cast<int>(select_rng.uniform_index(static_cast<std::uint64_t>(arms)));
      }
      const double reward = pull(x, arm);
      StepRow row{t, 0, x, arm, reward, 1, static_cast<std::size_t>(arms), 0};
      recorder.record(x, arm, reward, p_probe, 1, static_cast<std::size_t>(arms));
      result.record.push_back(std::move(row));
    }
    if (synthetic && config.probe_mc > 0) {
      Rng mc(derive_seed(seed, 0, 0, "probe/mc"));
      result.final_expected_regret =
          expected_regret_probe(distribution, config.env, config.probe_mc, mc);
    }
  }
  result.series = recorder.finish();
  return result;
}

double expected_regret_probe(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& distribution,
    const SyntheticEnvSpec& env, std::int64_t n_mc, Rng& rng) {
  if (n_mc < 1) throw std::invalid_argument("expected_regret_probe: n_mc must be >= 1");
  double sum = 0.0;
  for (std::int64_t i = 0; i < n_mc; ++i) {
    const Eigen::VectorXd x = sample_target_context(env.d, rng);
    const Eigen::VectorXd f = env.means(x);
    sum += f.maxCoeff() - distribution(x).dot(f);
  }
  return sum / static_cast<double>(n_mc);
}

double expected_regret_probe(const LdpPolicy& policy, const SyntheticEnvSpec& env,
                             std::int64_t n_mc, Rng& rng) {
  return expected_regret_probe(
      [&](const Eigen::VectorXd& x) { return policy.arm_distribution(x); }, env, n_mc, rng);
}

json policy_snapshot(const LdpPolicy& policy) {
  json j;
  j["dim"] = policy.config().dim;
  j["arms"] = policy.config().arms;
  j["step"] = policy.step();
  j["bins"] = json::array();
  for (const BinId& id : policy.tree().active()) {
    const BinGeometry& g = policy.tree().geometry(id);
    json b;
    b["depth"] = id.depth;
    b["index"] = id.index;
    std::vector<double> lower, upper;
    std::vector<std::uint64_t> numerators;
    std::vector<int> levels;
    for (int k = 0; k < g.dim(); ++k) {
      lower.push_back(g.edge(k).lower());
      upper.push_back(g.edge(k).upper());
      numerators.push_back(g.edge(k).numerator);
      levels.push_back(g.edge(k).level);
    }
    b["lower"] = lower;
    b["upper"] = upper;
    b["numerators"] = numerators;
    b["levels"] = levels;
    b["active_arms"] = policy.active_arms(id);
    b["cells"] = json::array();
    for (const ArmSummary& s : policy.summarize(id)) {
      const ArmCell& cell = policy.cell(id, s.arm);
      std::vector<std::int64_t> counts;
      for (int m = 0; m < cell.num_sources(); ++m) counts.push_back(cell.count(m));
      json cj;
      cj["arm"] = s.arm;
      cj["sum_v"] = std::vector<double>(cell.sum_v().data(),
                                        cell.sum_v().data() + cell.sum_v().size());
      cj["sum_u"] = std::vector<double>(cell.sum_u().data(),
                                        cell.sum_u().data() + cell.sum_u().size());
      cj["count"] = counts;
      cj["estimate"] = s.estimate;
      cj["radius"] = std::isinf(s.radius) ? json("inf") : json(s.radius);
      b["cells"].push_back(cj);
    }
    j["bins"].push_back(b);
  }
  return j;
}

// ---- sweeps ----

SweepConfig parse_sweep(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  SweepConfig sweep;
  sweep.base_json = j;
  sweep.base_json.erase("grid");
  sweep.base = parse_config(sweep.base_json);
  if (j.contains("grid")) {
    const json& grid = j.at("grid");
    if (!grid.is_object()) throw ConfigError("grid: expected an object");
    // Axes in file order.
    for (const auto& item : grid.items()) {
      if (!item.value().is_array() || item.value().empty()) {
        throw ConfigError("grid." + item.key() + ": expected a non-empty array");
      }
      sweep.axes.push_back({item.key(), std::vector<json>(item.value().begin(), item.value().end())});
    }
  }
  return sweep;
}

SweepConfig load_sweep(const std::string& path) { return parse_sweep(read_json_file(path)); }

namespace {

json::json_pointer axis_pointer(const std::string& key) {
  std::string p;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("grid: malformed axis '" + key + "'");
    p += "/" + part;
  }
  return json::json_pointer(p);
}

std::string value_label(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  std::replace(s.begin(), s.end(), ',', ' ');  // keep config ids CSV-safe
  return s;
}

}  // namespace

std::vector<ExperimentConfig> expand_grid(const SweepConfig& sweep) {
  // Axes must name fields of the fully defaulted config.
  const json full = to_json(sweep.base);
  for (const auto& axis : sweep.axes) {
    if (axis.key == "grid" || axis.key == "config_id" || axis.key == "output" ||
        axis.key.rfind("output.", 0) == 0) {
      throw ConfigError("grid: '" + axis.key + "' cannot be swept");
    }
    const auto ptr = axis_pointer(axis.key);
    if (!full.contains(ptr)) throw ConfigError("grid: unknown axis '" + axis.key + "'");
  }
  std::vector<ExperimentConfig> cells;
  std::vector<std::size_t> idx(sweep.axes.size(), 0);
  while (true) {
    json j = full;
    std::string label;
    for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
      const json& v = sweep.axes[a].values[idx[a]];
      j[axis_pointer(sweep.axes[a].key)] = v;
      label += (a ? ";" : "") + sweep.axes[a].key + "=" + value_label(v);
    }
    if (!label.empty()) j["config_id"] = sweep.base.config_id + "[" + label + "]";
    try {
      cells.push_back(parse_config(j));
    } catch (const ConfigError& e) {
      throw ConfigError("grid cell " + (label.empty() ? std::string("0") : label) + ": " + e.what());
    }
    // Odometer, last axis fastest.
    std::size_t a = sweep.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < sweep.axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return cells;
    }
    if (sweep.axes.empty()) return cells;
  }
}

std::size_t SweepResult::failed_cells() const {
  return static_cast<std::size_t>(std::count_if(
      cells.begin(), cells.end(), [](const CellResult& c) { return !c.error.empty(); }));
}

namespace {

// Runs tasks [0, n) on up to jobs threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<RunResult> run_replications(const ExperimentConfig& config, int jobs) {
  std::vector<RunResult> runs(static_cast<std::size_t>(config.replications));
  std::vector<std::exception_ptr> errors(runs.size());
  parallel_for(runs.size(), jobs, [&](std::size_t r) {
    try {
      runs[r] = run_experiment(config, static_cast<int>(r));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

SweepResult run_sweep(const std::vector<ExperimentConfig>& cells, int jobs) {
  SweepResult result;
  result.cells.resize(cells.size());
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    result.cells[c].config = cells[c];
    result.cells[c].runs.resize(static_cast<std::size_t>(cells[c].replications));
    for (int r = 0; r < cells[c].replications; ++r) tasks.emplace_back(c, r);
  }
  std::vector<std::string> errors(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const auto [c, r] = tasks[i];
    try {
      result.cells[c].runs[static_cast<std::size_t>(r)] = run_experiment(cells[c], r);
    } catch (const std::exception& e) {
      errors[i] = "replication " + std::to_string(r) + ": " + e.what();
    }
  });
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& cell = result.cells[tasks[i].first];
    if (!errors[i].empty() && cell.error.empty()) cell.error = errors[i];
  }
  for (auto& cell : result.cells) {
    if (!cell.error.empty()) {
      cell.runs.clear();
      continue;
    }
    std::vector<double> regret, reward;
    for (const auto& run : cell.runs) {
      regret.push_back(run.series.cum_regret.empty() ? 0.0 : run.series.cum_regret.back());
      reward.push_back(run.series.cum_reward.empty() ? 0.0 : run.series.cum_reward.back());
    }
    cell.final_cum_regret = mean_ci95(regret);
    cell.final_cum_reward = mean_ci95(reward);
  }
  return result;
}

// ---- export ----

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

void write_results_header(std::ostream& os, int arms) {
  os << "config_id,seed,t,cum_regret,inst_regret,global_avg_regret,local_avg_regret";
  for (int k = 1; k <= arms; ++k) os << ",arm_ratio_" << k;
  os << ",cum_reward,n_bins,n_active_arms_total\n";
}

void write_results_rows(std::ostream& os, const RunResult& run, std::int64_t log_every) {
  const MetricSeries& s = run.series;
  const auto n = static_cast<std::int64_t>(s.size());
  for (std::int64_t t = 1; t <= n; ++t) {
    if (t % log_every != 0 && t != n) continue;
    const auto i = static_cast<std::size_t>(t - 1);
    os << run.config_id << ',' << run.seed << ',' << t << ',' << fmt(s.cum_regret[i]) << ','
       << fmt(s.inst_regret[i]) << ',' << fmt(s.global_avg_regret[i]) << ','
       << fmt(s.local_avg_regret[i]);
    for (int k = 0; k < s.arms; ++k) os << ',' << fmt(s.arm_ratio(static_cast<Eigen::Index>(i), k));
    os << ',' << fmt(s.cum_reward[i]) << ',' << s.n_bins[i] << ',' << s.n_active_arms_total[i]
       << '\n';
  }
}

void write_events_header(std::ostream& os) {
  os << "config_id,seed,t,kind,bin_depth,bin_index,detail\n";
}

void write_events_rows(std::ostream& os, const RunResult& run) {
  for (const auto& e : run.events) {
    os << run.config_id << ',' << run.seed << ',' << (e.step - run.n_auxiliary) << ','
       << to_string(e.kind) << ',' << e.bin.depth << ',' << e.bin.index << ",source="
       << e.source << (e.detail.empty() ? "" : ";") << e.detail << '\n';
  }
}

void write_sweep_summary(std::ostream& os, const SweepResult& result) {
  os << "config_id,replications,final_cum_regret_mean,final_cum_regret_ci_low,"
        "final_cum_regret_ci_high,final_cum_reward_mean,final_cum_reward_ci_low,"
        "final_cum_reward_ci_high,error\n";
  for (const auto& cell : result.cells) {
    os << cell.config.config_id << ',' << cell.runs.size() << ','
       << fmt(cell.final_cum_regret.mean) << ',' << fmt(cell.final_cum_regret.lower) << ','
       << fmt(cell.final_cum_regret.upper) << ',' << fmt(cell.final_cum_reward.mean) << ','
       << fmt(cell.final_cum_reward.lower) << ',' << fmt(cell.final_cum_reward.upper) << ','
       << csv_safe(cell.error) << '\n';
  }
}

std::string output_path(const OutputConfig& output, const std::string& name) {
  if (!plain_file_name(name)) {
    throw ConfigError("output: '" + name + "' must be a plain file name");
  }
  return (std::filesystem::path(output.dir) / name).string();
}

}  // namespace ldpmab
