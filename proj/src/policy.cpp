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
#include "ldpmab/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "ldpmab/errors.hpp"
#include "ldpmab/log.hpp"

namespace ldpmab {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kElimination: return "elimination";
    case EventKind::kRefinement: return "refinement";
    case EventKind::kDepthCap: return "depth_cap";
  }
  return "unknown";
}

int PolicyConfig::effective_max_depth() const {
  if (max_depth >= 0) return std::min(max_depth, PartitionTree::kHardDepthLimit);
  return std::min(8 * dim, PartitionTree::kHardDepthLimit);
}

void PolicyConfig::validate() const {
  if (dim < 1) throw ConfigError("d must be >= 1");
  if (arms < 1) throw ConfigError("K must be >= 1");
  if (n_target < 0) throw ConfigError("n_P must be non-negative");
  if (source_budgets.size() != source_sizes.size()) {
    throw ConfigError("one sample size per auxiliary source is required");
  }
  for (auto n : source_sizes) {
    if (n < 0) throw ConfigError("auxiliary sample sizes must be >= 0");
  }
  if (!(c_conf > 0.0)) throw ConfigError("c_conf must be positive");
  if (!(noise_scale_factor > 0.0)) {
    throw ConfigError("noise scale factor must be positive");
  }
}

LdpPolicy::LdpPolicy(PolicyConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      tree_(config_.dim, derive_seed(seed, 0, 0, "policy/tie-break")),
      progress_(static_cast<std::size_t>(config_.num_sources()), 0),
      select_rng_(derive_seed(seed, 0, 0, "policy/select")),
      noise_rng_(derive_seed(seed, 0, 0, "policy/noise")) {
  config_.validate();
  std::int64_t n = config_.n_target;
  for (auto nq : config_.source_sizes) n = std::max(n, nq);
  estimator_.c_conf = config_.c_conf;
  estimator_.n = std::max<std::int64_t>(n, 3);
  estimator_.budgets.clear();
  estimator_.budgets.push_back(config_.target_budget);
  for (const auto& b : config_.source_budgets) estimator_.budgets.push_back(b);
  estimator_.validate();
  for (const auto& b : estimator_.budgets) {
    privatizers_.emplace_back(b, config_.noise_scale_factor);
  }

  BinState root;
  for (int k = 0; k < config_.arms; ++k) root.arms.push_back(k);
  root.cells.assign(static_cast<std::size_t>(config_.arms),
                    ArmCell(config_.num_sources()));
  bins_.emplace(tree_.active().front(), std::move(root));
}

const LdpPolicy::BinState& LdpPolicy::bin_state(const BinId& bin) const {
  auto it = bins_.find(bin);
  if (it == bins_.end()) {
    throw ContractViolation("bin " + bin.str() + " is not active");
  }
  return it->second;
}

LdpPolicy::BinState& LdpPolicy::bin_state(const BinId& bin) {
  return const_cast<BinState&>(std::as_const(*this).bin_state(bin));
}

const std::vector<int>& LdpPolicy::active_arms(const BinId& bin) const {
  return bin_state(bin).arms;
}

const ArmCell& LdpPolicy::cell(const BinId& bin, int arm) const {
  return bin_state(bin).cells.at(static_cast<std::size_t>(arm));
}

std::size_t LdpPolicy::total_active_arms() const {
  std::size_t total = 0;
  for (const auto& [id, state] : bins_) total += state.arms.size();
  return total;
}

MessageScope LdpPolicy::scope() const {
  MessageScope scope;
  scope.reserve(bins_.size());
  for (const auto& [id, state] : bins_) scope.push_back({id, state.arms});
  return scope;
}

Eigen::VectorXd LdpPolicy::arm_distribution(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto& arms = active_arms(tree_.locate(x));
  Eigen::VectorXd p = Eigen::VectorXd::Zero(config_.arms);
  for (int k : arms) p[k] = 1.0 / static_cast<double>(arms.size());
  return p;
}

int LdpPolicy::select_arm(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto& arms = active_arms(tree_.locate(x));
  return arms[select_rng_.uniform_index(arms.size())];
}

Eigen::VectorXd LdpPolicy::weights(const BinId& bin, int arm) const {
  const ArmCell& c = cell(bin, arm);
  if (config_.target_only()) return Eigen::VectorXd::Ones(1);
  return lambda_weights(c, estimator_);
}

std::vector<ArmSummary> LdpPolicy::summarize(const BinId& bin) const {
  std::vector<ArmSummary> out;
  for (int k : active_arms(bin)) {
    const ArmCell& c = cell(bin, k);
    const Eigen::VectorXd w = weights(bin, k);
    out.push_back({k, estimate(c, w), radius(c, w, estimator_)});
  }
  return out;
}

std::vector<int> eliminated_arms(const std::vector<ArmSummary>& arms,
                                 const std::vector<bool>& usable) {
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (usable[i]) {
      best_lower = std::max(best_lower, arms[i].estimate - 2.0 * arms[i].radius);
    }
  }
  // The arm attaining best_lower has upper bound >= best_lower, so it always
  // survives.
  std::vector<int> removed;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (usable[i] && arms[i].estimate + 2.0 * arms[i].radius < best_lower) {
      removed.push_back(arms[i].arm);
    }
  }
  return removed;
}

bool refinement_due(const std::vector<ArmSummary>& arms, int depth, int dim) {
  const double threshold = tau(depth, dim);
  for (const ArmSummary& a : arms) {
    if (a.radius < threshold) return true;
  }
  return false;
}

std::vector<int> LdpPolicy::try_eliminate(const BinId& bin) {
  BinState& state = bin_state(bin);
  if (state.arms.size() < 2) return {};
  const std::vector<ArmSummary> summary = summarize(bin);
  std::vector<bool> usable(summary.size(), false);
  for (std::size_t i = 0; i < summary.size(); ++i) {
    bool ok = usable_radius(summary[i].radius);
    if (ok && config_.target_only()) {
      ok = static_cast<double>(cell(bin, summary[i].arm).count(0)) >=
           estimator_.gate();
    }
    usable[i] = ok;
  }
  const std::vector<int> removed = eliminated_arms(summary, usable);
  for (int k : removed) {
    state.arms.erase(std::find(state.arms.begin(), state.arms.end(), k));
    events_.push_back({EventKind::kElimination, step_, stage_source_, bin,
                       "arm=" + std::to_string(k)});
  }
  return removed;
}

std::optional<std::pair<BinId, BinId>> LdpPolicy::try_refine(const BinId& bin) {
  BinState& state = bin_state(bin);
  if (!refinement_due(summarize(bin), bin.depth, config_.dim)) return std::nullopt;

  if (bin.depth >= config_.effective_max_depth()) {
    if (!state.depth_capped) {
      state.depth_capped = true;
      events_.push_back({EventKind::kDepthCap, step_, stage_source_, bin,
                         "max_depth=" + std::to_string(bin.depth)});
      log_warning("bin " + bin.str() +
                  " reached the maximum depth; refinement disabled");
    }
    return std::nullopt;
  }

  for (auto& c : state.cells) c.freeze();
  const std::vector<int> arms = state.arms;
  bins_.erase(bin);
  const auto children = tree_.refine(bin);
  for (const BinId& child : {children.first, children.second}) {
    BinState fresh;
    fresh.arms = arms;
    fresh.cells.assign(static_cast<std::size_t>(config_.arms),
                       ArmCell(config_.num_sources()));
    bins_.emplace(child, std::move(fresh));
  }
  events_.push_back({EventKind::kRefinement, step_, stage_source_, bin,
                     "children=" + children.first.str() + ";" +
                         children.second.str()});
  return children;
}

void LdpPolicy::process_bins() {
  // Bins created during this pass wait for the next step.
  const std::vector<BinId> snapshot = tree_.active();
  for (const BinId& bin : snapshot) {
    try_eliminate(bin);
    try_refine(bin);
  }
}

StepRow LdpPolicy::ingest(int m, const Eigen::Ref<const Eigen::VectorXd>& x,
                          int arm, double reward, bool require_hit_in_scope) {
  const BinId hit = tree_.locate(x);
  const UserMessage message =
      build_user_message(scope(), hit, arm, reward,
                         privatizers_[static_cast<std::size_t>(m)], noise_rng_,
                         require_hit_in_scope);
  ++step_;
  ++progress_[static_cast<std::size_t>(m)];
  stage_source_ = m;
  for (const MessageEntry& entry : message) {
    bins_.at(entry.bin)
        .cells[static_cast<std::size_t>(entry.arm)]
        .accumulate(m, entry.value);
  }
  for (auto& [id, state] : bins_) {
    for (auto& c : state.cells) c.tick(m);
  }
  process_bins();
  return {step_,        m,        x,
          arm,          reward,   tree_.size(),
          total_active_arms(),    events_.size()};
}

StepRow LdpPolicy::step_target(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const std::function<double(int)>& pull) {
  stage_ = config_.num_sources();
  const int arm = select_arm(x);
  const double reward = pull(arm);
  return ingest(0, x, arm, reward, true);
}

StepRow LdpPolicy::step_aux(int m, const Eigen::Ref<const Eigen::VectorXd>& x,
                            int arm, double reward) {
  if (m < 1 || m >= config_.num_sources()) {
    throw std::invalid_argument("auxiliary source index out of range");
  }
  if (arm < 0 || arm >= config_.arms) {
    throw std::invalid_argument("behavior arm " + std::to_string(arm) +
                                " outside [0, K)");
  }
  if (m < stage_) {
    throw ContractViolation("auxiliary source " + std::to_string(m) +
                            " used out of order");
  }
  if (progress_[static_cast<std::size_t>(m)] >=
      config_.source_sizes[static_cast<std::size_t>(m - 1)]) {
    throw ContractViolation("auxiliary source " + std::to_string(m) +
                            " has more records than its declared size");
  }
  stage_ = m;
  return ingest(m, x, arm, reward, false);
}

RunRecord run(LdpPolicy& policy, const RunSchedule& schedule,
              const std::function<Eigen::VectorXd()>& next_context,
              const std::function<double(const Eigen::VectorXd&, int)>& pull,
              const std::function<void(const LdpPolicy&, const StepRow&)>&
                  observer) {
  RunRecord record;
  for (const AuxBatch& batch : schedule.auxiliary) {
    for (const AuxSample& s : *batch.samples) {
      record.push_back(policy.step_aux(batch.source, s.x, s.arm, s.reward));
      if (observer) observer(policy, record.back());
    }
  }
  for (std::int64_t i = 0; i < schedule.n_target; ++i) {
    const Eigen::VectorXd x = next_context();
    record.push_back(
        policy.step_target(x, [&](int arm) { return pull(x, arm); }));
    if (observer) observer(policy, record.back());
  }
  return record;
}

}  // namespace ldpmab
