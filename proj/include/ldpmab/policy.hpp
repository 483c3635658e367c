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
#ifndef LDPMAB_POLICY_HPP_
#define LDPMAB_POLICY_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ldpmab/estimation.hpp"
#include "ldpmab/partition.hpp"
#include "ldpmab/privacy.hpp"
#include "ldpmab/rng.hpp"

namespace ldpmab {

struct PolicyConfig {
  int dim = 1;
  int arms = 2;
  PrivacyBudget target_budget = PrivacyBudget::non_private();
  std::int64_t n_target = 1000;
  // One entry per auxiliary source, in consumption order. Empty selects the
  // target-only rules (unit weights, elimination gated on log^2(n_P)).
  std::vector<PrivacyBudget> source_budgets;
  std::vector<std::int64_t> source_sizes;
  double c_conf = 40.0;
  // Bins at this depth are never refined. Negative selects min(8 d, 62).
  int max_depth = -1;
  // Multiplies the nominal 4/epsilon noise scale. Only for mutation tests.
  double noise_scale_factor = 1.0;

  int num_sources() const { return 1 + static_cast<int>(source_budgets.size()); }
  bool target_only() const { return source_budgets.empty(); }
  int effective_max_depth() const;
  void validate() const;
};

enum class EventKind { kElimination, kRefinement, kDepthCap };
const char* to_string(EventKind kind);

struct StructuralEvent {
  EventKind kind;
  // Global user index (1-based over auxiliary then target users).
  std::int64_t step;
  // Source whose user triggered the event (0 = target).
  int source;
  BinId bin;
  // Eliminated arm, or both children for refinements, as text.
  std::string detail;
};

// One interaction as logged by the policy.
struct StepRow {
  std::int64_t step;
  int source;
  Eigen::VectorXd x;
  int arm;
  double reward;
  std::size_t n_bins;
  std::size_t n_active_arms_total;
  std::size_t events_end;  // events()[0, events_end) happened up to this step
};
using RunRecord = std::vector<StepRow>;

struct ArmSummary {
  int arm;
  double estimate;
  double radius;
};

// Elimination rule: with L the largest estimate - 2 radius over usable arms,
// removes every usable arm whose estimate + 2 radius falls below L.
std::vector<int> eliminated_arms(const std::vector<ArmSummary>& arms,
                                 const std::vector<bool>& usable);

// True when some arm's radius is below tau(depth, dim).
bool refinement_due(const std::vector<ArmSummary>& arms, int depth, int dim);

// Learner state machine: adaptive dyadic partition, per-bin active arm sets,
// privatized accumulators, elimination and refinement.
class LdpPolicy {
 public:
  LdpPolicy(PolicyConfig config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  const EstimatorConfig& estimator_config() const { return estimator_; }
  const PartitionTree& tree() const { return tree_; }
  const std::vector<StructuralEvent>& events() const { return events_; }

  // Users processed so far (all sources).
  std::int64_t step() const { return step_; }
  // Users of source m processed so far.
  std::int64_t progress(int m) const { return progress_.at(m); }

  const std::vector<int>& active_arms(const BinId& bin) const;
  const ArmCell& cell(const BinId& bin, int arm) const;
  std::size_t total_active_arms() const;
  MessageScope scope() const;

  // Probability of each arm being pulled at x.
  Eigen::VectorXd arm_distribution(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Uniform draw from the active arms of x's bin.
  int select_arm(const Eigen::Ref<const Eigen::VectorXd>& x);

  // Weights, estimate and radius of every active arm of a bin.
  Eigen::VectorXd weights(const BinId& bin, int arm) const;
  std::vector<ArmSummary> summarize(const BinId& bin) const;

  std::vector<int> try_eliminate(const BinId& bin);
  std::optional<std::pair<BinId, BinId>> try_refine(const BinId& bin);

  // Target interaction: select, pull, privatize, update.
  StepRow step_target(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const std::function<double(int)>& pull);

  // Auxiliary user of source m (1..M) with its recorded behavior arm.
  StepRow step_aux(int m, const Eigen::Ref<const Eigen::VectorXd>& x, int arm,
                   double reward);

 private:
  struct BinState {
    std::vector<int> arms;
    std::vector<ArmCell> cells;
    bool depth_capped = false;
  };

  const BinState& bin_state(const BinId& bin) const;
  BinState& bin_state(const BinId& bin);
  StepRow ingest(int m, const Eigen::Ref<const Eigen::VectorXd>& x, int arm,
                 double reward, bool require_hit_in_scope);
  void process_bins();

  PolicyConfig config_;
  EstimatorConfig estimator_;
  PartitionTree tree_;
  std::vector<Privatizer> privatizers_;
  std::map<BinId, BinState> bins_;
  std::vector<StructuralEvent> events_;
  std::vector<std::int64_t> progress_;
  std::int64_t step_ = 0;
  int stage_ = 1;  // lowest source still allowed; num_sources() once target began
  int stage_source_ = 0;  // source of the user being processed
  Rng select_rng_;
  Rng noise_rng_;
};

struct AuxSample {
  Eigen::VectorXd x;
  int arm;
  double reward;
};

// One auxiliary dataset bound to its source index.
struct AuxBatch {
  int source;
  const std::vector<AuxSample>* samples;
};

struct RunSchedule {
  std::vector<AuxBatch> auxiliary;  // in consumption order
  std::int64_t n_target = 0;
};

// Jump-start over the auxiliary batches, then n_target target steps.
// next_context supplies target contexts; pull(x, arm) draws the reward.
RunRecord run(LdpPolicy& policy, const RunSchedule& schedule,
              const std::function<Eigen::VectorXd()>& next_context,
              const std::function<double(const Eigen::VectorXd&, int)>& pull,
              const std::function<void(const LdpPolicy&, const StepRow&)>&
                  observer = {});

}  // namespace ldpmab

#endif  // LDPMAB_POLICY_HPP_
