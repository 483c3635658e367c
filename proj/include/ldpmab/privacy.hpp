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
#ifndef LDPMAB_PRIVACY_HPP_
#define LDPMAB_PRIVACY_HPP_

#include <limits>
#include <vector>

#include "ldpmab/partition.hpp"
#include "ldpmab/rng.hpp"

namespace ldpmab {

// Per-user budget epsilon > 0. +infinity encodes the non-private limit.
class PrivacyBudget {
 public:
  explicit PrivacyBudget(double epsilon);
  static PrivacyBudget non_private() {
    return PrivacyBudget(std::numeric_limits<double>::infinity());
  }

  double epsilon() const { return epsilon_; }
  bool is_private() const { return epsilon_ < std::numeric_limits<double>::infinity(); }
  // 1 / epsilon^2, zero in the non-private limit.
  double inverse_square() const;

 private:
  double epsilon_;
};

// scale * L with L standard Laplace (density e^{-|x|}/2). Scale 0 returns 0
// without consuming randomness.
double laplace_sample(double scale, Rng& rng);

struct RawCellUpdate {
  double v = 0.0;  // reward * hit indicator
  double u = 0.0;  // hit indicator
};

struct PrivatizedCellUpdate {
  double v_tilde = 0.0;
  double u_tilde = 0.0;
};

// Laplace mechanism applied to the (V, U) families. The budget is split
// evenly between the families; each has L1 sensitivity 2, so each
// coordinate receives noise of scale 4 / epsilon.
class Privatizer {
 public:
  explicit Privatizer(PrivacyBudget budget, double scale_factor = 1.0);

  const PrivacyBudget& budget() const { return budget_; }
  // Noise scale injected per coordinate.
  double noise_scale() const { return noise_scale_; }

  PrivatizedCellUpdate privatize(const RawCellUpdate& raw, Rng& rng) const;

 private:
  PrivacyBudget budget_;
  double noise_scale_;
};

// Nominal per-coordinate scale 4 / epsilon.
double nominal_noise_scale(const PrivacyBudget& budget);

PrivatizedCellUpdate privatize(const RawCellUpdate& raw,
                               const PrivacyBudget& budget, Rng& rng);

// One key of a user message: bin, arm and its active arm set.
struct ScopeBin {
  BinId bin;
  std::vector<int> arms;  // ascending
};
// Every active bin with its active arms, in ascending bin order.
using MessageScope = std::vector<ScopeBin>;

struct MessageEntry {
  BinId bin;
  int arm;
  PrivatizedCellUpdate value;
};
// Entries in ascending (bin, arm) order, one per key of the scope.
using UserMessage = std::vector<MessageEntry>;

// Privatizes the raw statistics of one interaction over the whole scope.
// When require_hit_in_scope is set, the pulled arm must be active in the
// user's bin (ContractViolation otherwise); otherwise an out-of-scope hit
// contributes nothing.
UserMessage build_user_message(const MessageScope& scope, const BinId& hit_bin,
                               int arm, double reward,
                               const Privatizer& privatizer, Rng& rng,
                               bool require_hit_in_scope = true);

// A raw record as seen by the mechanism: the bin its context falls in, the
// pulled arm and the reward.
struct RawRecord {
  BinId bin;
  int arm;
  double reward;
};

// Supremum over outputs of log p(out | z) / p(out | z') for the message
// mechanism, evaluated from the Laplace densities. +infinity when the
// records differ and no noise is added.
double ldp_log_ratio(const MessageScope& scope, const RawRecord& z,
                     const RawRecord& z_prime, const Privatizer& privatizer);

}  // namespace ldpmab

#endif  // LDPMAB_PRIVACY_HPP_
