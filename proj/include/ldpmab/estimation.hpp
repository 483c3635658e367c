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
#ifndef LDPMAB_ESTIMATION_HPP_
#define LDPMAB_ESTIMATION_HPP_

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "ldpmab/privacy.hpp"

namespace ldpmab {

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

// Privatized accumulators of one (bin, arm) pair, one column per source
// (0 = target, 1..M = auxiliary). count(m) is the number of source-m steps
// during which the owning bin was active. Frozen once the bin is refined.
class ArmCell {
 public:
  explicit ArmCell(int num_sources = 1);

  int num_sources() const { return static_cast<int>(sum_v_.size()); }
  double sum_v(int m) const { return sum_v_[m]; }
  double sum_u(int m) const { return sum_u_[m]; }
  std::int64_t count(int m) const { return count_[m]; }
  const Eigen::VectorXd& sum_v() const { return sum_v_; }
  const Eigen::VectorXd& sum_u() const { return sum_u_; }

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  void accumulate(int m, const PrivatizedCellUpdate& update);
  void tick(int m);

 private:
  void check_writable(int m) const;

  Eigen::VectorXd sum_v_;
  Eigen::VectorXd sum_u_;
  std::vector<std::int64_t> count_;
  bool frozen_ = false;
};

struct EstimatorConfig {
  double c_conf = 40.0;
  // n = max(n_P, n_Q_1, ..., n_Q_M); at least 3.
  std::int64_t n = 3;
  // Budget of each source, index 0 is the target.
  std::vector<PrivacyBudget> budgets{PrivacyBudget::non_private()};

  void validate() const;
  // C_n = c_conf * log(n).
  double c_n() const;
  // Exploration gate log^2(n).
  double gate() const;
};

// Source weight: 0 below the exploration gate, otherwise
// min(|eps_m^2 sum_u_m / count_m|, 1); 1 for non-private sources.
double lambda_weight(const ArmCell& cell, int m, const EstimatorConfig& config);

Eigen::VectorXd lambda_weights(const ArmCell& cell,
                               const EstimatorConfig& config);

// Weighted ratio estimator; 0 when the weighted denominator is not positive.
double estimate(const ArmCell& cell, const Eigen::Ref<const Eigen::VectorXd>& weights);

// Confidence radius; kInfiniteRadius when no weight is positive or the
// weighted denominator is not positive.
double radius(const ArmCell& cell, const Eigen::Ref<const Eigen::VectorXd>& weights,
              const EstimatorConfig& config);

inline bool usable_radius(double r) { return r > 0.0 && r < kInfiniteRadius; }

}  // namespace ldpmab

#endif  // LDPMAB_ESTIMATION_HPP_
