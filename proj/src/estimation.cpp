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
#include "ldpmab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ldpmab/errors.hpp"

namespace ldpmab {

ArmCell::ArmCell(int num_sources)
    : sum_v_(Eigen::VectorXd::Zero(num_sources)),
      sum_u_(Eigen::VectorXd::Zero(num_sources)),
      count_(static_cast<std::size_t>(num_sources), 0) {
  if (num_sources < 1) throw std::invalid_argument("need at least one source");
}

void ArmCell::check_writable(int m) const {
  if (frozen_) throw ContractViolation("accumulate into a frozen cell");
  if (m < 0 || m >= num_sources()) {
    throw ContractViolation("source index " + std::to_string(m) +
                            " out of range");
  }
}

void ArmCell::accumulate(int m, const PrivatizedCellUpdate& update) {
  check_writable(m);
  sum_v_[m] += update.v_tilde;
  sum_u_[m] += update.u_tilde;
}

void ArmCell::tick(int m) {
  check_writable(m);
  ++count_[m];
}

void EstimatorConfig::validate() const {
  if (!(c_conf > 0.0)) throw ConfigError("c_conf must be positive");
  if (n < 3) throw ConfigError("n must be at least 3");
  if (budgets.empty()) throw ConfigError("at least one budget is required");
}

double EstimatorConfig::c_n() const {
  return c_conf * std::log(static_cast<double>(n));
}

double EstimatorConfig::gate() const {
  const double l = std::log(static_cast<double>(n));
  return l * l;
}

double lambda_weight(const ArmCell& cell, int m, const EstimatorConfig& config) {
  const auto count = cell.count(m);
  if (static_cast<double>(count) < config.gate()) return 0.0;
  const PrivacyBudget& budget = config.budgets.at(m);
  if (!budget.is_private()) return 1.0;
  const double eps = budget.epsilon();
  return std::min(std::abs(eps * eps * cell.sum_u(m) / static_cast<double>(count)),
                  1.0);
}

Eigen::VectorXd lambda_weights(const ArmCell& cell,
                               const EstimatorConfig& config) {
  Eigen::VectorXd w(cell.num_sources());
  for (int m = 0; m < cell.num_sources(); ++m) {
    w[m] = lambda_weight(cell, m, config);
  }
  return w;
}

double estimate(const ArmCell& cell,
                const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double den = weights.dot(cell.sum_u());
  if (!(den > 0.0)) return 0.0;
  return weights.dot(cell.sum_v()) / den;
}

double radius(const ArmCell& cell,
              const Eigen::Ref<const Eigen::VectorXd>& weights,
              const EstimatorConfig& config) {
  if (!(weights.array() > 0.0).any()) return kInfiniteRadius;
  const double den = weights.dot(cell.sum_u());
  if (!(den > 0.0)) return kInfiniteRadius;
  double num = 0.0;
  for (int m = 0; m < cell.num_sources(); ++m) {
    if (weights[m] == 0.0) continue;
    const double priv = config.budgets.at(m).inverse_square() *
                        static_cast<double>(cell.count(m));
    num += weights[m] * weights[m] * std::max(priv, cell.sum_u(m));
  }
  return std::sqrt(config.c_n() * num / (den * den));
}

}  // namespace ldpmab
