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
// Independent reference computations shared by the unit and acceptance tests.

#ifndef LDPMAB_TESTS_ORACLES_HPP_
#define LDPMAB_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ldpmab/partition.hpp"

namespace oracle {

// logistic bump written out from its closed form.
inline double bump(int arm, double x1, int arms) {
  const double c = (arm + 1.0) / arms;
  const double u = std::exp(-2.0 * arms * arms * (x1 - c) * (x1 - c));
  return 2.0 * u / (1.0 + u);
}

// E_X[max_k f_k - mean_k f_k] for X uniform on the cube; only x^1 matters.
// Composite Simpson rule.
inline double uniform_policy_regret(int arms, int intervals = 20000) {
  auto g = [&](double x) {
    double mx = 0.0, sum = 0.0;
    for (int k = 0; k < arms; ++k) {
      const double f = bump(k, x, arms);
      mx = std::max(mx, f);
      sum += f;
    }
    return mx - sum / arms;
  };
  const double h = 1.0 / intervals;
  double s = g(0.0) + g(1.0);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return s * h / 3.0;
}

struct Pull {
  Eigen::VectorXd x;
  int arm;
  std::int64_t step;  // global step of the pull
};

// Population counterpart of the estimator: mean of f_arm over the pulls of
// `arm` inside the bin taken after the bin was created at step `born`.
template <class F>
double population_mean(const std::vector<Pull>& history, const ldpmab::BinGeometry& bin,
                       std::int64_t born, int arm, F&& f) {
  double num = 0.0, den = 0.0;
  for (const Pull& p : history) {
    if (p.step <= born || p.arm != arm || !bin.contains(p.x)) continue;
    num += f(arm, p.x);
    den += 1.0;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace oracle

#endif  // LDPMAB_TESTS_ORACLES_HPP_
