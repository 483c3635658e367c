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
#include "ldpmab/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ldpmab/environments.hpp"
#include "ldpmab/estimation.hpp"
#include "ldpmab/partition.hpp"
#include "ldpmab/privacy.hpp"
#include "ldpmab/rng.hpp"
#include "ldpmab/stats.hpp"

namespace ldpmab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Random tree with random active arm subsets (each bin keeps >= 1 arm).
MessageScope random_scope(int dim, int arms, int refinements, Rng& rng) {
  PartitionTree tree(dim, rng.next());
  for (int i = 0; i < refinements; ++i) {
    const auto& act = tree.active();
    tree.refine(act[rng.uniform_index(act.size())]);
  }
  MessageScope scope;
  for (const BinId& id : tree.active()) {
    ScopeBin sb{id, {}};
    for (int k = 0; k < arms; ++k) {
      if (rng.bernoulli(0.6)) sb.arms.push_back(k);
    }
    if (sb.arms.empty()) sb.arms.push_back(static_cast<int>(rng.uniform_index(arms)));
    scope.push_back(std::move(sb));
  }
  return scope;
}

RawRecord random_record(const MessageScope& scope, Rng& rng) {
  const ScopeBin& sb = scope[rng.uniform_index(scope.size())];
  return {sb.bin, sb.arms[rng.uniform_index(sb.arms.size())], rng.uniform()};
}

}  // namespace

CheckResult check_ldp_ratio(int pairs, double noise_scale_factor, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckResult out{"ldp_ratio", true, "", 0.0};
  Rng rng(seed);
  double worst_excess = -1e300;
  for (double eps : {0.5, 1.0, 2.0}) {
    const Privatizer privatizer(PrivacyBudget(eps), noise_scale_factor);
    for (int i = 0; i < pairs; ++i) {
      const int dim = 1 + static_cast<int>(rng.uniform_index(3));
      const int arms = 2 + static_cast<int>(rng.uniform_index(4));
      const auto scope = random_scope(dim, arms, static_cast<int>(rng.uniform_index(12)), rng);
      const RawRecord z = random_record(scope, rng);
      const RawRecord zp = random_record(scope, rng);
      const double ratio = ldp_log_ratio(scope, z, zp, privatizer);
      worst_excess = std::max(worst_excess, ratio - eps);
      if (!(ratio <= eps + 1e-9)) out.passed = false;
    }
  }
  std::ostringstream d;
  d << "max(log ratio - eps) = " << worst_excess;
  out.detail = d.str();
  out.seconds = seconds_since(start);
  return out;
}

CheckResult check_nonprivate_reduction(int histories, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckResult out{"nonprivate_reduction", true, "", 0.0};
  Rng rng(seed);
  const Privatizer exact(PrivacyBudget::non_private());
  EstimatorConfig cfg;
  cfg.n = 1000;
  double worst = 0.0;
  for (int h = 0; h < histories; ++h) {
    ArmCell cell(1);
    const auto len = static_cast<int>(rng.uniform_index(400));
    const double hit_rate = rng.uniform();
    double reward_sum = 0.0;
    int hits = 0;
    for (int i = 0; i < len; ++i) {
      const bool hit = rng.bernoulli(hit_rate);
      const double r = hit ? rng.uniform() : 0.0;
      cell.accumulate(0, exact.privatize({r, hit ? 1.0 : 0.0}, rng));
      cell.tick(0);
      reward_sum += r;
      hits += hit ? 1 : 0;
    }
    const double mean = hits > 0 ? reward_sum / hits : 0.0;
    const double est = estimate(cell, Eigen::VectorXd::Ones(1));
    worst = std::max(worst, std::abs(est - mean));
    if (!(std::abs(est - mean) <= 1e-12)) out.passed = false;
    if (static_cast<double>(len) >= cfg.gate() && lambda_weight(cell, 0, cfg) != 1.0) {
      out.passed = false;
    }
    if (hits > 0) {
      const double r = radius(cell, Eigen::VectorXd::Ones(1), cfg);
      if (std::abs(r - std::sqrt(cfg.c_n() / hits)) > 1e-12 * (1.0 + r)) out.passed = false;
    }
  }
  std::ostringstream d;
  d << "max |estimate - sample mean| = " << worst;
  out.detail = d.str();
  out.seconds = seconds_since(start);
  return out;
}

CheckResult check_partition_fuzz(int points, int sequences, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckResult out{"partition_fuzz", true, "", 0.0};
  Rng rng(seed);
  std::size_t violations = 0;
  for (int s = 0; s < sequences; ++s) {
    const int dim = 1 + static_cast<int>(rng.uniform_index(4));
    PartitionTree tree(dim, rng.next());
    const int steps = static_cast<int>(rng.uniform_index(60));
    for (int i = 0; i < steps; ++i) {
      const auto& act = tree.active();
      tree.refine(act[rng.uniform_index(act.size())]);
    }
    double volume = 0.0;
    for (const BinId& id : tree.active()) {
      const BinGeometry& g = tree.geometry(id);
      volume += g.volume();
      if (g.diameter() > tau(id.depth, dim) * (1.0 + 1e-12)) ++violations;
    }
    if (std::abs(volume - 1.0) > 1e-12) ++violations;
    const int per_sequence = std::max(1, points / std::max(sequences, 1));
    for (int p = 0; p < per_sequence; ++p) {
      Eigen::VectorXd x(dim);
      for (int k = 0; k < dim; ++k) {
        // Mix interior points with dyadic boundaries and the closed face at 1.
        const double u = rng.uniform();
        x[k] = u < 0.1 ? 1.0 : u < 0.3 ? std::ldexp(static_cast<double>(rng.uniform_index(64)), -6)
                                       : rng.uniform();
      }
      int members = 0;
      for (const BinId& id : tree.active()) members += tree.geometry(id).contains(x) ? 1 : 0;
      if (members != 1) ++violations;
      if (!tree.geometry(tree.locate(x)).contains(x)) ++violations;
    }
  }
  out.passed = violations == 0;
  out.detail = std::to_string(violations) + " violations";
  out.seconds = seconds_since(start);
  return out;
}

CheckResult check_source_sampler(int draws, double threshold, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckResult out{"source_sampler", true, "", 0.0};
  Rng rng(seed);
  const std::pair<int, double> cases[] = {{2, 0.0}, {2, 1.0}, {2, 2.0}, {3, 0.2}};
  std::ostringstream d;
  for (const auto& [dim, gamma] : cases) {
    std::vector<double> radii;
    radii.reserve(static_cast<std::size_t>(draws));
    for (int i = 0; i < draws; ++i) {
      const Eigen::VectorXd x = sample_source_context(gamma, dim, rng);
      radii.push_back((x.array() - 0.5).abs().maxCoeff());
    }
    const double ks = ks_statistic(std::move(radii), [&](double r) {
      return source_radius_cdf(r, gamma, dim);
    });
    if (!(ks < threshold)) out.passed = false;
    d << "(d=" << dim << ",gamma=" << gamma << ") ks=" << ks << " ";
  }
  out.detail = d.str();
  out.seconds = seconds_since(start);
  return out;
}

std::vector<CheckResult> run_fast_validation(const ValidationOptions& options) {
  return {check_ldp_ratio(1000, options.noise_scale_factor, options.seed),
          check_nonprivate_reduction(100, options.seed + 1),
          check_partition_fuzz(2000, 50, options.seed + 2),
          check_source_sampler(100000, 0.01, options.seed + 3)};
}

}  // namespace ldpmab
