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
#ifndef LDPMAB_VALIDATION_HPP_
#define LDPMAB_VALIDATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace ldpmab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Analytic LDP ratio over random scopes and record pairs at eps in {0.5, 1, 2}.
// noise_scale_factor perturbs the mechanism (mutation hook).
CheckResult check_ldp_ratio(int pairs, double noise_scale_factor, std::uint64_t seed);

// eps = inf, no sources: estimator equals the raw sample mean of random
// histories and every radius uses the non-private form.
CheckResult check_nonprivate_reduction(int histories, std::uint64_t seed);

// Random refinement sequences: unique membership, unit total volume and
// diameter bounded by tau.
CheckResult check_partition_fuzz(int points, int sequences, std::uint64_t seed);

// KS distance of sampled L_inf radii for several (d, gamma).
CheckResult check_source_sampler(int draws, double threshold, std::uint64_t seed);

struct ValidationOptions {
  double noise_scale_factor = 1.0;
  std::uint64_t seed = 2024;
};

// The fast subset run by `ldpmab validate`.
std::vector<CheckResult> run_fast_validation(const ValidationOptions& options);

}  // namespace ldpmab

#endif  // LDPMAB_VALIDATION_HPP_
