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
#ifndef LDPMAB_STATS_HPP_
#define LDPMAB_STATS_HPP_

#include <functional>
#include <span>
#include <vector>

namespace ldpmab {

struct MeanCi {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
};

// Normal-approximation 95% interval mean +/- 1.96 sd / sqrt(n). A single
// value collapses the interval onto the mean.
MeanCi mean_ci95(std::span<const double> values);

// One-sided Wilcoxon signed-rank test of H1: median(before - after) > 0.
// Zero differences are dropped. Exact null distribution when there are no
// ties among |differences| and n <= 60, otherwise the normal approximation
// with tie correction and continuity correction.
struct WilcoxonResult {
  std::size_t n = 0;       // non-zero pairs
  double w_plus = 0.0;     // rank sum of positive differences
  double p_value = 1.0;
  bool exact = false;
};
WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> before,
                                            std::span<const double> after);

// sup_x |F_n(x) - F(x)| for the empirical CDF of the sample.
double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf);

// Slope of the ordinary least-squares line y = a + b x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

double standard_normal_cdf(double z);

}  // namespace ldpmab

#endif  // LDPMAB_STATS_HPP_
