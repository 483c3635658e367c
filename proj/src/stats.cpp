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
#include "ldpmab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ldpmab {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

MeanCi mean_ci95(std::span<const double> values) {
  MeanCi out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  const double half = 1.96 * out.sd / std::sqrt(static_cast<double>(values.size()));
  out.lower = out.mean - half;
  out.upper = out.mean + half;
  return out;
}

WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> before,
                                            std::span<const double> after) {
  if (before.size() != after.size()) {
    throw std::invalid_argument("wilcoxon: samples must be paired");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double d = before[i] - after[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult out;
  out.n = diffs.size();
  if (diffs.empty()) return out;

  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(diffs[a]) < std::abs(diffs[b]);
  });
  // Mid-ranks for ties.
  std::vector<double> ranks(diffs.size());
  bool ties = false;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) {
      ++j;
    }
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0) out.w_plus += ranks[i];
  }

  const std::size_t n = diffs.size();
  if (!ties && n <= 60) {
    // Null distribution of W+ by dynamic programming over ranks 1..n.
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> ways(max_sum + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
      for (std::size_t s = max_sum; s >= r; --s) ways[s] += ways[s - r];
    }
    const auto w = static_cast<std::size_t>(std::llround(out.w_plus));
    double tail = 0.0;
    for (std::size_t s = w; s <= max_sum; ++s) tail += ways[s];
    out.p_value = tail / std::ldexp(1.0, static_cast<int>(n));
    out.exact = true;
    return out;
  }
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return out;
  const double z = (out.w_plus - mu - 0.5) / std::sqrt(var);
  out.p_value = 1.0 - standard_normal_cdf(z);
  return out;
}

double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("slope: need >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace ldpmab
