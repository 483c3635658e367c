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
#include "ldpmab/privacy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ldpmab/errors.hpp"

namespace ldpmab {

PrivacyBudget::PrivacyBudget(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("privacy budget must be positive, got " +
                                std::to_string(epsilon));
  }
}

double PrivacyBudget::inverse_square() const {
  return is_private() ? 1.0 / (epsilon_ * epsilon_) : 0.0;
}

double laplace_sample(double scale, Rng& rng) {
  if (scale < 0.0 || std::isnan(scale)) {
    throw std::invalid_argument("laplace scale must be non-negative");
  }
  if (scale == 0.0) return 0.0;
  // Difference of two standard exponentials.
  const double u1 = rng.uniform_open_closed();
  const double u2 = rng.uniform_open_closed();
  return scale * std::log(u1 / u2);
}

double nominal_noise_scale(const PrivacyBudget& budget) {
  return budget.is_private() ? 4.0 / budget.epsilon() : 0.0;
}

Privatizer::Privatizer(PrivacyBudget budget, double scale_factor)
    : budget_(budget), noise_scale_(nominal_noise_scale(budget) * scale_factor) {
  if (!(scale_factor > 0.0)) {
    throw std::invalid_argument("noise scale factor must be positive");
  }
}

PrivatizedCellUpdate Privatizer::privatize(const RawCellUpdate& raw,
                                           Rng& rng) const {
  PrivatizedCellUpdate out;
  out.v_tilde = raw.v + laplace_sample(noise_scale_, rng);
  out.u_tilde = raw.u + laplace_sample(noise_scale_, rng);
  return out;
}

PrivatizedCellUpdate privatize(const RawCellUpdate& raw,
                               const PrivacyBudget& budget, Rng& rng) {
  return Privatizer(budget).privatize(raw, rng);
}

namespace {

bool scope_has(const MessageScope& scope, const BinId& bin, int arm) {
  for (const auto& entry : scope) {
    if (entry.bin != bin) continue;
    for (int k : entry.arms) {
      if (k == arm) return true;
    }
  }
  return false;
}

RawCellUpdate raw_at(const RawRecord& z, const BinId& bin, int arm) {
  if (z.bin == bin && z.arm == arm) return {z.reward, 1.0};
  return {};
}

}  // namespace

UserMessage build_user_message(const MessageScope& scope, const BinId& hit_bin,
                               int arm, double reward,
                               const Privatizer& privatizer, Rng& rng,
                               bool require_hit_in_scope) {
  if (!(reward >= 0.0 && reward <= 1.0)) {
    throw std::invalid_argument("reward must lie in [0,1]");
  }
  if (require_hit_in_scope && !scope_has(scope, hit_bin, arm)) {
    throw ContractViolation("arm " + std::to_string(arm) +
                            " is not active in bin " + hit_bin.str());
  }
  const RawRecord z{hit_bin, arm, reward};
  UserMessage message;
  for (const auto& entry : scope) {
    for (int k : entry.arms) {
      message.push_back(
          {entry.bin, k, privatizer.privatize(raw_at(z, entry.bin, k), rng)});
    }
  }
  return message;
}

double ldp_log_ratio(const MessageScope& scope, const RawRecord& z,
                     const RawRecord& z_prime, const Privatizer& privatizer) {
  // Independent Laplace coordinates: the sup of the log ratio is the L1 shift
  // of the raw vector divided by the scale.
  double l1 = 0.0;
  for (const auto& entry : scope) {
    for (int k : entry.arms) {
      const RawCellUpdate a = raw_at(z, entry.bin, k);
      const RawCellUpdate b = raw_at(z_prime, entry.bin, k);
      l1 += std::abs(a.v - b.v) + std::abs(a.u - b.u);
    }
  }
  if (l1 == 0.0) return 0.0;
  if (privatizer.noise_scale() == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return l1 / privatizer.noise_scale();
}

}  // namespace ldpmab
