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
#ifndef LDPMAB_ENVIRONMENTS_HPP_
#define LDPMAB_ENVIRONMENTS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldpmab/policy.hpp"
#include "ldpmab/privacy.hpp"
#include "ldpmab/rng.hpp"

namespace ldpmab {

// Logistic bump reward family on the first coordinate. Arm a (0-based) peaks
// at x^1 = (a + 1) / K where it attains 1:
//   f_a(x) = 2 e^{-2K^2 (x^1 - (a+1)/K)^2} / (1 + e^{-2K^2 (x^1 - (a+1)/K)^2}).
template <typename Derived>
typename Derived::Scalar reward_mean(int arm, const Eigen::MatrixBase<Derived>& x,
                                     int arms) {
  using Scalar = typename Derived::Scalar;
  const Scalar center = Scalar(arm + 1) / Scalar(arms);
  const Scalar diff = x(0) - center;
  const Scalar u = std::exp(Scalar(-2) * Scalar(arms) * Scalar(arms) * diff * diff);
  return Scalar(2) * u / (Scalar(1) + u);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> reward_means(
    const Eigen::MatrixBase<Derived>& x, int arms) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> f(arms);
  for (int a = 0; a < arms; ++a) f(a) = reward_mean(a, x, arms);
  return f;
}

// Pointwise maximizer, ties toward the lowest index.
int best_arm(const Eigen::Ref<const Eigen::VectorXd>& means);

enum class RewardNoise { kBernoulli, kTruncatedGaussian };

struct SyntheticEnvSpec {
  int d = 2;
  int arms = 3;
  std::string reward_family = "logistic_bump";
  RewardNoise noise = RewardNoise::kBernoulli;
  double noise_sd = 0.1;  // truncated Gaussian only

  void validate() const;
  double mean(int arm, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd means(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct SourceSpec {
  double gamma = 0.0;   // transfer exponent
  double kappa = 1.0;   // exploration coefficient
  PrivacyBudget epsilon = PrivacyBudget::non_private();
  std::int64_t n = 0;

  void validate() const;
};

// Uniform on [0,1]^d.
Eigen::VectorXd sample_target_context(int d, Rng& rng);

// Density proportional to ||x - 1/2||_inf^gamma on [0,1]^d. The L_inf
// radius R has CDF (2r)^{d+gamma} on [0, 1/2]; given R the point is uniform
// on the sphere of radius R, i.e. uniform on one of its 2d faces.
Eigen::VectorXd sample_source_context(double gamma, int d, Rng& rng);

// CDF of the L_inf radius under sample_source_context.
double source_radius_cdf(double r, double gamma, int d);

// kappa/K + (2 - 2 kappa) / (K (K-1)) * (0, ..., K-1).
Eigen::VectorXd behavior_policy_vector(double kappa, int arms);

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, Rng& rng);

double draw_reward(int arm, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const SyntheticEnvSpec& spec, Rng& rng);

std::vector<AuxSample> gen_aux_dataset(const SourceSpec& source,
                                       const SyntheticEnvSpec& env, Rng& rng);

// ---- classification-derived bandits ----

struct ClassificationRow {
  Eigen::VectorXd features;  // in [0,1]^d
  int label;                 // 0-based class, used as the rewarded arm
};

struct RawTable {
  std::vector<std::string> feature_names;
  std::string label_name;
  std::vector<Eigen::VectorXd> features;
  std::vector<long long> labels;  // as written in the file
};

// Header row, then numeric columns. label_column names the label column;
// every other column is a feature. Throws ConfigError on malformed input.
RawTable read_table_csv(const std::string& path, const std::string& label_column);

// Per-column min-max scaling to [0,1], constants frozen at fit time.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(Eigen::VectorXd min, Eigen::VectorXd max);
  static MinMaxScaler fit(const std::vector<Eigen::VectorXd>& rows);

  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }

  // Throws ConfigError when a scaled value leaves [0,1].
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& row) const;

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

// Labels in the file are 1..K. Throws ConfigError for out-of-range labels or
// features outside the unit cube.
std::vector<ClassificationRow> to_classification_rows(
    const std::vector<Eigen::VectorXd>& features,
    const std::vector<long long>& labels, int arms);

std::vector<ClassificationRow> permute_rows(std::vector<ClassificationRow> rows,
                                            Rng& rng);

// Indicator reward 1(label == arm).
inline double classification_reward(const ClassificationRow& row, int arm) {
  return row.label == arm ? 1.0 : 0.0;
}

// Target role: a permuted stream of rows whose reward is revealed on pull.
class ClassificationStream {
 public:
  ClassificationStream(std::vector<ClassificationRow> rows, Rng& rng);
  std::size_t size() const { return rows_.size(); }
  bool done() const { return next_ >= rows_.size(); }
  const ClassificationRow& next();
  const std::vector<ClassificationRow>& rows() const { return rows_; }

 private:
  std::vector<ClassificationRow> rows_;
  std::size_t next_ = 0;
};

// Source role: permuted rows with behavior-policy arms and indicator rewards.
std::vector<AuxSample> classification_to_bandit(
    std::vector<ClassificationRow> rows,
    const Eigen::Ref<const Eigen::VectorXd>& behavior, Rng& rng);

}  // namespace ldpmab

#endif  // LDPMAB_ENVIRONMENTS_HPP_
