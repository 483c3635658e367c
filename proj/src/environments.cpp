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
#include "ldpmab/environments.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ldpmab/errors.hpp"

namespace ldpmab {

int best_arm(const Eigen::Ref<const Eigen::VectorXd>& means) {
  int best = 0;
  for (int a = 1; a < means.size(); ++a) {
    if (means[a] > means[best]) best = a;
  }
  return best;
}

void SyntheticEnvSpec::validate() const {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (arms < 2) throw ConfigError("K must be >= 2");
  if (reward_family != "logistic_bump") {
    throw ConfigError("unknown reward family '" + reward_family + "'");
  }
  if (noise == RewardNoise::kTruncatedGaussian && !(noise_sd > 0.0)) {
    throw ConfigError("noise_sd must be positive");
  }
}

double SyntheticEnvSpec::mean(int arm,
                              const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return reward_mean(arm, x, arms);
}

Eigen::VectorXd SyntheticEnvSpec::means(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return reward_means(x, arms);
}

void SourceSpec::validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("kappa must be in [0,1]");
  if (n < 0) throw ConfigError("source sample size must be >= 0");
}

Eigen::VectorXd sample_target_context(int d, Rng& rng) {
  Eigen::VectorXd x(d);
  for (int k = 0; k < d; ++k) x[k] = rng.uniform();
  return x;
}

double source_radius_cdf(double r, double gamma, int d) {
  if (r <= 0.0) return 0.0;
  if (r >= 0.5) return 1.0;
  return std::pow(2.0 * r, d + gamma);
}

Eigen::VectorXd sample_source_context(double gamma, int d, Rng& rng) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  const double radius = 0.5 * std::pow(rng.uniform(), 1.0 / (d + gamma));
  const auto face = static_cast<int>(rng.uniform_index(2 * static_cast<std::uint64_t>(d)));
  Eigen::VectorXd x(d);
  for (int k = 0; k < d; ++k) x[k] = 0.5 + radius * (2.0 * rng.uniform() - 1.0);
  x[face / 2] = face % 2 == 0 ? 0.5 - radius : 0.5 + radius;
  return x.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::VectorXd behavior_policy_vector(double kappa, int arms) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("kappa must lie in [0,1]");
  }
  if (arms < 2) throw std::invalid_argument("K must be >= 2");
  const double k = arms;
  return Eigen::VectorXd::Constant(arms, kappa / k) +
         (2.0 - 2.0 * kappa) / (k * (k - 1.0)) *
             Eigen::VectorXd::LinSpaced(arms, 0.0, k - 1.0);
}

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, Rng& rng) {
  const double u = rng.uniform() * p.sum();
  double acc = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  // Rounding: return the last arm with positive mass.
  for (int a = static_cast<int>(p.size()) - 1; a >= 0; --a) {
    if (p[a] > 0.0) return a;
  }
  throw std::invalid_argument("probability vector has no mass");
}

double draw_reward(int arm, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const SyntheticEnvSpec& spec, Rng& rng) {
  const double f = spec.mean(arm, x);
  switch (spec.noise) {
    case RewardNoise::kBernoulli:
      return rng.bernoulli(f) ? 1.0 : 0.0;
    case RewardNoise::kTruncatedGaussian:
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const double y = f + spec.noise_sd * rng.normal();
        if (y >= 0.0 && y <= 1.0) return y;
      }
      return f;
  }
  return f;
}

std::vector<AuxSample> gen_aux_dataset(const SourceSpec& source,
                                       const SyntheticEnvSpec& env, Rng& rng) {
  source.validate();
  const Eigen::VectorXd behavior = behavior_policy_vector(source.kappa, env.arms);
  std::vector<AuxSample> data;
  data.reserve(static_cast<std::size_t>(source.n));
  for (std::int64_t i = 0; i < source.n; ++i) {
    AuxSample s;
    s.x = sample_source_context(source.gamma, env.d, rng);
    s.arm = sample_categorical(behavior, rng);
    s.reward = draw_reward(s.arm, s.x, env, rng);
    data.push_back(std::move(s));
  }
  return data;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("non-numeric value '" + s + "' at " + where);
  }
  return v;
}

}  // namespace

RawTable read_table_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV file '" + path + "'");
  const std::vector<std::string> header = split_csv_line(line);
  int label_idx = -1;
  RawTable table;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == label_column) {
      label_idx = c;
      table.label_name = header[c];
    } else {
      table.feature_names.push_back(header[c]);
    }
  }
  if (label_idx < 0) {
    throw ConfigError("label column '" + label_column + "' not found in '" +
                      path + "'");
  }
  const auto d = static_cast<Eigen::Index>(table.feature_names.size());
  if (d < 1) throw ConfigError("CSV '" + path + "' has no feature columns");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw ConfigError("wrong number of fields at " + where);
    }
    Eigen::VectorXd row(d);
    Eigen::Index k = 0;
    for (int c = 0; c < static_cast<int>(fields.size()); ++c) {
      if (c == label_idx) {
        const double v = parse_number(fields[c], where);
        if (v != std::floor(v)) throw ConfigError("non-integer label at " + where);
        table.labels.push_back(static_cast<long long>(v));
      } else {
        row[k++] = parse_number(fields[c], where);
      }
    }
    table.features.push_back(std::move(row));
  }
  return table;
}

MinMaxScaler::MinMaxScaler(Eigen::VectorXd min, Eigen::VectorXd max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw std::invalid_argument("scaler sizes");
}

MinMaxScaler MinMaxScaler::fit(const std::vector<Eigen::VectorXd>& rows) {
  if (rows.empty()) throw ConfigError("cannot fit a scaler on zero rows");
  Eigen::VectorXd lo = rows.front();
  Eigen::VectorXd hi = rows.front();
  for (const auto& r : rows) {
    lo = lo.cwiseMin(r);
    hi = hi.cwiseMax(r);
  }
  return MinMaxScaler(lo, hi);
}

Eigen::VectorXd MinMaxScaler::apply(
    const Eigen::Ref<const Eigen::VectorXd>& row) const {
  if (row.size() != min_.size()) throw ConfigError("feature count mismatch");
  Eigen::VectorXd out(row.size());
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    const double span = max_[k] - min_[k];
    // Constant columns map to 0.
    out[k] = span > 0.0 ? (row[k] - min_[k]) / span : 0.0;
    if (!(out[k] >= 0.0 && out[k] <= 1.0)) {
      throw ConfigError("scaled feature " + std::to_string(k) +
                        " leaves [0,1]: " + std::to_string(out[k]));
    }
  }
  return out;
}

std::vector<ClassificationRow> to_classification_rows(
    const std::vector<Eigen::VectorXd>& features,
    const std::vector<long long>& labels, int arms) {
  if (features.size() != labels.size()) {
    throw std::invalid_argument("features and labels differ in length");
  }
  std::vector<ClassificationRow> rows;
  rows.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (labels[i] < 1 || labels[i] > arms) {
      throw ConfigError("label " + std::to_string(labels[i]) + " in row " +
                        std::to_string(i + 1) + " outside [1, " +
                        std::to_string(arms) + "]");
    }
    if (!((features[i].array() >= 0.0).all() &&
          (features[i].array() <= 1.0).all())) {
      throw ConfigError("features of row " + std::to_string(i + 1) +
                        " are outside the unit cube");
    }
    rows.push_back({features[i], static_cast<int>(labels[i] - 1)});
  }
  return rows;
}

std::vector<ClassificationRow> permute_rows(std::vector<ClassificationRow> rows,
                                            Rng& rng) {
  // Fisher-Yates with the portable index sampler.
  for (std::size_t i = rows.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(rows[i - 1], rows[j]);
  }
  return rows;
}

ClassificationStream::ClassificationStream(std::vector<ClassificationRow> rows,
                                           Rng& rng)
    : rows_(permute_rows(std::move(rows), rng)) {}

const ClassificationRow& ClassificationStream::next() {
  if (done()) throw std::out_of_range("classification stream exhausted");
  return rows_[next_++];
}

std::vector<AuxSample> classification_to_bandit(
    std::vector<ClassificationRow> rows,
    const Eigen::Ref<const Eigen::VectorXd>& behavior, Rng& rng) {
  rows = permute_rows(std::move(rows), rng);
  std::vector<AuxSample> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const int arm = sample_categorical(behavior, rng);
    out.push_back({row.features, arm, classification_reward(row, arm)});
  }
  return out;
}

}  // namespace ldpmab
