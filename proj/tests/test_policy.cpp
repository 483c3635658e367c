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
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "ldpmab/environments.hpp"
#include "ldpmab/errors.hpp"
#include "ldpmab/log.hpp"
#include "ldpmab/policy.hpp"

using namespace ldpmab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd pt(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

PolicyConfig small_config(int dim, int arms, double eps, std::int64_t n) {
  PolicyConfig c;
  c.dim = dim;
  c.arms = arms;
  c.target_budget = PrivacyBudget(eps);
  c.n_target = n;
  return c;
}

struct LogCapture {
  std::ostringstream out;
  std::streambuf* old;
  LogCapture() : old(std::clog.rdbuf(out.rdbuf())) {}
  ~LogCapture() { std::clog.rdbuf(old); }
};

// Target-only policy whose root cannot split; arm k pays k so arm 0 of K=2
// is eliminated once both arms pass the count gate.
LdpPolicy eliminated_root() {
  PolicyConfig c = small_config(1, 2, kInf, 100);
  c.c_conf = 0.01;
  c.max_depth = 0;
  LdpPolicy p(c, 1);
  LogCapture quiet;
  for (int i = 0; i < 60 && p.active_arms({0, 1}).size() == 2; ++i) {
    p.step_target(pt({0.5}), [](int arm) { return static_cast<double>(arm); });
  }
  return p;
}

}  // namespace

TEST_CASE("config contract") {
  PolicyConfig c = small_config(2, 3, 1.0, 10);
  CHECK_NOTHROW(c.validate());
  CHECK(c.effective_max_depth() == 16);
  c.max_depth = 100;
  CHECK(c.effective_max_depth() == 62);
  c.source_budgets.push_back(PrivacyBudget(1.0));
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.source_sizes.push_back(5);
  CHECK_NOTHROW(c.validate());
  c.c_conf = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(PolicyConfig{}.c_conf == 40.0);
}

TEST_CASE("elimination rule examples") {
  std::vector<ArmSummary> one{{0, 0.9, 0.05}};
  CHECK(eliminated_arms(one, {true}).empty());
  std::vector<ArmSummary> two{{0, 0.9, 0.05}, {1, 0.5, 0.05}};
  CHECK(eliminated_arms(two, {true, true}) == std::vector<int>{1});
  std::vector<ArmSummary> open{{0, 0.9, 0.05}, {1, 0.5, kInfiniteRadius}};
  CHECK(eliminated_arms(open, {true, usable_radius(kInfiniteRadius)}).empty());
  std::vector<ArmSummary> close{{0, 0.9, 0.05}, {1, 0.75, 0.05}};
  CHECK(eliminated_arms(close, {true, true}).empty());  // 0.8 < 0.85
}

TEST_CASE("elimination never removes every arm") {
  Rng rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    const int k = 2 + static_cast<int>(rng.uniform_index(5));
    std::vector<ArmSummary> arms;
    std::vector<bool> usable;
    for (int a = 0; a < k; ++a) {
      arms.push_back({a, rng.uniform(), rng.uniform(0.0, 0.2)});
      usable.push_back(rng.bernoulli(0.8));
    }
    const auto removed = eliminated_arms(arms, usable);
    CHECK(removed.size() < static_cast<std::size_t>(k));
    // The maximizer of the lower bound survives.
    int best = -1;
    for (int a = 0; a < k; ++a) {
      if (usable[a] && (best < 0 || arms[a].estimate - 2 * arms[a].radius >
                                        arms[best].estimate - 2 * arms[best].radius)) {
        best = a;
      }
    }
    for (int r : removed) {
      CHECK(r != best);
      CHECK(usable[r]);
    }
  }
}

TEST_CASE("refinement rule examples") {
  std::vector<ArmSummary> open{{0, 0.5, kInfiniteRadius}, {1, 0.4, kInfiniteRadius}};
  CHECK_FALSE(refinement_due(open, 0, 2));
  REQUIRE(tau(2, 1) == doctest::Approx(0.5));
  std::vector<ArmSummary> narrow{{0, 0.5, 0.1}, {1, 0.4, kInfiniteRadius}};
  CHECK(refinement_due(narrow, 2, 1));
  std::vector<ArmSummary> wide{{0, 0.5, 0.6}};
  CHECK_FALSE(refinement_due(wide, 2, 1));
}

TEST_CASE("fresh policy selects arms uniformly") {
  LdpPolicy p(small_config(2, 3, 1.0, 1000), 9);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 100000; ++i) ++counts[p.select_arm(pt({0.3, 0.6}))];
  for (int c : counts) CHECK(std::abs(c / 1e5 - 1.0 / 3.0) < 0.01);
  const Eigen::VectorXd d = p.arm_distribution(pt({0.1, 0.1}));
  CHECK(d.sum() == doctest::Approx(1.0));
}

TEST_CASE("eliminated arm is never selected") {
  LdpPolicy p = eliminated_root();
  REQUIRE(p.active_arms({0, 1}) == std::vector<int>{1});
  std::vector<StructuralEvent> elims;
  for (const auto& e : p.events()) {
    if (e.kind == EventKind::kElimination) elims.push_back(e);
  }
  REQUIRE(elims.size() == 1);
  CHECK(elims[0].detail == "arm=0");
  // Not before the count reached log^2(n).
  CHECK(static_cast<double>(elims[0].step) >= p.estimator_config().gate());
  for (int i = 0; i < 1000; ++i) CHECK(p.select_arm(pt({i / 999.0})) == 1);
  CHECK(p.arm_distribution(pt({0.2})) == pt({0.0, 1.0}));
}

TEST_CASE("refinement hands the parent's arms to both children") {
  PolicyConfig c = small_config(1, 3, kInf, 100);
  c.c_conf = 0.01;
  LdpPolicy p(c, 2);
  p.step_target(pt({0.3}), [](int) { return 1.0; });
  REQUIRE(p.tree().size() == 2);
  CHECK_FALSE(p.tree().is_active({0, 1}));
  for (const BinId& id : p.tree().active()) {
    CHECK(p.active_arms(id) == std::vector<int>{0, 1, 2});
    for (int k = 0; k < 3; ++k) CHECK(p.cell(id, k).count(0) == 0);
  }
  REQUIRE(p.events().size() == 1);
  CHECK(p.events()[0].kind == EventKind::kRefinement);
  CHECK(p.events()[0].detail == "children=1:1;1:2");
}

TEST_CASE("depth cap suppresses refinement and warns once") {
  PolicyConfig c = small_config(1, 2, kInf, 100);
  c.c_conf = 0.01;
  c.max_depth = 1;
  LdpPolicy p(c, 2);
  LogCapture log;
  for (int i = 0; i < 20; ++i) p.step_target(pt({0.3}), [](int) { return 1.0; });
  CHECK(p.tree().size() == 2);
  int caps = 0;
  for (const auto& e : p.events()) caps += e.kind == EventKind::kDepthCap ? 1 : 0;
  CHECK(caps == 1);
  CHECK(log.out.str().find("maximum depth") != std::string::npos);
}

TEST_CASE("one step touches every active cell once") {
  LdpPolicy p(small_config(2, 3, kInf, 1000), 5);
  const StepRow row = p.step_target(pt({0.2, 0.7}), [](int) { return 0.6; });
  CHECK(row.step == 1);
  CHECK(row.source == 0);
  for (int k = 0; k < 3; ++k) {
    const ArmCell& cell = p.cell({0, 1}, k);
    CHECK(cell.count(0) == 1);
    CHECK(cell.sum_u(0) == (k == row.arm ? 1.0 : 0.0));
    CHECK(cell.sum_v(0) == (k == row.arm ? 0.6 : 0.0));
  }
  CHECK(p.progress(0) == 1);
}

TEST_CASE("single arm without noise tracks the running mean of each bin") {
  PolicyConfig c = small_config(2, 1, kInf, 3000);
  c.c_conf = 0.5;
  LdpPolicy p(c, 7);
  Rng env(8);
  struct Obs {
    Eigen::VectorXd x;
    double reward;
    std::int64_t step;
  };
  std::vector<Obs> history;
  for (int t = 0; t < 3000; ++t) {
    const Eigen::VectorXd x = sample_target_context(2, env);
    const double r = env.uniform();
    const StepRow row = p.step_target(x, [&](int) { return r; });
    history.push_back({x, r, row.step});
  }
  // A bin collects the rewards of contexts inside it after its creation step.
  std::map<BinId, std::int64_t> born{{BinId{0, 1}, 0}};
  for (const auto& e : p.events()) {
    if (e.kind != EventKind::kRefinement) continue;
    born[e.bin.lower_child()] = e.step;
    born[e.bin.upper_child()] = e.step;
  }
  REQUIRE(p.tree().size() > 4);
  for (const BinId& id : p.tree().active()) {
    double sum = 0;
    int n = 0;
    for (const auto& h : history) {
      if (h.step > born.at(id) && p.tree().geometry(id).contains(h.x)) {
        sum += h.reward;
        ++n;
      }
    }
    const double mean = n ? sum / n : 0.0;
    CHECK(estimate(p.cell(id, 0), Eigen::VectorXd::Ones(1)) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(p.cell(id, 0).sum_u(0) == n);
  }
}

TEST_CASE("message scope matches the partition and arm sets") {
  PolicyConfig c = small_config(2, 3, 2.0, 4000);
  c.c_conf = 0.5;
  LdpPolicy p(c, 21);
  Rng env(4);
  SyntheticEnvSpec spec;
  for (int t = 0; t < 4000; ++t) {
    const Eigen::VectorXd x = sample_target_context(2, env);
    p.step_target(x, [&](int a) { return draw_reward(a, x, spec, env); });
    if (t % 97 != 0) continue;
    const MessageScope scope = p.scope();
    REQUIRE(scope.size() == p.tree().size());
    std::size_t keys = 0;
    for (std::size_t i = 0; i < scope.size(); ++i) {
      CHECK(scope[i].bin == p.tree().active()[i]);
      CHECK(scope[i].arms == p.active_arms(scope[i].bin));
      CHECK_FALSE(scope[i].arms.empty());
      keys += scope[i].arms.size();
    }
    CHECK(keys == p.total_active_arms());
  }
}

TEST_CASE("seeded runs replay exactly") {
  auto once = [] {
    LdpPolicy p(small_config(1, 2, 1.0, 500), 99);
    Rng env(100);
    SyntheticEnvSpec spec;
    spec.d = 1;
    spec.arms = 2;
    RunSchedule s;
    s.n_target = 500;
    return run(p, s, [&] { return sample_target_context(1, env); },
               [&](const Eigen::VectorXd& x, int a) { return draw_reward(a, x, spec, env); });
  };
  const RunRecord a = once();
  const RunRecord b = once();
  REQUIRE(a.size() == 500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].arm == b[i].arm);
    CHECK(a[i].reward == b[i].reward);
    CHECK(a[i].n_bins == b[i].n_bins);
    CHECK(a[i].n_active_arms_total == b[i].n_active_arms_total);
  }
}

TEST_CASE("auxiliary step contracts") {
  PolicyConfig c = small_config(1, 2, 1.0, 10);
  c.source_budgets = {PrivacyBudget(8.0), PrivacyBudget(8.0)};
  c.source_sizes = {2, 2};
  LdpPolicy p(c, 1);
  CHECK_THROWS_AS(p.step_aux(1, pt({0.5}), 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(p.step_aux(3, pt({0.5}), 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(p.step_aux(0, pt({0.5}), 0, 1.0), std::invalid_argument);
  p.step_aux(2, pt({0.5}), 0, 1.0);
  CHECK_THROWS_AS(p.step_aux(1, pt({0.5}), 0, 1.0), ContractViolation);
  p.step_aux(2, pt({0.5}), 1, 0.0);
  CHECK_THROWS_AS(p.step_aux(2, pt({0.5}), 1, 0.0), ContractViolation);
  p.step_target(pt({0.4}), [](int) { return 0.0; });
  CHECK_THROWS_AS(p.step_aux(2, pt({0.5}), 1, 0.0), ContractViolation);
}

TEST_CASE("auxiliary records with inactive arms are absorbed") {
  PolicyConfig c = small_config(1, 2, 1.0, 50);
  c.source_budgets = {PrivacyBudget::non_private()};
  c.source_sizes = {400};
  c.c_conf = 0.01;
  c.max_depth = 0;
  LdpPolicy p(c, 3);
  LogCapture quiet;
  int i = 0;
  while (p.active_arms({0, 1}).size() == 2 && i < 200) {
    const int arm = i++ % 2;
    p.step_aux(1, pt({0.5}), arm, static_cast<double>(arm));
  }
  REQUIRE(p.active_arms({0, 1}) == std::vector<int>{1});
  const ArmCell before = p.cell({0, 1}, 1);
  CHECK_NOTHROW(p.step_aux(1, pt({0.5}), 0, 1.0));
  const ArmCell& after = p.cell({0, 1}, 1);
  CHECK(after.sum_u(1) == before.sum_u(1));
  CHECK(after.sum_v(1) == before.sum_v(1));
  CHECK(after.count(1) == before.count(1) + 1);
  // The target still cannot pull an eliminated arm.
  CHECK(p.select_arm(pt({0.5})) == 1);
}

TEST_CASE("empty auxiliary batch leaves the policy fresh") {
  PolicyConfig c = small_config(2, 3, 1.0, 100);
  c.source_budgets = {PrivacyBudget(8.0)};
  c.source_sizes = {0};
  LdpPolicy p(c, 4);
  const std::vector<AuxSample> none;
  RunSchedule s;
  s.auxiliary = {{1, &none}};
  run(p, s, [] { return Eigen::VectorXd(); }, [](const Eigen::VectorXd&, int) { return 0.0; });
  CHECK(p.step() == 0);
  CHECK(p.tree().size() == 1);
  CHECK(p.events().empty());
  for (int k = 0; k < 3; ++k) {
    CHECK(p.cell({0, 1}, k).count(0) == 0);
    CHECK(p.cell({0, 1}, k).count(1) == 0);
  }
}

TEST_CASE("progress counters follow the schedule") {
  PolicyConfig c = small_config(1, 2, 1.0, 4);
  c.source_budgets = {PrivacyBudget(2.0), PrivacyBudget(4.0)};
  c.source_sizes = {3, 5};
  LdpPolicy p(c, 6);
  std::vector<AuxSample> a(3, AuxSample{pt({0.1}), 0, 1.0});
  std::vector<AuxSample> b(5, AuxSample{pt({0.9}), 1, 0.0});
  RunSchedule s;
  s.auxiliary = {{1, &a}, {2, &b}};
  s.n_target = 4;
  std::vector<int> sources;
  run(p, s, [] { return pt({0.5}); }, [](const Eigen::VectorXd&, int) { return 1.0; },
      [&](const LdpPolicy&, const StepRow& row) { sources.push_back(row.source); });
  CHECK(p.progress(1) == 3);
  CHECK(p.progress(2) == 5);
  CHECK(p.progress(0) == 4);
  CHECK(p.step() == 12);
  CHECK(sources == std::vector<int>{1, 1, 1, 2, 2, 2, 2, 2, 0, 0, 0, 0});
}

TEST_CASE("run without auxiliary data equals plain target stepping") {
  const PolicyConfig c = small_config(2, 3, 1.0, 300);
  LdpPolicy a(c, 12), b(c, 12);
  Rng ea(5), eb(5);
  SyntheticEnvSpec spec;
  RunSchedule s;
  s.n_target = 300;
  const RunRecord ra = run(a, s, [&] { return sample_target_context(2, ea); },
                           [&](const Eigen::VectorXd& x, int k) { return draw_reward(k, x, spec, ea); });
  for (int t = 0; t < 300; ++t) {
    const Eigen::VectorXd x = sample_target_context(2, eb);
    const StepRow row = b.step_target(x, [&](int k) { return draw_reward(k, x, spec, eb); });
    CHECK(row.arm == ra[static_cast<std::size_t>(t)].arm);
    CHECK(row.reward == ra[static_cast<std::size_t>(t)].reward);
  }
  CHECK(a.events().size() == b.events().size());
}

TEST_CASE("jump-start brings structural events forward") {
  SyntheticEnvSpec spec;
  int more = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PolicyConfig c = small_config(2, 3, 1.0, 1000);
    c.source_budgets = {PrivacyBudget(8.0)};
    c.source_sizes = {500};
    LdpPolicy p(c, seed);
    Rng rng(1000 + seed);
    SourceSpec src;
    src.gamma = 0.0;
    src.kappa = 1.0;
    src.epsilon = PrivacyBudget(8.0);
    src.n = 500;
    const auto data = gen_aux_dataset(src, spec, rng);
    RunSchedule s;
    s.auxiliary = {{1, &data}};
    run(p, s, [] { return Eigen::VectorXd(); }, [](const Eigen::VectorXd&, int) { return 0.0; });
    // Without auxiliary data no event can precede the target phase.
    more += p.events().size() > 0 ? 1 : 0;
  }
  CHECK(more >= 40);
}

TEST_CASE("auxiliary order matters") {
  SyntheticEnvSpec spec;
  Rng rng(77);
  SourceSpec s1{0.0, 1.0, PrivacyBudget(8.0), 800};
  SourceSpec s2{2.0, 0.3, PrivacyBudget(2.0), 800};
  const auto d1 = gen_aux_dataset(s1, spec, rng);
  const auto d2 = gen_aux_dataset(s2, spec, rng);
  auto go = [&](bool swap) {
    PolicyConfig c = small_config(2, 3, 1.0, 2000);
    c.source_budgets = swap ? std::vector{PrivacyBudget(2.0), PrivacyBudget(8.0)}
                            : std::vector{PrivacyBudget(8.0), PrivacyBudget(2.0)};
    c.source_sizes = {800, 800};
    LdpPolicy p(c, 5);
    Rng env(6);
    RunSchedule s;
    s.auxiliary = swap ? std::vector<AuxBatch>{{1, &d2}, {2, &d1}}
                       : std::vector<AuxBatch>{{1, &d1}, {2, &d2}};
    s.n_target = 2000;
    return run(p, s, [&] { return sample_target_context(2, env); },
               [&](const Eigen::VectorXd& x, int k) { return draw_reward(k, x, spec, env); });
  };
  const RunRecord a = go(false);
  const RunRecord b = go(true);
  bool differ = false;
  for (std::size_t i = 1600; i < a.size(); ++i) {
    differ = differ || a[i].arm != b[i].arm || a[i].n_bins != b[i].n_bins;
  }
  CHECK(differ);
}
