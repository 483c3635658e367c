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
#include <set>

#include "doctest.h"
#include "ldpmab/errors.hpp"
#include "ldpmab/partition.hpp"

using namespace ldpmab;

namespace {

Eigen::VectorXd pt(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

// Oracle: the active bins whose box holds x, by direct interval tests.
std::vector<BinId> scan(const PartitionTree& tree, const Eigen::VectorXd& x) {
  std::vector<BinId> hits;
  for (const BinId& id : tree.active()) {
    const BinGeometry& g = tree.geometry(id);
    bool in = true;
    for (int k = 0; k < g.dim(); ++k) {
      const double lo = g.edge(k).lower();
      const double hi = g.edge(k).upper();
      const bool closed = hi == 1.0;
      in = in && x[k] >= lo && (x[k] < hi || (closed && x[k] == 1.0));
    }
    if (in) hits.push_back(id);
  }
  return hits;
}

}  // namespace

TEST_CASE("split along the unique longest edge") {
  const auto [a, b] = BinGeometry::unit_cube(2).split(1);  // [0,1) x [0,0.5) below
  Rng rng(1);
  const auto s = max_edge_split(a, rng);
  CHECK(s.dimension == 0);
  CHECK(s.lower.edge(0).upper() == 0.5);
  CHECK(s.lower.edge(1).upper() == 0.5);
  CHECK(s.upper.edge(0).lower() == 0.5);
  CHECK(s.upper.edge(1).upper() == 0.5);
  (void)b;
}

TEST_CASE("tie between edges is broken by the rng") {
  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    Rng rng(seed);
    const std::uint64_t before = Rng(seed).next();
    const auto s = max_edge_split(BinGeometry::unit_cube(2), rng);
    seen.insert(s.dimension);
    CHECK(rng.next() != before);  // a draw was consumed
    const int k = s.dimension;
    CHECK(s.lower.edge(k).upper() == 0.5);
    CHECK(s.upper.edge(k).lower() == 0.5);
    CHECK(s.lower.edge(1 - k).length() == 1.0);
  }
  CHECK(seen == std::set<int>{0, 1});
}

TEST_CASE("no draw is consumed without a tie") {
  const auto half = BinGeometry::unit_cube(2).split(0).first;
  Rng a(9), b(9);
  max_edge_split(half, a);
  CHECK(a.next() == b.next());
}

TEST_CASE("two splits of the square give four quarters on every branch") {
  // Enumerate both tie-break choices at each level.
  for (int first = 0; first < 2; ++first) {
    const auto [lo, hi] = BinGeometry::unit_cube(2).split(first);
    for (const auto& child : {lo, hi}) {
      Rng rng(3);
      const auto s = max_edge_split(child, rng);
      CHECK(s.lower.volume() == 0.25);
      CHECK(s.upper.volume() == 0.25);
      CHECK(s.dimension == 1 - first);
    }
  }
}

TEST_CASE("locate in the four-quadrant tree") {
  PartitionTree tree(2, 1);
  const auto [a, b] = tree.refine(tree.active()[0]);
  tree.refine(a);
  tree.refine(b);
  REQUIRE(tree.size() == 4);
  const BinId q = tree.locate(pt({0.25, 0.75}));
  const BinGeometry& g = tree.geometry(q);
  CHECK(g.edge(0).lower() == 0.0);
  CHECK(g.edge(0).upper() == 0.5);
  CHECK(g.edge(1).lower() == 0.5);
  CHECK(g.edge(1).upper() == 1.0);

  const BinGeometry& corner = tree.geometry(tree.locate(pt({1.0, 1.0})));
  CHECK(corner.edge(0).lower() == 0.5);
  CHECK(corner.edge(1).lower() == 0.5);
}

TEST_CASE("locate rejects points outside the cube") {
  PartitionTree tree(2, 1);
  CHECK_THROWS_AS(tree.locate(pt({1.5, 0.2})), std::invalid_argument);
  CHECK_THROWS_AS(tree.locate(pt({-0.1, 0.2})), std::invalid_argument);
  CHECK_THROWS_AS(tree.locate(pt({0.2})), std::invalid_argument);
  CHECK_THROWS_AS(tree.locate(pt({std::nan(""), 0.2})), std::invalid_argument);
}

TEST_CASE("refine bookkeeping") {
  PartitionTree tree(3, 4);
  const BinId root = tree.active()[0];
  tree.refine(root);
  CHECK(tree.size() == 2);
  CHECK_FALSE(tree.is_active(root));
  CHECK_THROWS_AS(tree.refine(root), ContractViolation);
  for (const BinId& id : std::vector<BinId>(tree.active())) tree.refine(id);
  CHECK(tree.size() == 4);
  double vol = 0.0;
  for (const BinId& id : tree.active()) vol += tree.geometry(id).volume();
  CHECK(vol == 1.0);
}

TEST_CASE("children ids and parents") {
  PartitionTree tree(2, 2);
  const auto [lo, hi] = tree.refine({0, 1});
  CHECK(lo == BinId{1, 1});
  CHECK(hi == BinId{1, 2});
  const auto [a, b] = tree.refine(hi);
  CHECK(a == BinId{2, 3});
  CHECK(b == BinId{2, 4});
  CHECK(tree.parent(a) == hi);
  CHECK_FALSE(tree.parent({0, 1}).has_value());
  CHECK(tree.geometry(a).depth() == 2);
}

TEST_CASE("tau values") {
  CHECK(tau(0, 2) == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(tau(2, 2) == doctest::Approx(1.414214).epsilon(1e-6));
  CHECK(tau(3, 3) == doctest::Approx(1.732051).epsilon(1e-6));
}

TEST_CASE("dyadic cell of the upper face") {
  CHECK(dyadic_cell(1.0, 3) == 7);
  CHECK(dyadic_cell(0.0, 3) == 0);
  CHECK(dyadic_cell(0.5, 1) == 1);
  CHECK(dyadic_cell(0.4999999, 1) == 0);
}

TEST_CASE("random refinement sequences against the linear scan") {
  Rng rng(77);
  for (int seq = 0; seq < 60; ++seq) {
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    PartitionTree tree(d, rng.next());
    const int n = static_cast<int>(rng.uniform_index(80));
    for (int i = 0; i < n; ++i) {
      const auto& act = tree.active();
      tree.refine(act[rng.uniform_index(act.size())]);
    }
    CHECK(tree.size() == static_cast<std::size_t>(n + 1));
    double vol = 0.0;
    for (const BinId& id : tree.active()) {
      const BinGeometry& g = tree.geometry(id);
      vol += g.volume();
      CHECK(g.diameter() <= tau(id.depth, d) + 1e-12);
      CHECK(g.depth() == id.depth);
    }
    CHECK(std::abs(vol - 1.0) <= 1e-12);
    CHECK(std::is_sorted(tree.active().begin(), tree.active().end()));
    for (int p = 0; p < 200; ++p) {
      Eigen::VectorXd x(d);
      for (int k = 0; k < d; ++k) {
        const double u = rng.uniform();
        x[k] = u < 0.15 ? 1.0 : u < 0.4 ? static_cast<double>(rng.uniform_index(33)) / 32.0
                                        : rng.uniform();
      }
      const auto hits = scan(tree, x);
      REQUIRE(hits.size() == 1);
      CHECK(tree.locate(x) == hits[0]);
      CHECK(tree.geometry(hits[0]).contains(x));
    }
  }
}

TEST_CASE("max-edge children stay as cubic as possible") {
  // Edge lengths within a bin differ by at most a factor of two.
  Rng rng(5);
  PartitionTree tree(3, 11);
  for (int i = 0; i < 200; ++i) {
    const auto& act = tree.active();
    tree.refine(act[rng.uniform_index(act.size())]);
  }
  for (const BinId& id : tree.active()) {
    const BinGeometry& g = tree.geometry(id);
    int lo = 1000, hi = -1;
    for (int k = 0; k < 3; ++k) {
      lo = std::min(lo, g.edge(k).level);
      hi = std::max(hi, g.edge(k).level);
    }
    CHECK(hi - lo <= 1);
  }
}
