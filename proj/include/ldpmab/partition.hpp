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
#ifndef LDPMAB_PARTITION_HPP_
#define LDPMAB_PARTITION_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ldpmab/rng.hpp"

namespace ldpmab {

// Depth s and 1-based index j within the level, j in [1, 2^s].
struct BinId {
  int depth = 0;
  std::uint64_t index = 1;

  auto operator<=>(const BinId&) const = default;

  BinId lower_child() const { return {depth + 1, 2 * index - 1}; }
  BinId upper_child() const { return {depth + 1, 2 * index}; }
  std::string str() const;
};

// [numerator / 2^level, (numerator + 1) / 2^level)
struct DyadicInterval {
  std::uint64_t numerator = 0;
  int level = 0;

  double lower() const;
  double upper() const;
  double length() const;

  bool operator==(const DyadicInterval&) const = default;
};

// Axis-aligned dyadic box in [0,1]^d stored exactly. Upper faces lying on
// coordinate 1 are closed so the active partition covers the whole cube.
class BinGeometry {
 public:
  static BinGeometry unit_cube(int dim);

  int dim() const { return static_cast<int>(edges_.size()); }
  const DyadicInterval& edge(int k) const { return edges_[k]; }

  // Sum of per-dimension levels; equals the bin depth.
  int depth() const;
  double volume() const;
  double diameter() const;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Dimensions attaining the maximal edge length, ascending.
  std::vector<int> longest_edges() const;

  // Halves along dimension k: first is the lower half.
  std::pair<BinGeometry, BinGeometry> split(int k) const;

  bool operator==(const BinGeometry&) const = default;

 private:
  std::vector<DyadicInterval> edges_;
};

// Max-edge rule: split at the midpoint of a longest edge, chosen uniformly at
// random when several tie. A draw is consumed only when there is a tie.
struct MaxEdgeSplit {
  int dimension;
  BinGeometry lower;
  BinGeometry upper;
};
MaxEdgeSplit max_edge_split(const BinGeometry& geometry, Rng& rng);

// Approximation-error surrogate 2 sqrt(d) 2^(-s/d) for a bin at depth s.
double tau(int depth, int dim);

// Cell index of coordinate x at the given dyadic level, with x == 1 mapped to
// the last cell.
std::uint64_t dyadic_cell(double x, int level);

// Dynamic dyadic partition of [0,1]^d. Single writer; const methods are safe
// to call concurrently between mutations.
class PartitionTree {
 public:
  static constexpr int kHardDepthLimit = 62;

  PartitionTree(int dim, std::uint64_t tie_break_seed);

  int dim() const { return dim_; }

  // Active bins in ascending (depth, index) order.
  const std::vector<BinId>& active() const { return active_; }
  std::size_t size() const { return active_.size(); }

  bool is_active(const BinId& id) const;
  bool contains(const BinId& id) const { return index_.count(id) > 0; }
  const BinGeometry& geometry(const BinId& id) const;
  std::optional<BinId> parent(const BinId& id) const;

  // Unique active bin containing x. Throws std::invalid_argument when x is not
  // a point of [0,1]^d.
  BinId locate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Replaces an active bin by its two max-edge children (lower, upper).
  // Throws ContractViolation if id is not active.
  std::pair<BinId, BinId> refine(const BinId& id);

 private:
  struct Node {
    BinId id;
    BinGeometry geometry;
    int parent = -1;
    int lower = -1;
    int upper = -1;
    int split_dim = -1;
  };

  const Node& node(const BinId& id) const;

  int dim_;
  Rng tie_break_;
  std::vector<Node> nodes_;
  std::map<BinId, int> index_;
  std::vector<BinId> active_;
};

}  // namespace ldpmab

#endif  // LDPMAB_PARTITION_HPP_
