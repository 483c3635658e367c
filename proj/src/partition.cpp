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
#include "ldpmab/partition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ldpmab/errors.hpp"

namespace ldpmab {

std::string BinId::str() const {
  return std::to_string(depth) + ":" + std::to_string(index);
}

double DyadicInterval::lower() const {
  return std::ldexp(static_cast<double>(numerator), -level);
}

double DyadicInterval::upper() const {
  return std::ldexp(static_cast<double>(numerator + 1), -level);
}

double DyadicInterval::length() const { return std::ldexp(1.0, -level); }

std::uint64_t dyadic_cell(double x, int level) {
  const std::uint64_t cells = std::uint64_t{1} << level;
  // Scaling by a power of two is exact, so floor() gives the exact cell.
  const auto cell = static_cast<std::uint64_t>(std::floor(std::ldexp(x, level)));
  return std::min(cell, cells - 1);
}

BinGeometry BinGeometry::unit_cube(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  BinGeometry g;
  g.edges_.assign(static_cast<std::size_t>(dim), DyadicInterval{});
  return g;
}

int BinGeometry::depth() const {
  int s = 0;
  for (const auto& e : edges_) s += e.level;
  return s;
}

double BinGeometry::volume() const { return std::ldexp(1.0, -depth()); }

double BinGeometry::diameter() const {
  double sq = 0.0;
  for (const auto& e : edges_) sq += e.length() * e.length();
  return std::sqrt(sq);
}

bool BinGeometry::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    const double v = x[k];
    if (!(v >= 0.0 && v <= 1.0)) return false;
    if (dyadic_cell(v, edges_[k].level) != edges_[k].numerator) return false;
  }
  return true;
}

std::vector<int> BinGeometry::longest_edges() const {
  int min_level = edges_.front().level;
  for (const auto& e : edges_) min_level = std::min(min_level, e.level);
  std::vector<int> dims;
  for (int k = 0; k < dim(); ++k) {
    if (edges_[k].level == min_level) dims.push_back(k);
  }
  return dims;
}

std::pair<BinGeometry, BinGeometry> BinGeometry::split(int k) const {
  if (k < 0 || k >= dim()) throw std::out_of_range("split dimension");
  BinGeometry lo = *this;
  BinGeometry hi = *this;
  const DyadicInterval& e = edges_[k];
  lo.edges_[k] = {2 * e.numerator, e.level + 1};
  hi.edges_[k] = {2 * e.numerator + 1, e.level + 1};
  return {std::move(lo), std::move(hi)};
}

MaxEdgeSplit max_edge_split(const BinGeometry& geometry, Rng& rng) {
  const std::vector<int> candidates = geometry.longest_edges();
  const int k = candidates.size() == 1
                    ? candidates.front()
                    : candidates[rng.uniform_index(candidates.size())];
  auto [lo, hi] = geometry.split(k);
  return {k, std::move(lo), std::move(hi)};
}

double tau(int depth, int dim) {
  return 2.0 * std::sqrt(static_cast<double>(dim)) *
         std::exp2(-static_cast<double>(depth) / dim);
}

PartitionTree::PartitionTree(int dim, std::uint64_t tie_break_seed)
    : dim_(dim), tie_break_(tie_break_seed) {
  nodes_.push_back({BinId{0, 1}, BinGeometry::unit_cube(dim)});
  index_.emplace(BinId{0, 1}, 0);
  active_.push_back(BinId{0, 1});
}

const PartitionTree::Node& PartitionTree::node(const BinId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ContractViolation("unknown bin " + id.str());
  }
  return nodes_[it->second];
}

bool PartitionTree::is_active(const BinId& id) const {
  return std::binary_search(active_.begin(), active_.end(), id);
}

const BinGeometry& PartitionTree::geometry(const BinId& id) const {
  return node(id).geometry;
}

std::optional<BinId> PartitionTree::parent(const BinId& id) const {
  const Node& n = node(id);
  if (n.parent < 0) return std::nullopt;
  return nodes_[n.parent].id;
}

BinId PartitionTree::locate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("point dimension does not match partition");
  }
  for (int k = 0; k < dim_; ++k) {
    if (!(x[k] >= 0.0 && x[k] <= 1.0)) {
      throw std::invalid_argument("point outside [0,1]^d");
    }
  }
  int cur = 0;
  while (nodes_[cur].lower >= 0) {
    const Node& n = nodes_[cur];
    const DyadicInterval& child_edge =
        nodes_[n.lower].geometry.edge(n.split_dim);
    cur = dyadic_cell(x[n.split_dim], child_edge.level) == child_edge.numerator
              ? n.lower
              : n.upper;
  }
  return nodes_[cur].id;
}

std::pair<BinId, BinId> PartitionTree::refine(const BinId& id) {
  if (!is_active(id)) {
    throw ContractViolation("refine: bin " + id.str() + " is not active");
  }
  if (id.depth >= kHardDepthLimit) {
    throw ContractViolation("refine: depth limit reached at " + id.str());
  }
  const int parent_idx = index_.at(id);
  MaxEdgeSplit split = max_edge_split(nodes_[parent_idx].geometry, tie_break_);

  const BinId lo_id = id.lower_child();
  const BinId hi_id = id.upper_child();
  const int lo_idx = static_cast<int>(nodes_.size());
  nodes_.push_back({lo_id, std::move(split.lower), parent_idx});
  nodes_.push_back({hi_id, std::move(split.upper), parent_idx});
  index_.emplace(lo_id, lo_idx);
  index_.emplace(hi_id, lo_idx + 1);

  Node& parent = nodes_[parent_idx];
  parent.lower = lo_idx;
  parent.upper = lo_idx + 1;
  parent.split_dim = split.dimension;

  active_.erase(std::lower_bound(active_.begin(), active_.end(), id));
  active_.insert(std::lower_bound(active_.begin(), active_.end(), lo_id),
                 lo_id);
  active_.insert(std::lower_bound(active_.begin(), active_.end(), hi_id),
                 hi_id);
  return {lo_id, hi_id};
}

}  // namespace ldpmab
