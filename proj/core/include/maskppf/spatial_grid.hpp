// Copyright 2026 The maskppf Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "maskppf/geom.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace maskppf {

/// Uniform hash grid over a fixed point set. Queries are exact: the grid only
/// prunes candidates.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(std::span<const Vec3> points, double cell_size);

  double cell_size() const { return cell_; }
  std::size_t size() const { return points_.size(); }

  /// Nearest point within `max_dist`; ties go to the lower index.
  std::optional<std::size_t> nearest_within(const Vec3& q, double max_dist) const;

  /// Indices of all points with distance <= radius, ascending.
  void radius_search(const Vec3& q, double radius, std::vector<std::uint32_t>& out) const;

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const {
      return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349669LL ^ k.z * 83492791LL);
    }
  };
  CellKey key_of(const Vec3& p) const;

  template <typename Fn>
  void visit(const Vec3& q, double radius, Fn&& fn) const;

  double cell_ = 1.0;
  std::vector<Vec3> points_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells_;
};

}  // namespace maskppf
