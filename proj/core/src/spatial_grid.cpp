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

#include "maskppf/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maskppf {

SpatialGrid::SpatialGrid(std::span<const Vec3> points, double cell_size)
    : cell_(cell_size), points_(points.begin(), points.end()) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("SpatialGrid: cell size must be positive");
  for (std::size_t i = 0; i < points_.size(); ++i) cells_[key_of(points_[i])].push_back(static_cast<std::uint32_t>(i));
}

SpatialGrid::CellKey SpatialGrid::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

template <typename Fn>
void SpatialGrid::visit(const Vec3& q, double radius, Fn&& fn) const {
  const CellKey lo = key_of(q - Vec3::Constant(radius));
  const CellKey hi = key_of(q + Vec3::Constant(radius));
  for (std::int64_t x = lo.x; x <= hi.x; ++x)
    for (std::int64_t y = lo.y; y <= hi.y; ++y)
      for (std::int64_t z = lo.z; z <= hi.z; ++z) {
        const auto it = cells_.find({x, y, z});
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) fn(i);
      }
}

std::optional<std::size_t> SpatialGrid::nearest_within(const Vec3& q, double max_dist) const {
  double best = max_dist * max_dist;
  std::optional<std::size_t> best_i;
  visit(q, max_dist, [&](std::uint32_t i) {
    const double d = (points_[i] - q).squaredNorm();
    if (d < best || (d == best && (!best_i || i < *best_i))) {
      best = d;
      best_i = i;
    }
  });
  return best_i;
}

void SpatialGrid::radius_search(const Vec3& q, double radius, std::vector<std::uint32_t>& out) const {
  out.clear();
  const double r2 = radius * radius;
  visit(q, radius, [&](std::uint32_t i) {
    if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
  });
  std::sort(out.begin(), out.end());
}

}  // namespace maskppf
