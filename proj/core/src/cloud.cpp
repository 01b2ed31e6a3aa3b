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

#include "maskppf/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace maskppf {

void PointCloud::validate() const {
  if (has_normals() && normals.size() != points.size())
    throw std::invalid_argument("point cloud: normals length differs from points");
  if (has_colors() && colors.size() != points.size())
    throw std::invalid_argument("point cloud: colors length differs from points");
  for (const Vec3& p : points)
    if (!p.allFinite()) throw std::invalid_argument("point cloud: non-finite point");
  for (const Vec3& n : normals)
    if (std::abs(n.norm() - 1.0) > 1e-6) throw std::invalid_argument("point cloud: normal not unit length");
}

PointCloud transform_cloud(const RigidPose& pose, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  const Mat3 R = pose.rotation_matrix();
  for (const Vec3& p : cloud.points) out.points.push_back(R * p + pose.translation);
  out.normals.reserve(cloud.normals.size());
  for (const Vec3& n : cloud.normals) out.normals.push_back((R * n).normalized());
  out.colors = cloud.colors;
  return out;
}

namespace {

double exact_diameter(const std::vector<Vec3>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(best);
}

}  // namespace

double cloud_diameter(const std::vector<Vec3>& points) {
  constexpr std::size_t kExactLimit = 5000;
  if (points.size() <= kExactLimit) return exact_diameter(points);

  // Farthest-point subsample seeded at index 0.
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  std::vector<Vec3> subset;
  subset.reserve(kExactLimit);
  std::size_t next = 0;
  for (std::size_t k = 0; k < kExactLimit; ++k) {
    subset.push_back(points[next]);
    const Vec3 c = points[next];
    double far = -1.0;
    std::size_t far_idx = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      dist[i] = std::min(dist[i], (points[i] - c).squaredNorm());
      if (dist[i] > far) {
        far = dist[i];
        far_idx = i;
      }
    }
    next = far_idx;
  }
  return exact_diameter(subset);
}

}  // namespace maskppf
