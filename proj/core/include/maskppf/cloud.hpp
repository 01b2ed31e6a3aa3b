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
#include "maskppf/image.hpp"

#include <vector>

namespace maskppf {

/// Points in meters with optional parallel arrays of unit normals and colors.
/// An optional array is either empty or the same length as `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_colors() const { return !colors.empty(); }

  /// Throws std::invalid_argument when array lengths disagree, a point is
  /// non-finite or a normal is not unit length.
  void validate() const;
};

PointCloud transform_cloud(const RigidPose& pose, const PointCloud& cloud);

/// Cloud unprojected from an image. pixel_index[i] is v * width + u of the
/// pixel that produced point i.
struct OrganizedCloud {
  PointCloud cloud;
  std::vector<int> pixel_index;
  int width = 0, height = 0;
};

struct ObjectModel {
  int object_id = 0;
  PointCloud cloud;
  double diameter = 0.0;
  /// Always contains the identity as its first element.
  std::vector<RigidPose> symmetries{RigidPose::identity()};
};

/// Maximum pairwise distance; exact up to 5000 points, otherwise over a
/// farthest-point subsample of 5000.
double cloud_diameter(const std::vector<Vec3>& points);

}  // namespace maskppf
