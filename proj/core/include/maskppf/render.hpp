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

#include "maskppf/cloud.hpp"
#include "maskppf/geom.hpp"
#include "maskppf/image.hpp"

#include <limits>
#include <vector>

namespace maskppf {

/// Z-buffered point-splat canvas. Each point covers a disk of
/// max(1, round(0.5 * splat_size * fx / z)) pixels radius. With normals, the
/// depth inside a disk follows the point's tangent plane; coverage between
/// splats at nearly the same depth goes to the splat whose center is closest,
/// so flat textured surfaces keep crisp color boundaries.
class SplatCanvas {
 public:
  SplatCanvas(const CameraIntrinsics& K, Rgb background = {0, 0, 0});

  /// Draws `cloud` posed by `pose`; covered pixels record `instance`.
  /// Returns the number of points in front of the camera.
  std::size_t draw(const PointCloud& cloud, const RigidPose& pose, double splat_size, int instance,
                   Rgb fallback_color = {200, 200, 200});

  /// Fills every pixel whose ray hits the plane n . x = offset (camera frame)
  /// in front of the current depth. Pixels record `instance`.
  void draw_plane(const Vec3& normal, double offset, int instance, Rgb color);

  const CameraIntrinsics& camera() const { return K_; }
  const ColorImage& color() const { return color_; }
  const std::vector<double>& depth() const { return depth_; }  // +inf where empty
  const std::vector<int>& instance() const { return instance_; }  // -1 where empty

  BinaryMask footprint() const;
  BinaryMask instance_mask(int instance) const;

 private:
  CameraIntrinsics K_;
  ColorImage color_;
  std::vector<double> depth_;
  std::vector<double> center_dist_;
  std::vector<int> instance_;
};

struct SplatRender {
  ColorImage color;
  std::vector<double> depth;  // meters, +inf = empty
  BinaryMask footprint;
};

/// Renders one colored model. Throws std::invalid_argument when every point
/// lies behind the camera.
SplatRender splat_render(const ObjectModel& model, const RigidPose& pose, const CameraIntrinsics& K,
                         double splat_size);

}  // namespace maskppf
