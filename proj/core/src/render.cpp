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

#include "maskppf/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maskppf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SplatCanvas::SplatCanvas(const CameraIntrinsics& K, Rgb background)
    : K_(K),
      color_(K.width, K.height, background),
      depth_(static_cast<std::size_t>(K.width) * K.height, kInf),
      center_dist_(depth_.size(), kInf),
      instance_(depth_.size(), -1) {}

std::size_t SplatCanvas::draw(const PointCloud& cloud, const RigidPose& pose, double splat_size, int instance,
                              Rgb fallback_color) {
  const Mat3 R = pose.rotation_matrix();
  const bool oriented = cloud.has_normals();
  const double tie_band = 0.5 * splat_size;
  const double max_offset2 = 0.25 * splat_size * splat_size;
  std::size_t in_front = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 p = R * cloud.points[i] + pose.translation;
    if (p.z() <= 1e-6) continue;
    ++in_front;
    Vec3 n = Vec3::Zero();
    if (oriented) {
      n = R * cloud.normals[i];
      if (n.dot(p) >= 0.0) continue;  // back-facing
    }
    const Eigen::Vector2d uv = K_.project(p);
    const int radius = std::max(1, static_cast<int>(std::lround(0.5 * splat_size * K_.fx / p.z())));
    const int cu = static_cast<int>(std::lround(uv.x())), cv = static_cast<int>(std::lround(uv.y()));
    if (cu + radius < 0 || cv + radius < 0 || cu - radius >= K_.width || cv - radius >= K_.height) continue;
    const Rgb col = cloud.has_colors() ? cloud.colors[i] : fallback_color;
    for (int dv = -radius; dv <= radius; ++dv) {
      const int v = cv + dv;
      if (v < 0 || v >= K_.height) continue;
      for (int du = -radius; du <= radius; ++du) {
        if (du * du + dv * dv > radius * radius) continue;
        const int u = cu + du;
        if (u < 0 || u >= K_.width) continue;
        const std::size_t idx = static_cast<std::size_t>(v) * K_.width + u;
        double z = p.z();
        double cd = (u - uv.x()) * (u - uv.x()) + (v - uv.y()) * (v - uv.y());
        if (oriented) {
          // Depth follows the tangent plane; ties go to the sample nearest the hit.
          const Vec3 ray((u - K_.cx) / K_.fx, (v - K_.cy) / K_.fy, 1.0);
          const double nd = n.dot(ray);
          if (std::abs(nd) < 1e-9) continue;
          z = n.dot(p) / nd;
          cd = (ray * z - p).squaredNorm();
          if (z <= 0.0 || cd > max_offset2) continue;
        }
        const double cur = depth_[idx];
        const bool nearer = z < cur - tie_band;
        const bool tie_closer = std::abs(z - cur) <= tie_band && cd < center_dist_[idx];
        if (nearer || tie_closer) {
          depth_[idx] = z;
          center_dist_[idx] = cd;
          instance_[idx] = instance;
          color_.pixels[idx] = col;
        }
      }
    }
  }
  return in_front;
}

void SplatCanvas::draw_plane(const Vec3& normal, double offset, int instance, Rgb color) {
  for (int v = 0; v < K_.height; ++v)
    for (int u = 0; u < K_.width; ++u) {
      const Vec3 ray((u - K_.cx) / K_.fx, (v - K_.cy) / K_.fy, 1.0);
      const double nd = normal.dot(ray);
      if (std::abs(nd) < 1e-9) continue;
      const double z = offset / nd;
      const std::size_t idx = static_cast<std::size_t>(v) * K_.width + u;
      if (z <= 0.0 || z >= depth_[idx]) continue;
      depth_[idx] = z;
      center_dist_[idx] = 0.0;
      instance_[idx] = instance;
      color_.pixels[idx] = color;
    }
}

BinaryMask SplatCanvas::footprint() const {
  BinaryMask m(K_.width, K_.height);
  for (std::size_t i = 0; i < depth_.size(); ++i) m.bits[i] = std::isfinite(depth_[i]) ? 1 : 0;
  return m;
}

BinaryMask SplatCanvas::instance_mask(int instance) const {
  BinaryMask m(K_.width, K_.height);
  for (std::size_t i = 0; i < instance_.size(); ++i) m.bits[i] = instance_[i] == instance ? 1 : 0;
  return m;
}

SplatRender splat_render(const ObjectModel& model, const RigidPose& pose, const CameraIntrinsics& K,
                         double splat_size) {
  SplatCanvas canvas(K);
  if (canvas.draw(model.cloud, pose, splat_size, 0) == 0)
    throw std::invalid_argument("splat_render: object is entirely behind the camera");
  return {canvas.color(), canvas.depth(), canvas.footprint()};
}

}  // namespace maskppf
