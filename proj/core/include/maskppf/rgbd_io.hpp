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

// Loading of BOP-layout scenes, PLY models and masks, and the conversion of
// depth images into oriented point clouds. Files use millimeters; everything
// returned from here is in meters.

#include "maskppf/cloud.hpp"
#include "maskppf/geom.hpp"
#include "maskppf/image.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

namespace maskppf {

/// Reads x/y/z (mm) and optional nx/ny/nz and red/green/blue from an ASCII or
/// binary little-endian PLY. Only the vertex element is consumed; face
/// elements that follow it are ignored. Throws std::runtime_error.
ObjectModel load_ply(const std::filesystem::path& path, int object_id = 0);

enum class PlyFormat { kAscii, kBinaryLittleEndian };
/// Writes points (converted to mm) with normals and colors when present.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyFormat format = PlyFormat::kBinaryLittleEndian);

struct SceneFrame {
  DepthMap depth;
  std::optional<ColorImage> rgb;
  CameraIntrinsics camera;
};

/// Loads <scene_dir>/scene_camera.json[image_id] and the matching depth/ and
/// rgb/ PNGs. Throws std::runtime_error on a missing id, malformed JSON or a
/// size mismatch between images and intrinsics.
SceneFrame load_scene(const std::filesystem::path& scene_dir, int image_id);

/// Image ids listed in scene_camera.json, ascending.
std::vector<int> list_scene_images(const std::filesystem::path& scene_dir);

struct GtInstance {
  int object_id = 0;
  RigidPose pose;
};
/// scene_gt.json: image id -> instances (t converted to meters).
std::map<int, std::vector<GtInstance>> load_scene_gt(const std::filesystem::path& path);

/// Per-object entries of models_info.json. Symmetries include the identity;
/// continuous symmetries are discretized into `continuous_steps` rotations.
struct ModelInfo {
  double diameter = 0.0;  // meters
  std::vector<RigidPose> symmetries{RigidPose::identity()};
};
std::map<int, ModelInfo> load_models_info(const std::filesystem::path& path, int continuous_steps = 36);

/// Rotations about `axis` through `offset`, at k * 2pi / steps for k in [0, steps).
std::vector<RigidPose> discretize_continuous_symmetry(const Vec3& axis, const Vec3& offset, int steps);

/// Loads <dir>/obj_XXXXXX.ply and fills diameter and symmetries from
/// <dir>/models_info.json when that file exists.
ObjectModel load_object_model(const std::filesystem::path& models_dir, int object_id);

/// Back-projects every pixel with raw > 0 (and inside `mask`, when given).
/// Throws std::invalid_argument if the mask size differs from the depth.
OrganizedCloud unproject_depth(const DepthMap& depth, const CameraIntrinsics& K,
                               const BinaryMask* mask = nullptr);

/// Plane fit over a 5x5 pixel window. Neighbors whose depth differs from the
/// center by more than 2% are ignored; points with fewer than 6 usable
/// neighbors are dropped. Normals are oriented toward the camera (n . p < 0).
OrganizedCloud estimate_normals(const DepthMap& depth, const CameraIntrinsics& K,
                                const OrganizedCloud& organized);

/// One point per occupied voxel: centroid position, renormalized mean normal
/// and mean color. Voxels are emitted in ascending (x, y, z) grid order.
PointCloud voxel_downsample(const PointCloud& cloud, double step);

/// Dilation by the disk {dx^2 + dy^2 <= r^2}.
BinaryMask dilate_mask(const BinaryMask& mask, int radius);

}  // namespace maskppf
