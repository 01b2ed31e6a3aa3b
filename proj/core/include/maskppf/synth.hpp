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

// Ground-truth factory: procedural object models, rendered RGB-D scenes in
// the BOP layout, and cut-paste training composites.

#include "maskppf/cloud.hpp"
#include "maskppf/eval.hpp"
#include "maskppf/geom.hpp"
#include "maskppf/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace maskppf {

/// Independent 64-bit stream for item `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

// --- procedural models (meters, centered at the origin) ---

/// Box surface sampled on a grid of `spacing`. With `texture_seed`, each face
/// gets its own random pattern of colored tiles; otherwise each face gets a
/// flat color. Symmetries: the three half-turns (all 24 rotations for a cube).
ObjectModel make_box_model(int object_id, const Vec3& size, double spacing,
                           std::optional<std::uint64_t> texture_seed = std::nullopt);

/// Capped cylinder along +z. Symmetries: `continuous_steps` rotations about z
/// times the flip about x.
ObjectModel make_cylinder_model(int object_id, double radius, double height, double spacing,
                                int continuous_steps = 36);

/// Union of two boxes forming an L; no symmetries besides the identity.
ObjectModel make_l_block_model(int object_id, double spacing);

/// Every rotation mapping an axis-aligned cube onto itself (24).
std::vector<RigidPose> cube_symmetries();

// --- scenes ---

struct PlaneSpec {
  Vec3 normal = Vec3(0, 0, -1);  // camera frame
  double offset = -2.0;          // plane: normal . x = offset
  Rgb color = {128, 128, 128};
};

struct SceneSpec {
  std::vector<ObjectModel> models;
  int n_objects = 1;
  CameraIntrinsics camera;
  double depth_noise = 0.0;  // meters (sigma)
  std::uint64_t seed = 0;
  std::optional<PlaneSpec> plane;
  double splat_size = 0.003;  // world-space splat diameter for rendering
  double min_z = 0.5, max_z = 1.5;
  Rgb background = {30, 30, 30};

  void validate() const;
};

struct GtObject {
  int object_id = 0;
  std::size_t model_index = 0;
  RigidPose pose;
  BinaryMask mask;
  double visibility = 0.0;
};

struct SyntheticScene {
  DepthMap depth;  // depth_scale 0.1
  ColorImage rgb;
  CameraIntrinsics camera;
  std::vector<GtObject> objects;
};

/// Thrown when no placement satisfying the constraints is found.
class PlacementFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SyntheticScene generate_scene(const SceneSpec& spec);

/// Writes images 0..n-1 in BOP layout under `scene_dir`: scene_camera.json,
/// scene_gt.json, scene_gt_info.json, depth/, rgb/, mask_visib/, and a
/// detections JSON (GT masks as detections with score 1) at
/// `scene_dir`/gt_detections.json for instances with visibility >= min_visibility.
void write_bop_scene(const std::filesystem::path& scene_dir, int scene_id, const std::vector<SyntheticScene>& images,
                     double min_visibility = 0.1);

/// Writes obj_XXXXXX.ply files and models_info.json (diameter and symmetries
/// in millimeters).
void write_models_dir(const std::filesystem::path& models_dir, const std::vector<ObjectModel>& models);

// --- cut-paste composites ---

struct Crop {
  RgbaImage image;
  int class_id = 0;
};

struct ComposeParams {
  int max_objects = 20;
  double min_scale = 0.5, max_scale = 2.0;
  double min_rotation = 0.0, max_rotation = 2.0 * 3.14159265358979323846;
};

struct Annotation {
  int class_id = 0;
  BinaryMask mask;  // visible pixels only
  BoundingBox bbox;
};

struct Composite {
  ColorImage image;
  std::vector<Annotation> annotations;
  int attempted = 0;  // pastes drawn from the distribution, skipped ones included
};

/// Pastes k ~ U{1..max_objects} random similarity-transformed crops in draw
/// order; later pastes occlude earlier ones and fully hidden pastes are
/// dropped. Crops that do not fit after scaling are skipped.
Composite compose_training_image(const std::vector<Crop>& crops, const ColorImage& background,
                                 const ComposeParams& params, std::uint64_t seed);

struct TrainingSetParams {
  int n_images = 10000;
  double val_fraction = 0.1;
  double augment_fraction = 0.7;
  std::uint64_t seed = 0;
  ComposeParams compose;
};

struct TrainingSetSummary {
  int n_train = 0;
  int n_val = 0;
  int max_annotations = 0;
  int augmented = 0;
};

/// Horizontal mirror of an image / a mask.
ColorImage flip_horizontal(const ColorImage& img);
BinaryMask flip_horizontal(const BinaryMask& mask);

/// Builds image i with compose_training_image(seed = derive_seed(seed, i)) and,
/// for training images, applies a flip or a per-channel color scale in
/// [0.8, 1.2] with probability augment_fraction. The first
/// ceil(n * val_fraction) indices form the validation split.
struct TrainingSample {
  Composite composite;
  bool validation = false;
  bool augmented = false;
};
TrainingSample make_training_sample(const std::vector<Crop>& crops, const std::vector<ColorImage>& backgrounds,
                                    const TrainingSetParams& params, int index);

/// Writes <out>/{train,val}/rgb/*.png, masks/*.png and detections.json.
TrainingSetSummary build_training_set(const std::vector<Crop>& crops, const std::vector<ColorImage>& backgrounds,
                                      const TrainingSetParams& params, const std::filesystem::path& out_dir);

}  // namespace maskppf
