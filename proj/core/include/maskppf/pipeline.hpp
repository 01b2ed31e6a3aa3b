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

// Mask-restricted pose estimation over a BOP scene: detections in, one pose
// row per detection out.

#include "maskppf/cloud.hpp"
#include "maskppf/eval.hpp"
#include "maskppf/icp.hpp"
#include "maskppf/image.hpp"
#include "maskppf/ppf_match.hpp"
#include "maskppf/ppf_model.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace maskppf {

struct PipelineConfig {
  double tau_d = 0.05;
  int n_angle = 30;
  MatchParams match;
  /// Clusters screened by fit (times mask agreement) before the best
  /// match.top_k_clusters of them are refined.
  int prescreen_clusters = 20;
  IcpParams icp;
  bool refine = true;
  bool camera_facing_fit = true;  // score only model points facing the camera
  bool symmetry = true;
  int threads = 1;
  bool fixed_time = false;

  void validate() const;
  /// Effective parameters, one "key = value" per line.
  std::string describe() const;
};

struct ModelEntry {
  ObjectModel object;  // full-resolution model: symmetries, colors
  PpfModel ppf;
};

/// Object models keyed by id. Entries come from <dir>/obj_XXXXXX.ply plus
/// models_info.json; a matching <dir>/obj_XXXXXX.ppf is reused when its
/// sampling agrees with the requested parameters, otherwise the table is built.
class ModelLibrary {
 public:
  ModelLibrary() = default;
  ModelLibrary(std::filesystem::path dir, BuildParams params);

  /// Loads `object_id` if not yet present. Throws std::runtime_error naming
  /// the id when no model file exists.
  const ModelEntry& require(int object_id);
  /// Throws std::out_of_range naming the id when it was never loaded.
  const ModelEntry& get(int object_id) const;
  void add(ModelEntry entry);
  bool contains(int object_id) const { return entries_.count(object_id) != 0; }

 private:
  std::filesystem::path dir_;
  BuildParams params_;
  std::map<int, ModelEntry> entries_;
};

/// Full-image oriented cloud with its pixel map.
OrganizedCloud prepare_scene(const DepthMap& depth, const CameraIntrinsics& K);

/// Points of `scene` whose pixel lies in `mask` dilated by
/// round(dilation * bbox diagonal) pixels. Points farther than `max_range`
/// from the per-axis median of the undilated mask's points are dropped, which
/// keeps distant background caught by the dilation out of the vote.
PointCloud select_masked(const OrganizedCloud& scene, const BinaryMask& mask, double dilation,
                         double max_range = std::numeric_limits<double>::infinity());

struct InstanceResult {
  RigidPose pose;
  double score = 0.0;  // fitting score of the chosen cluster
  std::vector<PoseCluster> clusters;  // after refinement, in vote order
  double vote_seconds = 0.0;          // sampling, voting and clustering
};

/// Fraction of camera-facing model points under `pose` that project inside
/// `mask`.
double mask_agreement(const RigidPose& pose, const PointCloud& model, const CameraIntrinsics& K,
                      const BinaryMask& mask);

/// Optional per-instance inputs. With a camera and a mask, clusters are ranked
/// by fit times mask agreement; with a camera and an image, the chosen pose
/// goes through symmetry selection. `support` (points inside the undilated
/// mask) replaces the voting cloud for scoring and refinement.
struct InstanceContext {
  const ColorImage* rgb = nullptr;
  const CameraIntrinsics* camera = nullptr;
  const BinaryMask* mask = nullptr;
  const PointCloud* support = nullptr;
};

/// Votes over `points` (any oriented cloud: a masked instance or a full
/// scene), clusters, refines and scores. Returns nullopt when the cloud is
/// empty after sampling or no hypothesis survives.
std::optional<InstanceResult> estimate_pose(const PointCloud& points, const ModelEntry& model,
                                            const PipelineConfig& config, const InstanceContext& context = {});

struct SkippedDetection {
  int image_id = 0;
  std::size_t index = 0;  // position in the detections list
  std::string reason;
};

struct DetectRun {
  std::vector<PoseResult> rows;
  std::vector<SkippedDetection> skipped;
};

/// Runs every detection against the scene images it names. Rows follow the
/// detection order. Throws on unreadable scenes or unknown object ids.
DetectRun run_detect(const std::filesystem::path& scene_dir, const DetectionSet& detections, ModelLibrary& library,
                     const PipelineConfig& config);

}  // namespace maskppf
