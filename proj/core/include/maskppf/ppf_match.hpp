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
#include "maskppf/ppf_model.hpp"
#include "maskppf/spatial_grid.hpp"

#include <numbers>
#include <vector>

namespace maskppf {

struct MatchParams {
  int ref_sampling_stride = 5;
  double peak_rel_threshold = 0.85;
  double cluster_trans_thresh = 0.1;  // fraction of diameter
  double cluster_rot_thresh = 12.0 * std::numbers::pi / 180.0;
  int top_k_clusters = 5;
  double mask_dilation = 0.05;  // fraction of the mask bbox diagonal
  int n_alpha = 30;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct PoseHypothesis {
  RigidPose pose;
  int votes = 0;
  int ref_point = 0;  // scene index of the reference point
};

struct PoseCluster {
  RigidPose pose;
  int total_votes = 0;
  int members = 0;
  double fit = 0.0;
};

/// Scene cloud sampled at a model's distance step, with a grid for pairing.
struct SampledScene {
  PointCloud cloud;
  double step = 0.0;
  SpatialGrid grid;
};

/// Downsamples an oriented cloud at `step` and indexes it. The grid cell is
/// `pair_radius` (the model diameter for voting).
SampledScene sample_scene(const PointCloud& oriented, double step, double pair_radius);

/// Hough voting over (model point, alpha) for every stride-th scene point.
/// Throws std::invalid_argument for an empty scene or when the scene was
/// sampled at a different step than the model.
std::vector<PoseHypothesis> vote_instance(const SampledScene& scene, const PpfModel& model,
                                          const MatchParams& params = {});

/// Greedy clustering in order of votes; output sorted by total votes and
/// truncated to params.top_k_clusters.
std::vector<PoseCluster> cluster_poses(std::vector<PoseHypothesis> hyps, double diameter,
                                       const MatchParams& params = {});

/// Scene point set indexed for fitting_score at a given model step.
struct ScoringScene {
  PointCloud cloud;  // with normals
  SpatialGrid grid;
};
ScoringScene make_scoring_scene(const PointCloud& oriented, double model_step);

/// Fraction of model samples that land within 2 * step of a scene point whose
/// normal agrees within 30 degrees. With `camera_facing_only`, only samples
/// whose transformed normal faces the camera at the origin are counted, which
/// separates poses that explain the same visible surface from different sides.
double fitting_score(const RigidPose& pose, const PpfModel& model, const ScoringScene& scene,
                     bool camera_facing_only = false);

}  // namespace maskppf
