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

// Symmetry disambiguation: render the model under each of its symmetries and
// keep the one whose rendering shares the most keypoint matches with the
// observed RGB image.

#include "maskppf/cloud.hpp"
#include "maskppf/geom.hpp"
#include "maskppf/image.hpp"

#include <array>
#include <vector>

namespace maskppf {

inline constexpr int kPatchSize = 9;
using PatchDescriptor = std::array<float, kPatchSize * kPatchSize>;

struct KeypointSet {
  std::vector<Eigen::Vector2i> positions;
  std::vector<PatchDescriptor> descriptors;  // zero mean, unit norm
};

struct KeypointParams {
  double response_percentile = 0.9;
  int nms_radius = 5;
  int max_keypoints = 200;
  double min_ncc = 0.8;
  double max_pixel_distance = 20.0;
};

/// Min-eigenvalue corners (3x3 gradient covariance) inside `region`.
KeypointSet detect_keypoints(const ColorImage& img, const BinaryMask& region, const KeypointParams& params = {});

/// Mutual nearest neighbors by normalized cross-correlation, gated by
/// min_ncc and pixel distance. Throws std::invalid_argument on size mismatch.
int match_keypoints(const ColorImage& a, const ColorImage& b, const BinaryMask& region,
                    const KeypointParams& params = {});
int match_keypoint_sets(const KeypointSet& a, const KeypointSet& b, const KeypointParams& params = {});

struct SymmetrySelection {
  RigidPose pose;
  std::size_t symmetry_index = 0;
  std::vector<int> match_counts;  // per symmetry; empty when not applied
};

/// Picks pose * S maximizing keypoint matches between the rendering and
/// `rgb`; ties favor the lowest index (the identity comes first). Returns
/// `pose` unchanged when the model has no colors or a single symmetry.
SymmetrySelection select_symmetry(const ColorImage& rgb, const ObjectModel& model, const RigidPose& pose,
                                  const CameraIntrinsics& K, double splat_size, int region_dilation = 3,
                                  const KeypointParams& params = {});

}  // namespace maskppf
