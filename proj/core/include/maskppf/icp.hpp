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
#include "maskppf/spatial_grid.hpp"

#include <numbers>
#include <stdexcept>
#include <vector>

namespace maskppf {

struct IcpParams {
  int max_iters = 30;
  double corr_dist_start = 0.15;  // fractions of the diameter
  double corr_dist_end = 0.05;
  double converge_rot = 0.1 * std::numbers::pi / 180.0;
  double converge_trans = 1e-4;  // fraction of the diameter

  void validate() const;
};

/// One accepted iteration: gated point-to-plane RMS before and after the
/// step, evaluated at the same gate.
struct IcpStep {
  double gate = 0.0;
  double rms_before = 0.0;
  double rms_after = 0.0;
  int halvings = 0;
};

struct IcpResult {
  RigidPose pose;
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IcpStep> steps;
};

/// Thrown when the initial pose yields no correspondence inside the gate.
class NoCorrespondences : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scene cloud with normals and a nearest-neighbor grid.
struct IcpTarget {
  PointCloud cloud;
  SpatialGrid grid;
};
/// Grid cell = corr_dist_start * diameter.
IcpTarget make_icp_target(const PointCloud& scene_with_normals, double diameter, const IcpParams& params = {});

/// Point-to-plane ICP with a linearly annealed distance gate and step halving.
IcpResult refine_icp(const RigidPose& init, const PointCloud& model_cloud, const IcpTarget& scene, double diameter,
                     const IcpParams& params = {});

}  // namespace maskppf
