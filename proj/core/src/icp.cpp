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

#include "maskppf/icp.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace maskppf {

void IcpParams::validate() const {
  if (max_iters < 1) throw std::invalid_argument("IcpParams: max_iters must be >= 1");
  if (!(corr_dist_end > 0.0) || corr_dist_start < corr_dist_end)
    throw std::invalid_argument("IcpParams: need corr_dist_start >= corr_dist_end > 0");
  if (!(converge_rot > 0.0) || !(converge_trans > 0.0))
    throw std::invalid_argument("IcpParams: convergence thresholds must be positive");
}

IcpTarget make_icp_target(const PointCloud& scene_with_normals, double diameter, const IcpParams& params) {
  if (!scene_with_normals.has_normals() && !scene_with_normals.empty())
    throw std::invalid_argument("make_icp_target: scene needs normals");
  return {scene_with_normals, SpatialGrid(scene_with_normals.points, params.corr_dist_start * diameter)};
}

namespace {

struct Correspondence {
  Vec3 model;  // transformed model point
  std::uint32_t scene;
};

struct Matches {
  std::vector<Correspondence> pairs;
  double rms = 0.0;
};

Matches match(const RigidPose& pose, const PointCloud& model, const IcpTarget& scene, double gate) {
  Matches m;
  const Mat3 R = pose.rotation_matrix();
  double sum = 0.0;
  for (const Vec3& x : model.points) {
    const Vec3 p = R * x + pose.translation;
    const auto nn = scene.grid.nearest_within(p, gate);
    if (!nn) continue;
    const double r = (p - scene.cloud.points[*nn]).dot(scene.cloud.normals[*nn]);
    sum += r * r;
    m.pairs.push_back({p, static_cast<std::uint32_t>(*nn)});
  }
  if (!m.pairs.empty()) m.rms = std::sqrt(sum / static_cast<double>(m.pairs.size()));
  return m;
}

// Rotation by `omega` about `center`, then translation by `v`.
RigidPose increment(const Vec3& omega, const Vec3& v, const Vec3& center) {
  const double angle = omega.norm();
  const Quat q = angle > 0.0 ? Quat(Eigen::AngleAxisd(angle, omega / angle)) : Quat::Identity();
  return {q, Vec3(center + v - q * center)};
}

}  // namespace

IcpResult refine_icp(const RigidPose& init, const PointCloud& model_cloud, const IcpTarget& scene, double diameter,
                     const IcpParams& params) {
  params.validate();
  constexpr int kMaxHalvings = 5;
  IcpResult result;
  result.pose = init;
  double last_gate = params.corr_dist_start * diameter;

  for (int k = 0; k < params.max_iters; ++k) {
    const double t = params.max_iters > 1 ? static_cast<double>(k) / (params.max_iters - 1) : 1.0;
    const double gate = (params.corr_dist_start + (params.corr_dist_end - params.corr_dist_start) * t) * diameter;
    last_gate = gate;
    const Matches cur = match(result.pose, model_cloud, scene, gate);
    if (cur.pairs.empty()) {
      if (k == 0) throw NoCorrespondences("refine_icp: no correspondences within the gate at the initial pose");
      break;
    }

    // Linearize about the centroid of the matched model points so the update
    // is frame independent.
    Vec3 center = Vec3::Zero();
    for (const auto& c : cur.pairs) center += c.model;
    center /= static_cast<double>(cur.pairs.size());

    Eigen::Matrix<double, 6, 6> JtJ = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> Jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& c : cur.pairs) {
      const Vec3& q = scene.cloud.points[c.scene];
      const Vec3& n = scene.cloud.normals[c.scene];
      Eigen::Matrix<double, 6, 1> J;
      J.head<3>() = (c.model - center).cross(n);
      J.tail<3>() = n;
      const double r = (c.model - q).dot(n);
      JtJ += J * J.transpose();
      Jtr += J * r;
    }
    JtJ.diagonal().array() += 1e-12 * std::max(1.0, JtJ.trace());
    const Eigen::Matrix<double, 6, 1> x = -JtJ.ldlt().solve(Jtr);
    if (!x.allFinite()) break;

    double scale = 1.0;
    bool accepted = false;
    int halvings = 0;
    RigidPose candidate;
    double rms_after = 0.0;
    for (; halvings <= kMaxHalvings; ++halvings, scale *= 0.5) {
      candidate = compose(increment(scale * x.head<3>(), scale * x.tail<3>(), center), result.pose);
      const Matches next = match(candidate, model_cloud, scene, gate);
      if (!next.pairs.empty() && next.rms <= cur.rms) {
        accepted = true;
        rms_after = next.rms;
        break;
      }
    }
    if (!accepted) {
      // No descent direction at this gate: a local minimum.
      result.converged = true;
      break;
    }
    result.steps.push_back({gate, cur.rms, rms_after, halvings});
    result.pose = candidate;
    ++result.iterations;
    if (scale * x.head<3>().norm() < params.converge_rot &&
        scale * x.tail<3>().norm() < params.converge_trans * diameter) {
      result.converged = true;
      break;
    }
  }

  result.rms_residual = match(result.pose, model_cloud, scene, last_gate).rms;
  return result;
}

}  // namespace maskppf
