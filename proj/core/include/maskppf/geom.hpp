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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <stdexcept>

namespace maskppf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform x -> R x + t. Rotation is stored as a unit quaternion;
/// q and -q describe the same pose.
struct RigidPose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  RigidPose() = default;
  RigidPose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}
  RigidPose(const Mat3& R, const Vec3& t) : rotation(Quat(R).normalized()), translation(t) {}

  static RigidPose identity() { return {}; }
  static RigidPose from_translation(const Vec3& t) { return {Quat::Identity(), t}; }
  static RigidPose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero()) {
    return {Quat(Eigen::AngleAxisd(angle, axis.normalized())), t};
  }

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;
};

/// result(x) = a(b(x)).
RigidPose compose(const RigidPose& a, const RigidPose& b);
RigidPose invert(const RigidPose& p);
Vec3 transform_point(const RigidPose& p, const Vec3& x);
Vec3 rotate_vector(const RigidPose& p, const Vec3& v);

/// Geodesic angle in [0, pi] between the rotations of a and b.
double rotation_angle_between(const RigidPose& a, const RigidPose& b);
double rotation_angle_between(const Quat& a, const Quat& b);

/// Weighted chordal mean: inputs are sign-aligned to the first element,
/// then the dominant eigenvector of sum w_i q_i q_i^T is returned.
/// Throws std::invalid_argument for empty input or all-zero weights.
Quat average_rotations(std::span<const Quat> rotations, std::span<const double> weights);

/// Test-facing pose equality: rotation within rot_tol radians and
/// translation within trans_tol meters.
bool poses_equal(const RigidPose& a, const RigidPose& b, double rot_tol = 1e-6,
                 double trans_tol = 1e-9);

/// Rotation taking unit vector n onto +x: about n x x-hat, identity when
/// already aligned, pi about +y when anti-aligned.
Mat3 rotation_to_x_axis(const Vec3& n);

/// Rotation by angle about +x.
Mat3 rotation_about_x(double angle);

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws std::invalid_argument unless fx, fy > 0 and the principal point
  /// lies inside the image.
  void validate() const;
  Eigen::Vector2d project(const Vec3& x) const { return {fx * x.x() / x.z() + cx, fy * x.y() / x.z() + cy}; }
  Vec3 unproject(double u, double v, double z) const {
    return {z * (u - cx) / fx, z * (v - cy) / fy, z};
  }
};

}  // namespace maskppf
