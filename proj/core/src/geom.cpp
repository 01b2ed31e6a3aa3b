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

#include "maskppf/geom.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace maskppf {

Eigen::Matrix4d RigidPose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidPose compose(const RigidPose& a, const RigidPose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidPose invert(const RigidPose& p) {
  const Quat qi = p.rotation.conjugate();
  return {qi, -(qi * p.translation)};
}

Vec3 transform_point(const RigidPose& p, const Vec3& x) { return p.rotation * x + p.translation; }

Vec3 rotate_vector(const RigidPose& p, const Vec3& v) { return p.rotation * v; }

double rotation_angle_between(const Quat& a, const Quat& b) {
  // atan2 of the relative quaternion stays accurate near 0, where acos of the
  // dot product loses half the digits; |w| folds the double cover.
  const Quat rel = a.normalized().conjugate() * b.normalized();
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double rotation_angle_between(const RigidPose& a, const RigidPose& b) {
  return rotation_angle_between(a.rotation, b.rotation);
}

Quat average_rotations(std::span<const Quat> rotations, std::span<const double> weights) {
  if (rotations.empty()) throw std::invalid_argument("average_rotations: empty input");
  if (weights.size() != rotations.size())
    throw std::invalid_argument("average_rotations: weight count mismatch");
  const Eigen::Vector4d first = rotations.front().coeffs();
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d scatter = Eigen::Matrix4d::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("average_rotations: negative weight");
    Eigen::Vector4d q = rotations[i].normalized().coeffs();
    if (q.dot(first) < 0.0) q = -q;
    mean += weights[i] * q;
    scatter += weights[i] * q * q.transpose();
    total += weights[i];
  }
  if (total <= 0.0) throw std::invalid_argument("average_rotations: all weights zero");

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(scatter);
  Eigen::Vector4d v = es.eigenvectors().col(3);
  if (v.dot(mean) < 0.0) v = -v;
  Quat out;
  out.coeffs() = v.normalized();
  return out;
}

bool poses_equal(const RigidPose& a, const RigidPose& b, double rot_tol, double trans_tol) {
  return rotation_angle_between(a, b) <= rot_tol &&
         (a.translation - b.translation).norm() <= trans_tol;
}

Mat3 rotation_to_x_axis(const Vec3& n) {
  const Vec3 x = Vec3::UnitX();
  const Vec3 nn = n.normalized();
  const double c = nn.dot(x);
  const Vec3 axis = nn.cross(x);
  const double s = axis.norm();
  if (s < 1e-12) {
    if (c > 0.0) return Mat3::Identity();
    return Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitY()).toRotationMatrix();
  }
  return Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
}

Mat3 rotation_about_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal length must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw std::invalid_argument("intrinsics: principal point outside image");
}

}  // namespace maskppf
