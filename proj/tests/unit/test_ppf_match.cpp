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


#include "maskppf/ppf_match.hpp"
#include "maskppf/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <numbers>
#include <random>

namespace maskppf {
namespace {

constexpr double kPi = std::numbers::pi;

const PpfModel& l_block() {
  static const PpfModel m = build_model(make_l_block_model(3, 0.002));
  return m;
}

bool near_pose(const RigidPose& a, const RigidPose& b, double step) {
  return rotation_angle_between(a, b) <= 12.0 * kPi / 180.0 && (a.translation - b.translation).norm() <= 2.0 * step;
}

TEST(MatchParams, Validation) {
  MatchParams p;
  EXPECT_NO_THROW(p.validate());
  p.peak_rel_threshold = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.ref_sampling_stride = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.top_k_clusters = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(VoteInstance, SelfMatchTopHypothesis) {
  const PpfModel& m = l_block();
  const SampledScene s = sample_scene(m.cloud, m.distance_step, m.diameter);
  std::vector<PoseHypothesis> hyps = vote_instance(s, m);
  ASSERT_FALSE(hyps.empty());
  const auto top = std::max_element(hyps.begin(), hyps.end(),
                                    [](const auto& a, const auto& b) { return a.votes < b.votes; });
  EXPECT_TRUE(near_pose(top->pose, RigidPose::identity(), m.distance_step));
  for (const auto& h : hyps) EXPECT_GE(h.votes, 1);
}

TEST(VoteInstance, RecoversRandomTransformInTopCluster) {
  const PpfModel& m = l_block();
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const RigidPose T = test::random_pose(rng, 0.5);
    const SampledScene s = sample_scene(transform_cloud(T, m.cloud), m.distance_step, m.diameter);
    const auto clusters = cluster_poses(vote_instance(s, m), m.diameter);
    ASSERT_FALSE(clusters.empty());
    EXPECT_TRUE(near_pose(clusters[0].pose, T, m.distance_step)) << "trial " << trial;
  }
}

TEST(VoteInstance, Deterministic) {
  const PpfModel& m = l_block();
  std::mt19937_64 rng(42);
  const SampledScene s = sample_scene(transform_cloud(test::random_pose(rng), m.cloud), m.distance_step, m.diameter);
  const auto a = vote_instance(s, m), b = vote_instance(s, m);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].votes, b[i].votes);
    EXPECT_EQ(a[i].ref_point, b[i].ref_point);
    EXPECT_EQ(a[i].pose.translation, b[i].pose.translation);
    EXPECT_EQ(a[i].pose.rotation.coeffs(), b[i].pose.rotation.coeffs());
  }
}

TEST(VoteInstance, Errors) {
  const PpfModel& m = l_block();
  EXPECT_THROW(vote_instance(sample_scene(PointCloud{}, m.distance_step, m.diameter), m), std::invalid_argument);
  EXPECT_THROW(vote_instance(sample_scene(m.cloud, 2 * m.distance_step, m.diameter), m), std::invalid_argument);
  PointCloud no_normals;
  no_normals.points = m.cloud.points;
  EXPECT_THROW(sample_scene(no_normals, m.distance_step, m.diameter), std::invalid_argument);
}

TEST(ClusterPoses, IdenticalPosesMerge) {
  std::mt19937_64 rng(43);
  const RigidPose p = test::random_pose(rng);
  std::vector<PoseHypothesis> hyps;
  for (int i = 0; i < 7; ++i) hyps.push_back({p, 1, i});
  const auto c = cluster_poses(hyps, 0.1);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].total_votes, 7);
  EXPECT_EQ(c[0].members, 7);
  EXPECT_TRUE(poses_equal(c[0].pose, p, 1e-9, 1e-12));
}

TEST(ClusterPoses, OppositeRotationsSeparate) {
  const RigidPose a = RigidPose::identity();
  const RigidPose b = RigidPose::from_axis_angle(Vec3::UnitZ(), kPi);
  const auto c = cluster_poses({{a, 3, 0}, {b, 2, 1}}, 0.1);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].total_votes, 3);
  EXPECT_EQ(c[1].total_votes, 2);
  EXPECT_TRUE(cluster_poses({}, 0.1).empty());
}

TEST(ClusterPoses, TruncatesToTopK) {
  std::vector<PoseHypothesis> hyps;
  for (int i = 0; i < 10; ++i) hyps.push_back({RigidPose::from_translation(Vec3(i, 0, 0)), 10 - i, i});
  MatchParams p;
  p.top_k_clusters = 3;
  const auto c = cluster_poses(hyps, 0.1, p);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].total_votes, 10);
  EXPECT_EQ(c[2].total_votes, 8);
}

TEST(ClusterPoses, PermutationInvariant) {
  const PpfModel& m = l_block();
  std::mt19937_64 rng(44);
  const SampledScene s = sample_scene(transform_cloud(test::random_pose(rng), m.cloud), m.distance_step, m.diameter);
  std::vector<PoseHypothesis> hyps = vote_instance(s, m);
  const auto ref = cluster_poses(hyps, m.diameter);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(hyps.begin(), hyps.end(), rng);
    const auto c = cluster_poses(hyps, m.diameter);
    ASSERT_EQ(c.size(), ref.size());
    EXPECT_EQ(c[0].total_votes, ref[0].total_votes);
    EXPECT_EQ(c[0].members, ref[0].members);
    EXPECT_TRUE(poses_equal(c[0].pose, ref[0].pose, 1e-12, 1e-15));
  }
}

TEST(FittingScore, ExactAndDisplaced) {
  const PpfModel& m = l_block();
  std::mt19937_64 rng(45);
  const RigidPose T = test::random_pose(rng);
  const ScoringScene s = make_scoring_scene(transform_cloud(T, m.cloud), m.distance_step);
  EXPECT_GE(fitting_score(T, m, s), 0.99);
  const RigidPose far = compose(RigidPose::from_translation(Vec3(1.5 * m.diameter, 0, 0)), T);
  EXPECT_EQ(fitting_score(far, m, s), 0.0);
}

TEST(FittingScore, HalfOccluded) {
  ObjectModel sphere;
  sphere.cloud = test::fibonacci_sphere(20000, 0.05);
  sphere.diameter = 0.1;
  const PpfModel m = build_model(sphere, {0.03, 30});
  // The scene keeps the half of the dense surface with x < 0.
  PointCloud half;
  for (std::size_t i = 0; i < sphere.cloud.size(); ++i)
    if (sphere.cloud.points[i].x() < 0) {
      half.points.push_back(sphere.cloud.points[i]);
      half.normals.push_back(sphere.cloud.normals[i]);
    }
  const ScoringScene s = make_scoring_scene(half, m.distance_step);
  const double score = fitting_score(RigidPose::identity(), m, s);
  EXPECT_GE(score, 0.4);
  EXPECT_LE(score, 0.6);
}

TEST(FittingScore, NonIncreasingWithPerturbation) {
  const PpfModel& m = l_block();
  const ScoringScene s = make_scoring_scene(m.cloud, m.distance_step);
  std::mt19937_64 rng(46);
  double prev = 2.0;
  for (int k = 0; k < 20; ++k) {
    // Magnitude grows to one diameter in translation and 90 degrees in rotation.
    const double f = k / 19.0;
    double sum = 0.0;
    for (int t = 0; t < 20; ++t) sum += fitting_score(test::perturbation(rng, f * kPi / 2, f * m.diameter), m, s);
    const double mean = sum / 20.0;
    EXPECT_LE(mean, prev + 0.02) << "magnitude " << k;
    prev = std::min(prev, mean);
  }
  EXPECT_LT(prev, 0.1);
}

TEST(FittingScore, CameraFacingOnlyCountsVisibleSamples) {
  const PpfModel& m = l_block();
  const RigidPose T = RigidPose::from_translation(Vec3(0, 0, 0.8));
  const PointCloud posed = transform_cloud(T, m.cloud);
  PointCloud visible;
  for (std::size_t i = 0; i < posed.size(); ++i)
    if (posed.normals[i].dot(posed.points[i]) < 0) {
      visible.points.push_back(posed.points[i]);
      visible.normals.push_back(posed.normals[i]);
    }
  const ScoringScene s = make_scoring_scene(visible, m.distance_step);
  EXPECT_GE(fitting_score(T, m, s, true), 0.99);
  EXPECT_LT(fitting_score(T, m, s, false), 0.9);
}

TEST(MaskRestriction, NeverLowersGroundTruthRank) {
  // Object plus a large plane of clutter, both sampled at the model step.
  const PpfModel m = build_model(make_box_model(4, Vec3(0.15, 0.10, 0.02), 0.002));
  const double step = m.distance_step;
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 3; ++trial) {
    const RigidPose gt(Quat(Eigen::AngleAxisd(0.4 + trial, test::random_unit(rng))), Vec3(0.0, 0.0, 0.6));
    const PointCloud object = transform_cloud(gt, m.cloud);
    PointCloud full = object;
    for (double x = -0.25; x <= 0.25; x += step)
      for (double y = -0.25; y <= 0.25; y += step) {
        full.points.emplace_back(x, y, 0.75);
        full.normals.emplace_back(0, 0, -1);
      }
    MatchParams p;
    p.top_k_clusters = 1000;
    auto rank = [&](const PointCloud& cloud) {
      const auto c = cluster_poses(vote_instance(sample_scene(cloud, step, m.diameter), m, p), m.diameter, p);
      for (std::size_t i = 0; i < c.size(); ++i)
        if (near_pose(c[i].pose, gt, step)) return i;
      return c.size();
    };
    const std::size_t masked = rank(object), unmasked = rank(full);
    EXPECT_LE(masked, unmasked) << "trial " << trial;
  }
}

TEST(VoteInstance, RuntimeLinearInReferencePoints) {
  const PpfModel& m = l_block();
  PointCloud scene;
  std::mt19937_64 rng(48);
  for (int k = 0; k < 4; ++k) {
    const PointCloud c = transform_cloud(test::random_pose(rng, 0.1), m.cloud);
    scene.points.insert(scene.points.end(), c.points.begin(), c.points.end());
    scene.normals.insert(scene.normals.end(), c.normals.begin(), c.normals.end());
  }
  const SampledScene s = sample_scene(scene, m.distance_step, m.diameter);
  auto per_ref = [&](int stride) {
    MatchParams p;
    p.ref_sampling_stride = stride;
    const std::size_t refs = (s.cloud.size() + stride - 1) / stride;
    double best = 1e30;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto h = vote_instance(s, m, p);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best / static_cast<double>(refs);
  };
  const double base = per_ref(1);
  for (int stride : {2, 5, 10}) {
    const double ratio = per_ref(stride) / base;
    EXPECT_GT(ratio, 0.7) << "stride " << stride;
    EXPECT_LT(ratio, 1.3) << "stride " << stride;
  }
}

}  // namespace
}  // namespace maskppf
