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


#include "maskppf/ppf_model.hpp"
#include "maskppf/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

namespace maskppf {
namespace {

constexpr double kPi = std::numbers::pi;

// Random oriented points whose pairwise distances all exceed `min_sep`.
ObjectModel sparse_model(std::mt19937_64& rng, int n, double radius, double min_sep) {
  ObjectModel m;
  m.object_id = 9;
  while (static_cast<int>(m.cloud.size()) < n) {
    const Vec3 p = test::random_vec(rng, radius);
    bool ok = p.norm() <= radius;
    for (const Vec3& q : m.cloud.points) ok = ok && (p - q).norm() > min_sep;
    if (!ok) continue;
    m.cloud.points.push_back(p);
    m.cloud.normals.push_back(test::random_unit(rng));
  }
  m.diameter = 2.0 * radius;
  return m;
}

TEST(ComputePpf, OrthogonalAndCollinear) {
  const PointPairFeature f = compute_ppf(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1));
  EXPECT_NEAR(f.distance, 1.0, 1e-12);
  EXPECT_NEAR(f.angle_n1_d, kPi / 2, 1e-12);
  EXPECT_NEAR(f.angle_n2_d, kPi / 2, 1e-12);
  EXPECT_NEAR(f.angle_n1_n2, 0.0, 1e-12);
  const PointPairFeature g = compute_ppf(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, 2), Vec3(0, 0, 1));
  EXPECT_NEAR(g.distance, 2.0, 1e-12);
  EXPECT_NEAR(g.angle_n1_d, 0.0, 1e-12);
  EXPECT_NEAR(g.angle_n2_d, 0.0, 1e-12);
  EXPECT_NEAR(g.angle_n1_n2, 0.0, 1e-12);
}

TEST(ComputePpf, CoincidentPointsThrow) {
  EXPECT_THROW(compute_ppf(Vec3(1, 2, 3), Vec3::UnitZ(), Vec3(1, 2, 3), Vec3::UnitX()), std::invalid_argument);
}

TEST(ComputePpf, RigidInvariance) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p1 = test::random_vec(rng, 0.2), p2 = test::random_vec(rng, 0.2);
    const Vec3 n1 = test::random_unit(rng), n2 = test::random_unit(rng);
    const RigidPose T = test::random_pose(rng, 2.0);
    const PointPairFeature a = compute_ppf(p1, n1, p2, n2);
    const PointPairFeature b = compute_ppf(transform_point(T, p1), rotate_vector(T, n1), transform_point(T, p2),
                                           rotate_vector(T, n2));
    ASSERT_NEAR(a.distance, b.distance, 1e-6);
    ASSERT_NEAR(a.angle_n1_d, b.angle_n1_d, 1e-6);
    ASSERT_NEAR(a.angle_n2_d, b.angle_n2_d, 1e-6);
    ASSERT_NEAR(a.angle_n1_n2, b.angle_n1_n2, 1e-6);
  }
}

TEST(QuantizePpf, FloorAndTopBinClamp) {
  const double da = kPi / 30;
  EXPECT_EQ(unpack_key(quantize_ppf({0.12, 0, 0, 0}, 0.05, da)).distance, 2);
  const PpfBins b = unpack_key(quantize_ppf({0.01, kPi, kPi, kPi}, 0.05, da));
  EXPECT_EQ(b.a1, 29);
  EXPECT_EQ(b.a2, 29);
  EXPECT_EQ(b.a3, 29);
  EXPECT_EQ(angle_bin_count(da), 30);
  const PpfBins z = unpack_key(quantize_ppf({0.0, 0.0, 0.0, 0.0}, 0.05, da));
  EXPECT_EQ(z.distance + z.a1 + z.a2 + z.a3, 0);
}

TEST(QuantizePpf, KeysEqualIffBinsEqual) {
  const double dd = 0.01, da = kPi / 8;
  std::vector<std::pair<PointPairFeature, std::array<int, 4>>> feats;
  // Two samples per bin, away from and close to the lower edge.
  for (int d = 0; d < 3; ++d)
    for (int a1 = 0; a1 < 8; ++a1)
      for (int a2 = 0; a2 < 8; a2 += 3)
        for (int a3 = 0; a3 < 8; a3 += 2)
          for (double frac : {0.5, 1e-6}) {
            const PointPairFeature f{(d + frac) * dd, (a1 + frac) * da, (a2 + frac) * da, (a3 + frac) * da};
            feats.push_back({f, {d, a1, a2, a3}});
          }
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const PpfKey ki = quantize_ppf(feats[i].first, dd, da);
    const PpfBins b = unpack_key(ki);
    EXPECT_EQ((std::array<int, 4>{b.distance, b.a1, b.a2, b.a3}), feats[i].second);
    for (std::size_t j = i + 1; j < feats.size(); j += 7) {
      const PpfKey kj = quantize_ppf(feats[j].first, dd, da);
      EXPECT_EQ(ki == kj, feats[i].second == feats[j].second);
    }
  }
}

TEST(LocalAlpha, Examples) {
  EXPECT_NEAR(local_alpha(Vec3::Zero(), Vec3::UnitX(), Vec3(0.5, 0.3, 0)), 0.0, 1e-12);
  const double a = local_alpha(Vec3::Zero(), Vec3::UnitX(), Vec3(0.5, 0, 0.3));
  EXPECT_NEAR(a, -kPi / 2, 1e-12);
  const Vec3 rotated = rotation_about_x(a) * Vec3(0.5, 0, 0.3);
  EXPECT_NEAR(rotated.z(), 0.0, 1e-12);
  EXPECT_GT(rotated.y(), 0.0);
  EXPECT_EQ(local_alpha(Vec3::Zero(), Vec3::UnitX(), Vec3(0.4, 0, 0)), 0.0);
}

TEST(LocalAlpha, AntiAlignedNormal) {
  const double a = local_alpha(Vec3::Zero(), -Vec3::UnitX(), Vec3(0.2, 0.3, 0.1));
  const Vec3 q = rotation_about_x(a) * (rotation_to_x_axis(-Vec3::UnitX()) * Vec3(0.2, 0.3, 0.1));
  EXPECT_NEAR(q.z(), 0.0, 1e-12);
  EXPECT_GT(q.y(), 0.0);
}

TEST(LocalAlpha, RotationAboutNormalShiftsAlpha) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 ref = test::random_vec(rng), n = test::random_unit(rng);
    const Vec3 other = ref + test::random_vec(rng, 0.3);
    const double a0 = local_alpha(ref, n, other);
    for (int k = 1; k < 12; ++k) {
      const double beta = k * kPi / 6.0 - 0.3;
      const Vec3 moved = ref + Eigen::AngleAxisd(beta, n) * (other - ref);
      EXPECT_NEAR(wrap_angle(local_alpha(ref, n, moved) - (a0 - beta)), 0.0, 1e-9);
    }
  }
}

TEST(BuildModel, TwoPointModel) {
  ObjectModel m;
  m.cloud.points = {Vec3(0, 0, 0), Vec3(0.1, 0, 0)};
  m.cloud.normals = {Vec3::UnitZ(), Vec3::UnitY()};
  m.diameter = 0.1;
  const PpfModel p = build_model(m);
  EXPECT_EQ(p.cloud.size(), 2u);
  EXPECT_EQ(p.entry_count(), 2u);
}

TEST(BuildModel, DefaultsOnThousandPointSphere) {
  ObjectModel m;
  m.cloud = test::fibonacci_sphere(1000, 0.05);
  m.diameter = 0.1;
  const PpfModel p = build_model(m);
  const std::size_t n = p.cloud.size();
  EXPECT_GT(n, 100u);
  EXPECT_LT(n, 1000u);
  EXPECT_EQ(p.entry_count(), n * (n - 1));
  EXPECT_NEAR(p.distance_step, 0.005, 1e-15);
  EXPECT_NEAR(p.angle_step, kPi / 30, 1e-15);
}

TEST(BuildModel, EntriesRoundTripThroughLookup) {
  const ObjectModel obj = make_l_block_model(3, 0.003);
  const PpfModel p = build_model(obj, {0.1, 30});
  for (const PpfEntry& e : p.entries()) {
    ASSERT_LT(e.ref_index, p.cloud.size());
    ASSERT_GT(e.alpha, -kPi - 1e-6);
    ASSERT_LE(e.alpha, kPi + 1e-6);
  }
  const auto& pts = p.cloud.points;
  const auto& nrm = p.cloud.normals;
  for (std::size_t i = 0; i < pts.size(); i += 3)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const PpfKey key = quantize_ppf(compute_ppf(pts[i], nrm[i], pts[j], nrm[j]), p.distance_step, p.angle_step);
      const auto list = p.lookup(key);
      const PpfEntry want{static_cast<std::uint32_t>(i), static_cast<float>(local_alpha(pts[i], nrm[i], pts[j]))};
      ASSERT_NE(std::find(list.begin(), list.end(), want), list.end());
    }
}

TEST(BuildModel, KeysInvariantUnderRigidTransform) {
  std::mt19937_64 rng(33);
  ObjectModel m = sparse_model(rng, 120, 0.05, 0.1 * 0.1);
  const RigidPose T = test::random_pose(rng, 0.5);
  ObjectModel moved = m;
  moved.cloud = transform_cloud(T, m.cloud);
  const PpfModel a = build_model(m), b = build_model(moved);
  ASSERT_EQ(a.cloud.size(), m.cloud.size());
  ASSERT_EQ(b.cloud.size(), m.cloud.size());
  std::vector<PpfKey> ka, kb;
  for (PpfKey k : a.keys()) ka.insert(ka.end(), a.lookup(k).size(), k);
  for (PpfKey k : b.keys()) kb.insert(kb.end(), b.lookup(k).size(), k);
  EXPECT_EQ(ka, kb);
}

TEST(BuildModel, Errors) {
  ObjectModel m;
  m.cloud.points = {Vec3(0, 0, 0), Vec3(0.1, 0, 0)};
  m.diameter = 0.1;
  EXPECT_THROW(build_model(m), std::invalid_argument);  // no normals
  m.cloud.normals = {Vec3::UnitZ(), Vec3::UnitZ()};
  EXPECT_THROW(build_model(m, {0.6, 30}), std::invalid_argument);
  EXPECT_THROW(build_model(m, {0.05, 3}), std::invalid_argument);
  m.cloud.points = {Vec3(0, 0, 0), Vec3(0.001, 0, 0)};
  EXPECT_THROW(build_model(m), std::invalid_argument);  // one sampled point
}

TEST(ModelFile, BitExactRoundTrip) {
  const auto dir = test::temp_dir("ppf_file");
  const PpfModel p = build_model(make_box_model(5, Vec3(0.1, 0.06, 0.04), 0.004, 3));
  save_model(dir / "a.ppf", p);
  const PpfModel q = load_model(dir / "a.ppf");
  EXPECT_EQ(q.object_id, p.object_id);
  EXPECT_EQ(q.distance_step, p.distance_step);
  EXPECT_EQ(q.angle_step, p.angle_step);
  EXPECT_EQ(q.n_angle, p.n_angle);
  EXPECT_EQ(q.diameter, p.diameter);
  EXPECT_EQ(q.cloud.points, p.cloud.points);
  EXPECT_EQ(q.cloud.normals, p.cloud.normals);
  EXPECT_EQ(q.cloud.colors, p.cloud.colors);
  EXPECT_TRUE(std::ranges::equal(q.keys(), p.keys()));
  EXPECT_TRUE(std::ranges::equal(q.offsets(), p.offsets()));
  EXPECT_TRUE(std::ranges::equal(q.entries(), p.entries()));
  save_model(dir / "b.ppf", q);
  auto bytes = [](const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(bytes(dir / "a.ppf"), bytes(dir / "b.ppf"));
}

TEST(ModelFile, RejectsGarbage) {
  const auto dir = test::temp_dir("ppf_garbage");
  std::ofstream(dir / "x.ppf") << "not a model";
  EXPECT_THROW(load_model(dir / "x.ppf"), std::runtime_error);
  EXPECT_THROW(load_model(dir / "missing.ppf"), std::runtime_error);
}

}  // namespace
}  // namespace maskppf
