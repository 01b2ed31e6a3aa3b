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


#include "maskppf/eval.hpp"
#include "maskppf/image.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace maskppf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const CameraIntrinsics kCam{572.4, 573.6, 325.3, 242.0, 640, 480};

ObjectModel small_model() {
  ObjectModel m;
  m.cloud.points = {Vec3(0.05, 0, 0), Vec3(-0.05, 0, 0), Vec3(0, 0.03, 0), Vec3(0, 0, 0.02)};
  m.diameter = 0.1;
  return m;
}

TEST(Mssd, ZeroAndTranslation) {
  ObjectModel m = small_model();
  const RigidPose gt = RigidPose::from_translation(Vec3(0, 0, 1));
  EXPECT_EQ(mssd(gt, gt, m), 0.0);
  const Vec3 t(0.003, -0.004, 0.012);
  EXPECT_NEAR(mssd(compose(RigidPose::from_translation(t), gt), gt, m), t.norm(), 1e-15);
  m.symmetries.push_back(RigidPose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi));
  EXPECT_NEAR(mssd(gt, gt, m), 0.0, 1e-15);
  m.cloud.points.clear();
  EXPECT_THROW(mssd(gt, gt, m), std::invalid_argument);
}

TEST(Mssd, SymmetricPoseScoresZero) {
  ObjectModel m = small_model();
  const RigidPose flip = RigidPose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi);
  m.symmetries.push_back(flip);
  const RigidPose gt = RigidPose::from_translation(Vec3(0, 0, 1));
  EXPECT_GT(mssd(compose(gt, flip), gt, small_model()), 0.05);
  EXPECT_NEAR(mssd(compose(gt, flip), gt, m), 0.0, 1e-12);
}

TEST(Mssd, InvariantUnderGroupSymmetry) {
  // Vertex set closed under quarter turns about z, like the symmetry group.
  ObjectModel m;
  m.cloud.points = {Vec3(0.05, 0.01, 0), Vec3(-0.01, 0.05, 0), Vec3(-0.05, -0.01, 0), Vec3(0.01, -0.05, 0),
                    Vec3(0, 0, 0.02)};
  m.diameter = 0.1;
  for (int k = 1; k < 4; ++k) m.symmetries.push_back(RigidPose::from_axis_angle(Vec3::UnitZ(), k * std::numbers::pi / 2));
  std::mt19937_64 rng(71);
  for (int i = 0; i < 20; ++i) {
    const RigidPose est = test::random_pose(rng), gt = test::random_pose(rng);
    for (const RigidPose& s : m.symmetries) EXPECT_NEAR(mssd(compose(est, s), gt, m), mssd(est, gt, m), 1e-12);
  }
}

TEST(MetricsOracle, MatchBruteForce) {
  std::mt19937_64 rng(72);
  for (int i = 0; i < 200; ++i) {
    const oracle::MetricInstance inst = oracle::random_metric_instance(rng);
    ASSERT_NEAR(mssd(inst.est, inst.gt, inst.model), oracle::mssd(inst.est, inst.gt, inst.model), 1e-9);
    ASSERT_NEAR(mspd(inst.est, inst.gt, inst.model, kCam, 640), oracle::mspd(inst.est, inst.gt, inst.model, kCam, 640),
                1e-6);
  }
}

TEST(Mspd, ZeroScalingAndErrors) {
  const ObjectModel m = small_model();
  const RigidPose gt = RigidPose::from_translation(Vec3(0, 0, 1));
  EXPECT_EQ(mspd(gt, gt, m, kCam, 640), 0.0);
  const RigidPose est = RigidPose::from_translation(Vec3(0.01, 0, 1));
  const double at640 = mspd(est, gt, m, kCam, 640);
  EXPECT_NEAR(at640, kCam.fx * 0.01, 1e-9);
  EXPECT_NEAR(mspd(est, gt, m, kCam, 1280), 0.5 * at640, 1e-9);
  EXPECT_THROW(mspd(RigidPose::from_translation(Vec3(0, 0, -1)), gt, m, kCam, 640), std::domain_error);
}

TEST(AverageRecall, Examples) {
  EXPECT_DOUBLE_EQ(average_recall({{0, 0, 0.1}, {0, 0, 0.2}}).ar, 1.0);
  EXPECT_DOUBLE_EQ(average_recall({{kInf, kInf, 0.1}}).ar, 0.0);
  const PoseErrorReport r = average_recall({{0, 0, 0.1}, {kInf, kInf, 0.1}});
  EXPECT_DOUBLE_EQ(r.ar, 0.5);
  EXPECT_EQ(r.mssd_recall.size(), 10u);
  EXPECT_EQ(r.mspd_recall.size(), 10u);
  for (double x : r.mssd_recall) EXPECT_DOUBLE_EQ(x, 0.5);
}

TEST(AverageRecall, ThresholdSweep) {
  // MSSD 0.12 * diameter passes thresholds 0.15 .. 0.5 (8 of 10); MSPD 22 px
  // passes 25 .. 50 (6 of 10).
  const PoseErrorReport r = average_recall({{0.012, 22.0, 0.1}});
  EXPECT_NEAR(r.ar_mssd, 0.8, 1e-12);
  EXPECT_NEAR(r.ar_mspd, 0.6, 1e-12);
  EXPECT_NEAR(r.ar, 0.7, 1e-12);
}

TEST(MaskIou, Examples) {
  const BinaryMask a = oracle::rect(40, 30, 0, 0, 10, 10);
  EXPECT_DOUBLE_EQ(mask_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(mask_iou(a, oracle::rect(40, 30, 20, 0, 30, 10)), 0.0);
  EXPECT_DOUBLE_EQ(mask_iou(a, oracle::rect(40, 30, 5, 0, 15, 10)), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mask_iou(BinaryMask(4, 4), BinaryMask(4, 4)), 0.0);
  EXPECT_THROW(mask_iou(a, BinaryMask(4, 4)), std::invalid_argument);
}

TEST(MapAtIou, HandComputedFixtures) {
  for (const auto& f : oracle::map_fixtures()) EXPECT_NEAR(map_at_iou(f.preds, f.gt).map, f.expected_map, 1e-12) << f.name;
}

TEST(MapAtIou, ScoreRescalingInvariant) {
  for (auto f : oracle::map_fixtures()) {
    const double before = map_at_iou(f.preds, f.gt).map;
    for (auto& p : f.preds) p.score *= 3.7;
    EXPECT_DOUBLE_EQ(map_at_iou(f.preds, f.gt).map, before) << f.name;
  }
}

TEST(MapAtIou, LowestScoreFalsePositiveNeverIncreasesAp) {
  for (auto f : oracle::map_fixtures()) {
    const MapResult before = map_at_iou(f.preds, f.gt);
    f.preds.push_back(oracle::det(1, 1e-6, oracle::rect(40, 30, 35, 25, 40, 30)));
    const MapResult after = map_at_iou(f.preds, f.gt);
    for (const auto& [cls, ap] : after.ap) {
      EXPECT_GE(ap, 0.0);
      EXPECT_LE(ap, 1.0);
      EXPECT_LE(ap, before.ap.at(cls) + 1e-12) << f.name;
    }
  }
}

TEST(MapAtIou, ClassAgnostic) {
  const BinaryMask a = oracle::rect(40, 30, 0, 0, 10, 10);
  const DetectionSet gt{oracle::det(1, 1, a)};
  const DetectionSet preds{oracle::det(2, 0.9, a)};
  EXPECT_DOUBLE_EQ(map_at_iou(preds, gt).map, 0.0);
  EXPECT_DOUBLE_EQ(map_at_iou(preds, gt, 0.5, true).map, 1.0);
}

TEST(MapAtIou, MatchesOnlyWithinTheSameImage) {
  const BinaryMask a = oracle::rect(40, 30, 0, 0, 10, 10);
  EXPECT_DOUBLE_EQ(map_at_iou({oracle::det(1, 0.9, a, 1)}, {oracle::det(1, 1, a, 0)}).map, 0.0);
}

TEST(SelectBest, Rules) {
  const auto fx = oracle::map_fixtures();
  const auto& gt = fx[1].gt;
  EXPECT_EQ(select_best({{"only", fx[1].preds}}, gt), "only");
  // mAP 0.5 versus 1.0.
  EXPECT_EQ(select_best({{"weak", fx[1].preds}, {"strong", gt}}, gt), "strong");
  EXPECT_EQ(select_best({{"first", gt}, {"second", gt}}, gt), "first");
  EXPECT_THROW(select_best({}, gt), std::invalid_argument);
}

TEST(SelectBest, PrefersHigherMapOfTwo) {
  // Class 1 on 10 GT instances: candidate A finds 9 (AP 0.9), B finds 6 (AP 0.6).
  DetectionSet gt, a, b;
  for (int i = 0; i < 10; ++i) {
    const BinaryMask m = oracle::rect(40, 30, 0, 0, 10, 10);
    gt.push_back(oracle::det(1, 1, m, i));
    if (i < 9) a.push_back(oracle::det(1, 0.9, m, i));
    if (i < 6) b.push_back(oracle::det(1, 0.9, m, i));
  }
  EXPECT_NEAR(map_at_iou(a, gt).map, 0.9, 1e-12);
  EXPECT_NEAR(map_at_iou(b, gt).map, 0.6, 1e-12);
  EXPECT_EQ(select_best({{"b", b}, {"a", a}}, gt), "a");
}

TEST(BopCsv, IdentityRowAndHeader) {
  PoseResult r;
  r.scene_id = 1;
  r.image_id = 2;
  r.object_id = 3;
  r.score = 0.5;
  r.pose = RigidPose::from_translation(Vec3(0, 0, 1));
  r.time = 0.25;
  EXPECT_EQ(format_bop_csv({r}), "scene_id,im_id,obj_id,score,R,t,time\n1,2,3,0.5,1 0 0 0 1 0 0 0 1,0 0 1000,0.25\n");
  EXPECT_EQ(format_bop_csv({}), "scene_id,im_id,obj_id,score,R,t,time\n");
  r.score = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(format_bop_csv({r}), std::invalid_argument);
}

TEST(BopCsv, RoundTrip) {
  const auto dir = test::temp_dir("csv_rt");
  std::mt19937_64 rng(73);
  std::vector<PoseResult> rows;
  for (int i = 0; i < 50; ++i) {
    PoseResult r;
    r.scene_id = i / 10;
    r.image_id = i % 7;
    r.object_id = 1 + i % 3;
    r.score = std::uniform_real_distribution<double>(0, 1)(rng);
    r.pose = test::random_pose(rng);
    r.time = 0.125 * (i % 7);
    rows.push_back(r);
  }
  write_bop_csv(dir / "r.csv", rows);
  const auto back = read_bop_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].scene_id, rows[i].scene_id);
    EXPECT_EQ(back[i].object_id, rows[i].object_id);
    EXPECT_EQ(back[i].score, rows[i].score);
    EXPECT_TRUE(poses_equal(back[i].pose, rows[i].pose, 1e-9, 1e-9));
    EXPECT_EQ(back[i].time, rows[i].time);
  }
  std::ofstream(dir / "bad.csv") << "scene,im\n";
  EXPECT_THROW(read_bop_csv(dir / "bad.csv"), std::runtime_error);
}

TEST(FormatShortest, RoundTrips) {
  std::mt19937_64 rng(74);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(format_shortest(v)), v);
  }
  EXPECT_EQ(format_shortest(1000.0), "1000");
  EXPECT_EQ(format_shortest(0.1), "0.1");
}

TEST(Detections, JsonRoundTrip) {
  const auto dir = test::temp_dir("det_rt");
  std::filesystem::create_directories(dir / "masks");
  DetectionSet dets;
  for (int i = 0; i < 3; ++i) {
    Detection d = oracle::det(i + 1, 0.5 + 0.1 * i, oracle::rect(40, 30, i, i, 10 + i, 12 + i), i);
    d.scene_id = 4;
    d.mask_path = "masks/" + std::to_string(i) + ".png";
    write_mask_png(dir / d.mask_path, d.mask);
    dets.push_back(d);
  }
  save_detections(dir / "d.json", dets);
  const DetectionSet back = load_detections(dir / "d.json");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].scene_id, 4);
    EXPECT_EQ(back[i].image_id, dets[i].image_id);
    EXPECT_EQ(back[i].object_id, dets[i].object_id);
    EXPECT_DOUBLE_EQ(back[i].score, dets[i].score);
    EXPECT_EQ(back[i].mask, dets[i].mask);
    EXPECT_EQ(back[i].bbox, dets[i].bbox);
  }
  std::ofstream(dir / "bad.json") << "{\"a\": 1}";
  EXPECT_THROW(load_detections(dir / "bad.json"), std::runtime_error);
}

}  // namespace
}  // namespace maskppf
