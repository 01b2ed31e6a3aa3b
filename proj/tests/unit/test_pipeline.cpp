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


#include "maskppf/pipeline.hpp"
#include "maskppf/rgbd_io.hpp"
#include "maskppf/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace maskppf {
namespace {

const CameraIntrinsics kCam{572.4, 573.6, 325.3, 242.0, 640, 480};

std::vector<ObjectModel> library_models() {
  return {make_box_model(1, Vec3(0.12, 0.08, 0.04), 0.0015, std::uint64_t{7}),
          make_cylinder_model(2, 0.03, 0.1, 0.0015), make_l_block_model(3, 0.0015)};
}

// One scene directory with two images and a models directory, shared by the suite.
class PipelineFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new std::filesystem::path(test::temp_dir("pipeline"));
    models_ = new std::vector<ObjectModel>(library_models());
    write_models_dir(*root_ / "models", *models_);
    scenes_ = new std::vector<SyntheticScene>;
    for (std::uint64_t seed : {1001u, 1002u}) {
      SceneSpec spec;
      spec.models = *models_;
      spec.n_objects = 1 + static_cast<int>(seed % 2);
      spec.camera = kCam;
      spec.depth_noise = 0.002;
      spec.seed = seed;
      scenes_->push_back(generate_scene(spec));
    }
    write_bop_scene(*root_ / "scene", 1, *scenes_);
  }
  static void TearDownTestSuite() {
    delete root_;
    delete models_;
    delete scenes_;
  }

  static std::filesystem::path* root_;
  static std::vector<ObjectModel>* models_;
  static std::vector<SyntheticScene>* scenes_;
};

std::filesystem::path* PipelineFixture::root_ = nullptr;
std::vector<ObjectModel>* PipelineFixture::models_ = nullptr;
std::vector<SyntheticScene>* PipelineFixture::scenes_ = nullptr;

TEST(PipelineConfig, ValidateAndDescribe) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_NE(c.describe().find("tau_d = 0.05"), std::string::npos);
  c.tau_d = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.threads = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.n_angle = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SelectMasked, DilationAndRange) {
  // Flat wall at 1 m plus a 4x4 far patch inside the mask.
  DepthMap depth(40, 30, 1.0);
  for (auto& r : depth.raw) r = 1000;
  for (int v = 12; v < 16; ++v)
    for (int u = 18; u < 22; ++u) depth.at(u, v) = 3000;
  const CameraIntrinsics K{100, 100, 20, 15, 40, 30};
  const OrganizedCloud scene = prepare_scene(depth, K);
  BinaryMask mask(40, 30);
  for (int v = 10; v < 20; ++v)
    for (int u = 15; u < 25; ++u) mask.set(u, v);
  EXPECT_EQ(select_masked(scene, mask, 0.0).size(), 100u);
  EXPECT_EQ(select_masked(scene, mask, 0.0, 0.5).size(), 84u);
  // Diagonal about 14 px: 0.1 dilates by 1 px.
  EXPECT_EQ(select_masked(scene, mask, 0.1).size(), dilate_mask(mask, 1).count());
  EXPECT_TRUE(select_masked(scene, BinaryMask(40, 30), 0.1).empty());
  EXPECT_THROW(select_masked(scene, BinaryMask(10, 10), 0.0), std::invalid_argument);
}

TEST(MaskAgreement, FullAndEmpty) {
  const ObjectModel box = make_box_model(1, Vec3(0.05, 0.05, 0.05), 0.003);
  const RigidPose pose = RigidPose::from_translation(Vec3(0, 0, 0.6));
  const CameraIntrinsics K{500, 500, 160, 120, 320, 240};
  BinaryMask all(320, 240);
  std::fill(all.bits.begin(), all.bits.end(), 1);
  EXPECT_DOUBLE_EQ(mask_agreement(pose, box.cloud, K, all), 1.0);
  EXPECT_DOUBLE_EQ(mask_agreement(pose, box.cloud, K, BinaryMask(320, 240)), 0.0);
  BinaryMask left(320, 240);
  for (int v = 0; v < 240; ++v)
    for (int u = 0; u < 160; ++u) left.set(u, v);
  EXPECT_NEAR(mask_agreement(pose, box.cloud, K, left), 0.5, 0.1);
}

TEST_F(PipelineFixture, LibraryLoadsAndRejectsUnknownIds) {
  ModelLibrary lib(*root_ / "models", BuildParams{});
  const ModelEntry& e = lib.require(2);
  EXPECT_NEAR(e.object.diameter, (*models_)[1].diameter, 1e-6);
  EXPECT_GT(e.object.symmetries.size(), 1u);
  EXPECT_TRUE(lib.contains(2));
  EXPECT_FALSE(lib.contains(1));
  try {
    lib.require(42);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& err) {
    EXPECT_NE(std::string(err.what()).find("42"), std::string::npos);
  }
  try {
    std::ignore = lib.get(7);
    FAIL() << "expected an error";
  } catch (const std::out_of_range& err) {
    EXPECT_NE(std::string(err.what()).find("7"), std::string::npos);
  }
}

TEST_F(PipelineFixture, RecoversGroundTruthPoses) {
  ModelLibrary lib(*root_ / "models", BuildParams{});
  const DetectionSet dets = load_detections(*root_ / "scene" / "gt_detections.json");
  ASSERT_FALSE(dets.empty());
  PipelineConfig config;
  const DetectRun run = run_detect(*root_ / "scene", dets, lib, config);
  ASSERT_EQ(run.rows.size(), dets.size());
  EXPECT_TRUE(run.skipped.empty());
  const auto gt = load_scene_gt(*root_ / "scene" / "scene_gt.json");
  int correct = 0;
  for (const PoseResult& r : run.rows) {
    double best = 1e9;
    for (const GtInstance& g : gt.at(r.image_id))
      if (g.object_id == r.object_id) best = std::min(best, mssd(r.pose, g.pose, lib.get(r.object_id).object));
    correct += best < 0.05 * lib.get(r.object_id).object.diameter;
    EXPECT_GT(r.time, 0.0);
    EXPECT_EQ(r.scene_id, 1);
  }
  EXPECT_EQ(correct, static_cast<int>(run.rows.size()));
}

TEST_F(PipelineFixture, OutputIsReproducible) {
  const DetectionSet dets = load_detections(*root_ / "scene" / "gt_detections.json");
  PipelineConfig config;
  config.fixed_time = true;
  std::vector<std::string> outputs;
  for (int threads : {1, 1, 3}) {
    config.threads = threads;
    ModelLibrary lib(*root_ / "models", BuildParams{});
    const DetectRun run = run_detect(*root_ / "scene", dets, lib, config);
    for (const PoseResult& r : run.rows) EXPECT_EQ(r.time, 0.0);
    outputs.push_back(format_bop_csv(run.rows));
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
}

TEST_F(PipelineFixture, EmptyAndInvalidDetections) {
  ModelLibrary lib(*root_ / "models", BuildParams{});
  const DetectRun none = run_detect(*root_ / "scene", {}, lib, {});
  EXPECT_TRUE(none.rows.empty());
  EXPECT_EQ(format_bop_csv(none.rows), std::string(kBopCsvHeader) + "\n");

  DetectionSet dets = load_detections(*root_ / "scene" / "gt_detections.json");
  dets.resize(1);
  Detection blank = dets[0];
  blank.mask = BinaryMask(kCam.width, kCam.height);
  const DetectRun skipped = run_detect(*root_ / "scene", {blank}, lib, {});
  EXPECT_TRUE(skipped.rows.empty());
  ASSERT_EQ(skipped.skipped.size(), 1u);

  Detection unknown = dets[0];
  unknown.object_id = 99;
  EXPECT_THROW(run_detect(*root_ / "scene", {unknown}, lib, {}), std::runtime_error);
  Detection missing = dets[0];
  missing.image_id = 55;
  EXPECT_THROW(run_detect(*root_ / "scene", {missing}, lib, {}), std::runtime_error);
  Detection wrong_size = dets[0];
  wrong_size.mask = BinaryMask(10, 10);
  EXPECT_THROW(run_detect(*root_ / "scene", {wrong_size}, lib, {}), std::runtime_error);
}

TEST_F(PipelineFixture, CachedTableIsReused) {
  const std::filesystem::path dir = *root_ / "models";
  const ObjectModel& box = (*models_)[0];
  save_model(dir / "obj_000001.ppf", build_model(box, BuildParams{}));
  ModelLibrary lib(dir, BuildParams{});
  EXPECT_EQ(lib.require(1).ppf.entry_count(), build_model(box, BuildParams{}).entry_count());
  ModelLibrary coarse(dir, BuildParams{0.1, 30});
  EXPECT_LT(coarse.require(1).ppf.cloud.size(), lib.get(1).ppf.cloud.size());
  std::filesystem::remove(dir / "obj_000001.ppf");
}

}  // namespace
}  // namespace maskppf
