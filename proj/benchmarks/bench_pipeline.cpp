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
#include "maskppf/pipeline.hpp"
#include "maskppf/ppf_match.hpp"
#include "maskppf/ppf_model.hpp"
#include "maskppf/rgbd_io.hpp"
#include "maskppf/synth.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

namespace maskppf {
namespace {

// One masked instance of the L-block in a synthetic scene.
struct Instance {
  ObjectModel object = make_l_block_model(3, 0.0015);
  PpfModel model = build_model(object);
  PointCloud masked;
  RigidPose gt;

  Instance() {
    SceneSpec spec;
    spec.models = {object};
    spec.camera = CameraIntrinsics{572.4, 573.6, 325.3, 242.0, 640, 480};
    spec.depth_noise = 0.002;
    spec.seed = 17;
    const SyntheticScene scene = generate_scene(spec);
    gt = scene.objects[0].pose;
    masked = select_masked(prepare_scene(scene.depth, spec.camera), scene.objects[0].mask, 0.05, object.diameter);
  }
};

const Instance& instance() {
  static const Instance inst;
  return inst;
}

void BM_BuildModel(benchmark::State& state) {
  const ObjectModel& object = instance().object;
  for (auto _ : state) benchmark::DoNotOptimize(build_model(object));
}
BENCHMARK(BM_BuildModel)->Unit(benchmark::kMillisecond);

void BM_VoteInstance(benchmark::State& state) {
  const Instance& inst = instance();
  MatchParams params;
  params.ref_sampling_stride = static_cast<int>(state.range(0));
  const SampledScene scene = sample_scene(inst.masked, inst.model.distance_step, inst.model.diameter);
  for (auto _ : state) benchmark::DoNotOptimize(vote_instance(scene, inst.model, params));
  state.counters["ref_points"] = static_cast<double>(scene.cloud.size()) / params.ref_sampling_stride;
}
BENCHMARK(BM_VoteInstance)->Arg(1)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ClusterPoses(benchmark::State& state) {
  const Instance& inst = instance();
  const MatchParams params;
  const SampledScene scene = sample_scene(inst.masked, inst.model.distance_step, inst.model.diameter);
  const std::vector<PoseHypothesis> hyps = vote_instance(scene, inst.model, params);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_poses(hyps, inst.model.diameter, params));
  state.counters["hypotheses"] = static_cast<double>(hyps.size());
}
BENCHMARK(BM_ClusterPoses)->Unit(benchmark::kMillisecond);

void BM_RefineIcp(benchmark::State& state) {
  const Instance& inst = instance();
  const double d = inst.object.diameter;
  const IcpTarget target = make_icp_target(inst.masked, d);
  const RigidPose init =
      compose(inst.gt, RigidPose::from_axis_angle(Vec3(1, 1, 0).normalized(), 5.0 * std::numbers::pi / 180.0,
                                                  Vec3(0.02 * d, 0, 0)));
  for (auto _ : state) benchmark::DoNotOptimize(refine_icp(init, inst.model.cloud, target, d));
}
BENCHMARK(BM_RefineIcp)->Unit(benchmark::kMillisecond);

void BM_EstimatePose(benchmark::State& state) {
  const Instance& inst = instance();
  const ModelEntry entry{inst.object, inst.model};
  PipelineConfig config;
  config.symmetry = false;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_pose(inst.masked, entry, config));
}
BENCHMARK(BM_EstimatePose)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace maskppf

BENCHMARK_MAIN();
