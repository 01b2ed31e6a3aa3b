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


// maskppf: mask-restricted point-pair pose estimation and its tooling.

#include "maskppf/eval.hpp"
#include "maskppf/image.hpp"
#include "maskppf/pipeline.hpp"
#include "maskppf/ppf_model.hpp"
#include "maskppf/rgbd_io.hpp"
#include "maskppf/synth.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace maskppf;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_st("maskppf");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PPF_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ignoring unknown PPF_LOG level '{}'", env);
  }
}

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no PNG files in " + dir.string());
  return out;
}

// --- run-detect ---

struct DetectOptions {
  fs::path models, scene, detections, out;
  PipelineConfig config;
  bool print_config = false;
};

int run_detect_cmd(const DetectOptions& o) {
  if (o.print_config) {
    std::cout << o.config.describe();
    return 0;
  }
  for (const auto& [flag, value] : {std::pair{"--models", &o.models}, {"--scene", &o.scene}, {"--detections", &o.detections}})
    if (value->empty()) throw std::runtime_error(std::string(flag) + " is required");
  o.config.validate();
  const DetectionSet dets = load_detections(o.detections);
  spdlog::info("{} detections from {}", dets.size(), o.detections.string());
  ModelLibrary library(o.models, BuildParams{o.config.tau_d, o.config.n_angle});
  const DetectRun run = run_detect(o.scene, dets, library, o.config);
  for (const SkippedDetection& s : run.skipped)
    spdlog::warn("skipped detection {} (image {}): {}", s.index, s.image_id, s.reason);
  if (o.out.empty())
    std::cout << format_bop_csv(run.rows);
  else
    write_bop_csv(o.out, run.rows);
  spdlog::info("{} poses written", run.rows.size());
  return 0;
}

// --- build-model ---

struct BuildOptions {
  fs::path models, ply, out;
  int object_id = -1;
  double tau_d = 0.05;
  int n_angle = 30;
};

int build_model_cmd(const BuildOptions& o) {
  ObjectModel object;
  fs::path out = o.out;
  if (!o.ply.empty()) {
    object = load_ply(o.ply, std::max(o.object_id, 0));
    if (out.empty()) out = fs::path(o.ply).replace_extension(".ppf");
  } else {
    if (o.models.empty() || o.object_id < 0) throw std::runtime_error("give --ply FILE or --models DIR with --obj-id N");
    object = load_object_model(o.models, o.object_id);
    if (out.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "obj_%06d.ppf", o.object_id);
      out = o.models / name;
    }
  }
  const PpfModel model = build_model(object, BuildParams{o.tau_d, o.n_angle});
  save_model(out, model);
  spdlog::info("{} sampled points, {} entries -> {}", model.cloud.size(), model.entry_count(), out.string());
  return 0;
}

// --- eval-pose ---

struct EvalPoseOptions {
  fs::path results, scene, models, scene_gt;
};

int eval_pose_cmd(const EvalPoseOptions& o) {
  const std::vector<PoseResult> rows = read_bop_csv(o.results);
  const auto gt = load_scene_gt(o.scene_gt.empty() ? o.scene / "scene_gt.json" : o.scene_gt);
  std::map<int, ObjectModel> models;
  auto model = [&](int id) -> const ObjectModel& {
    auto it = models.find(id);
    if (it == models.end()) it = models.emplace(id, load_object_model(o.models, id)).first;
    return it->second;
  };
  std::vector<InstanceError> errors;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (const auto& [image_id, instances] : gt) {
    const CameraIntrinsics K = load_scene(o.scene, image_id).camera;
    std::map<int, std::vector<const GtInstance*>> by_obj;
    for (const GtInstance& g : instances) by_obj[g.object_id].push_back(&g);
    for (const auto& [obj, targets] : by_obj) {
      const ObjectModel& m = model(obj);
      // Highest-scoring estimates first, at most one per ground-truth instance.
      std::vector<const PoseResult*> est;
      for (const PoseResult& r : rows)
        if (r.image_id == image_id && r.object_id == obj) est.push_back(&r);
      std::stable_sort(est.begin(), est.end(), [](auto* a, auto* b) { return a->score > b->score; });
      if (est.size() > targets.size()) est.resize(targets.size());
      std::vector<bool> taken(targets.size(), false);
      std::vector<InstanceError> per(targets.size(), InstanceError{kInf, kInf, m.diameter});
      for (const PoseResult* e : est) {
        std::optional<std::size_t> best;
        double best_err = kInf;
        for (std::size_t t = 0; t < targets.size(); ++t) {
          if (taken[t]) continue;
          const double err = mssd(e->pose, targets[t]->pose, m);
          if (err < best_err) best_err = err, best = t;
        }
        if (!best) continue;
        taken[*best] = true;
        per[*best].mssd = best_err;
        per[*best].mspd = mspd(e->pose, targets[*best]->pose, m, K, K.width);
      }
      errors.insert(errors.end(), per.begin(), per.end());
    }
  }
  const PoseErrorReport report = average_recall(errors);
  spdlog::info("{} instances, AR_MSSD {} AR_MSPD {}", errors.size(), report.ar_mssd, report.ar_mspd);
  std::cout << "AR " << format_shortest(report.ar) << '\n';
  return 0;
}

// --- eval-map / select-detector ---

struct MapOptions {
  fs::path predictions, gt;
  std::vector<fs::path> candidates;
  double iou = 0.5;
  bool class_agnostic = false;
};

int eval_map_cmd(const MapOptions& o) {
  const MapResult r = map_at_iou(load_detections(o.predictions), load_detections(o.gt), o.iou, o.class_agnostic);
  for (const auto& [cls, ap] : r.ap) spdlog::info("class {} AP {}", cls, ap);
  std::cout << "mAP " << format_shortest(r.map) << '\n';
  return 0;
}

int select_detector_cmd(const MapOptions& o) {
  if (o.candidates.size() < 2) throw std::runtime_error("give at least two --candidate files");
  std::vector<CandidateModel> candidates;
  for (const fs::path& p : o.candidates) candidates.push_back({p.stem().string(), load_detections(p)});
  std::cout << select_best(candidates, load_detections(o.gt), o.iou, o.class_agnostic) << '\n';
  return 0;
}

// --- synth-scenes ---

struct SynthOptions {
  fs::path out;
  int n_images = 10;
  int max_objects = 3;
  double noise = 0.002;
  std::uint64_t seed = 0;
  bool plane = false;
};

int synth_scenes_cmd(const SynthOptions& o) {
  if (o.n_images < 1 || o.max_objects < 1) throw std::runtime_error("--n-images and --max-objects must be positive");
  const std::vector<ObjectModel> models{make_box_model(1, Vec3(0.12, 0.08, 0.04), 0.0015, std::uint64_t{7}),
                                        make_cylinder_model(2, 0.03, 0.1, 0.0015), make_l_block_model(3, 0.0015)};
  write_models_dir(o.out / "models", models);
  std::vector<SyntheticScene> images;
  for (int i = 0; i < o.n_images; ++i) {
    SceneSpec spec;
    spec.models = models;
    spec.n_objects = 1 + i % o.max_objects;
    spec.camera = CameraIntrinsics{572.4, 573.6, 325.3, 242.0, 640, 480};
    spec.depth_noise = o.noise;
    spec.seed = derive_seed(o.seed, static_cast<std::uint64_t>(i));
    if (o.plane) {
      PlaneSpec p;
      p.normal = Vec3(0, 0.35, -1).normalized();
      p.offset = p.normal.dot(Vec3(0, 0, 1.6));
      spec.plane = p;
    }
    images.push_back(generate_scene(spec));
  }
  write_bop_scene(o.out / "scene", 1, images);
  spdlog::info("{} images -> {}", images.size(), (o.out / "scene").string());
  return 0;
}

// --- compose-train ---

struct ComposeOptions {
  fs::path crops, backgrounds, out;
  TrainingSetParams params;
};

int compose_train_cmd(const ComposeOptions& o) {
  std::vector<Crop> crops;
  for (const fs::path& p : png_files(o.crops)) {
    // Class id is the leading integer of the file name, as in 3_mug.png.
    const std::string stem = p.stem().string();
    std::size_t used = 0;
    int cls = 0;
    try {
      cls = std::stoi(stem, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw std::runtime_error("crop name must start with a class id: " + p.filename().string());
    crops.push_back({read_rgba_png(p), cls});
  }
  std::vector<ColorImage> backgrounds;
  for (const fs::path& p : png_files(o.backgrounds)) backgrounds.push_back(read_color_png(p));
  const TrainingSetSummary s = build_training_set(crops, backgrounds, o.params, o.out);
  std::cout << "train " << s.n_train << " val " << s.n_val << " max_objects " << s.max_annotations << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Mask-restricted point-pair pose estimation"};
  app.require_subcommand(1);
  app.failure_message([](const CLI::App*, const CLI::Error& e) { return std::string("error: ") + e.what() + "\n"; });

  DetectOptions det;
  auto* rd = app.add_subcommand("run-detect", "Estimate one pose per detection and write a BOP results CSV");
  rd->add_option("--models", det.models, "Models directory (obj_XXXXXX.ply, models_info.json)");
  rd->add_option("--scene", det.scene, "BOP scene directory");
  rd->add_option("--detections", det.detections, "Detections JSON");
  rd->add_option("--out", det.out, "Output CSV (stdout when omitted)");
  rd->add_option("--tau-d", det.config.tau_d, "Sampling step relative to the diameter")->capture_default_str();
  rd->add_option("--n-angle", det.config.n_angle, "Angle bins over [0, pi]")->capture_default_str();
  rd->add_option("--mask-dilation", det.config.match.mask_dilation, "Mask dilation relative to the bbox diagonal")
      ->capture_default_str();
  rd->add_option("--threads", det.config.threads, "Worker threads")->capture_default_str();
  rd->add_flag("--no-refine", [&](std::int64_t) { det.config.refine = false; }, "Skip ICP refinement");
  rd->add_flag("--no-sym", [&](std::int64_t) { det.config.symmetry = false; }, "Skip symmetry selection");
  rd->add_flag("--fixed-time", det.config.fixed_time, "Write 0 in the time column");
  rd->add_flag("--print-config", det.print_config, "Print effective parameters and exit");

  BuildOptions bld;
  auto* bm = app.add_subcommand("build-model", "Build and save a point-pair table");
  bm->add_option("--models", bld.models, "Models directory");
  bm->add_option("--obj-id", bld.object_id, "Object id");
  bm->add_option("--ply", bld.ply, "Oriented PLY file instead of a models directory")->check(CLI::ExistingFile);
  bm->add_option("--out", bld.out, "Output file (default next to the model)");
  bm->add_option("--tau-d", bld.tau_d, "Sampling step relative to the diameter")->capture_default_str();
  bm->add_option("--n-angle", bld.n_angle, "Angle bins over [0, pi]")->capture_default_str();

  EvalPoseOptions ep;
  auto* evp = app.add_subcommand("eval-pose", "Average recall of a results CSV against scene_gt.json");
  evp->add_option("--results", ep.results, "Results CSV")->required()->check(CLI::ExistingFile);
  evp->add_option("--scene", ep.scene, "BOP scene directory")->required()->check(CLI::ExistingDirectory);
  evp->add_option("--models", ep.models, "Models directory")->required()->check(CLI::ExistingDirectory);
  evp->add_option("--scene-gt", ep.scene_gt, "Ground truth (default <scene>/scene_gt.json)");

  MapOptions mo;
  auto* em = app.add_subcommand("eval-map", "Mask mAP of predictions against ground-truth detections");
  em->add_option("--predictions", mo.predictions, "Predicted detections JSON")->required()->check(CLI::ExistingFile);
  em->add_option("--gt", mo.gt, "Ground-truth detections JSON")->required()->check(CLI::ExistingFile);
  em->add_option("--iou", mo.iou, "IoU threshold")->capture_default_str();
  em->add_flag("--class-agnostic", mo.class_agnostic, "Ignore object ids when matching");

  MapOptions so;
  auto* sd = app.add_subcommand("select-detector", "Print the candidate with the highest mAP");
  sd->add_option("--candidate", so.candidates, "Candidate detections JSON (name = file stem)")
      ->required()
      ->check(CLI::ExistingFile);
  sd->add_option("--gt", so.gt, "Ground-truth detections JSON")->required()->check(CLI::ExistingFile);
  sd->add_option("--iou", so.iou, "IoU threshold")->capture_default_str();
  sd->add_flag("--class-agnostic", so.class_agnostic, "Ignore object ids when matching");

  SynthOptions sy;
  auto* ss = app.add_subcommand("synth-scenes", "Write procedural models and a synthetic BOP scene");
  ss->add_option("--out", sy.out, "Output directory")->required();
  ss->add_option("--n-images", sy.n_images, "Images")->capture_default_str();
  ss->add_option("--max-objects", sy.max_objects, "Objects per image cycle 1..N")->capture_default_str();
  ss->add_option("--noise", sy.noise, "Depth noise sigma in meters")->capture_default_str();
  ss->add_option("--seed", sy.seed, "Seed")->capture_default_str();
  ss->add_flag("--plane", sy.plane, "Add a background plane");

  ComposeOptions co;
  auto* ct = app.add_subcommand("compose-train", "Cut-paste training set with a 90/10 split");
  ct->add_option("--crops", co.crops, "Directory of RGBA crops named <class>_*.png")->required();
  ct->add_option("--backgrounds", co.backgrounds, "Directory of background PNGs")->required();
  ct->add_option("--out", co.out, "Output directory")->required();
  ct->add_option("--n-images", co.params.n_images, "Images")->capture_default_str();
  ct->add_option("--val-fraction", co.params.val_fraction, "Validation fraction")->capture_default_str();
  ct->add_option("--augment", co.params.augment_fraction, "Augmented fraction of training images")
      ->capture_default_str();
  ct->add_option("--max-objects", co.params.compose.max_objects, "Pastes per image at most")->capture_default_str();
  ct->add_option("--seed", co.params.seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*rd) return run_detect_cmd(det);
    if (*bm) return build_model_cmd(bld);
    if (*evp) return eval_pose_cmd(ep);
    if (*em) return eval_map_cmd(mo);
    if (*sd) return select_detector_cmd(so);
    if (*ss) return synth_scenes_cmd(sy);
    if (*ct) return compose_train_cmd(co);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
