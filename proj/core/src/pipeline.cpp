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
#include "maskppf/sym_select.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace maskppf {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (!(tau_d > 0.0 && tau_d <= 0.5)) throw std::invalid_argument("tau_d must be in (0, 0.5]");
  if (n_angle < 2) throw std::invalid_argument("n_angle must be >= 2");
  if (prescreen_clusters < 1) throw std::invalid_argument("prescreen_clusters must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  match.validate();
  icp.validate();
}

std::string PipelineConfig::describe() const {
  std::ostringstream os;
  os << "tau_d = " << tau_d << '\n'
     << "n_angle = " << n_angle << '\n'
     << "ref_sampling_stride = " << match.ref_sampling_stride << '\n'
     << "peak_rel_threshold = " << match.peak_rel_threshold << '\n'
     << "cluster_trans_thresh = " << match.cluster_trans_thresh << '\n'
     << "cluster_rot_thresh = " << match.cluster_rot_thresh << '\n'
     << "top_k_clusters = " << match.top_k_clusters << '\n'
     << "mask_dilation = " << match.mask_dilation << '\n'
     << "prescreen_clusters = " << prescreen_clusters << '\n'
     << "n_alpha = " << match.n_alpha << '\n'
     << "icp_max_iters = " << icp.max_iters << '\n'
     << "icp_corr_dist_start = " << icp.corr_dist_start << '\n'
     << "icp_corr_dist_end = " << icp.corr_dist_end << '\n'
     << "icp_converge_rot = " << icp.converge_rot << '\n'
     << "icp_converge_trans = " << icp.converge_trans << '\n'
     << "camera_facing_fit = " << (camera_facing_fit ? "on" : "off") << '\n'
     << "refine = " << (refine ? "on" : "off") << '\n'
     << "symmetry = " << (symmetry ? "on" : "off") << '\n'
     << "threads = " << threads << '\n'
     << "fixed_time = " << (fixed_time ? "on" : "off") << '\n';
  return os.str();
}

namespace {

std::string model_file(int object_id, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "obj_%06d.%s", object_id, ext);
  return buf;
}

// Model points whose normal faces the camera under `pose`; hidden points would
// otherwise pair with the visible surface inside the gate.
PointCloud camera_facing(const PointCloud& model, const RigidPose& pose) {
  PointCloud out;
  const Mat3 R = pose.rotation_matrix();
  for (std::size_t i = 0; i < model.size(); ++i) {
    if ((R * model.normals[i]).dot(R * model.points[i] + pose.translation) >= 0.0) continue;
    out.points.push_back(model.points[i]);
    out.normals.push_back(model.normals[i]);
  }
  return out;
}

}  // namespace

double mask_agreement(const RigidPose& pose, const PointCloud& model, const CameraIntrinsics& K,
                      const BinaryMask& mask) {
  const Mat3 R = pose.rotation_matrix();
  std::size_t counted = 0, inside = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const Vec3 p = R * model.points[i] + pose.translation;
    if ((R * model.normals[i]).dot(p) >= 0.0 || p.z() <= 0.0) continue;
    ++counted;
    const Eigen::Vector2d uv = K.project(p);
    const double u = std::floor(uv.x()), v = std::floor(uv.y());
    if (u >= 0 && v >= 0 && u < mask.width && v < mask.height && mask.at(static_cast<int>(u), static_cast<int>(v)))
      ++inside;
  }
  return counted == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(counted);
}

ModelLibrary::ModelLibrary(fs::path dir, BuildParams params) : dir_(std::move(dir)), params_(params) {}

const ModelEntry& ModelLibrary::require(int object_id) {
  if (auto it = entries_.find(object_id); it != entries_.end()) return it->second;
  if (!fs::exists(dir_ / model_file(object_id, "ply")))
    throw std::runtime_error("no model for obj_id " + std::to_string(object_id) + " in " + dir_.string());
  ModelEntry e;
  e.object = load_object_model(dir_, object_id);
  const fs::path table = dir_ / model_file(object_id, "ppf");
  bool loaded = false;
  if (fs::exists(table)) {
    PpfModel m = load_model(table);
    const double want = params_.relative_sampling * m.diameter;
    if (m.object_id == object_id && m.n_angle == params_.n_angle &&
        std::abs(m.distance_step - want) <= 1e-9 * std::max(1.0, want)) {
      e.ppf = std::move(m);
      loaded = true;
    }
  }
  if (!loaded) e.ppf = build_model(e.object, params_);
  return entries_.emplace(object_id, std::move(e)).first->second;
}

const ModelEntry& ModelLibrary::get(int object_id) const {
  auto it = entries_.find(object_id);
  if (it == entries_.end()) throw std::out_of_range("no model for obj_id " + std::to_string(object_id));
  return it->second;
}

void ModelLibrary::add(ModelEntry entry) {
  const int id = entry.object.object_id;
  entries_.insert_or_assign(id, std::move(entry));
}

OrganizedCloud prepare_scene(const DepthMap& depth, const CameraIntrinsics& K) {
  return estimate_normals(depth, K, unproject_depth(depth, K));
}

PointCloud select_masked(const OrganizedCloud& scene, const BinaryMask& mask, double dilation, double max_range) {
  if (mask.width != scene.width || mask.height != scene.height)
    throw std::invalid_argument("mask size differs from the scene");
  const BoundingBox b = mask_bbox(mask);
  const int radius = static_cast<int>(std::lround(dilation * std::hypot(b.w, b.h)));
  const BinaryMask region = dilate_mask(mask, radius);
  const PointCloud& c = scene.cloud;

  std::optional<Vec3> center;
  if (std::isfinite(max_range)) {
    std::array<std::vector<double>, 3> coords;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (mask.bits[static_cast<std::size_t>(scene.pixel_index[i])])
        for (int k = 0; k < 3; ++k) coords[k].push_back(c.points[i][k]);
    if (!coords[0].empty()) {
      Vec3 m;
      for (int k = 0; k < 3; ++k) {
        auto mid = coords[k].begin() + static_cast<std::ptrdiff_t>(coords[k].size() / 2);
        std::nth_element(coords[k].begin(), mid, coords[k].end());
        m[k] = *mid;
      }
      center = m;
    }
  }

  PointCloud out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!region.bits[static_cast<std::size_t>(scene.pixel_index[i])]) continue;
    if (center && (c.points[i] - *center).norm() > max_range) continue;
    out.points.push_back(c.points[i]);
    if (c.has_normals()) out.normals.push_back(c.normals[i]);
    if (c.has_colors()) out.colors.push_back(c.colors[i]);
  }
  return out;
}

std::optional<InstanceResult> estimate_pose(const PointCloud& points, const ModelEntry& model,
                                            const PipelineConfig& config, const InstanceContext& context) {
  const CameraIntrinsics* K = context.camera;
  const PpfModel& ppf = model.ppf;
  if (points.empty()) return std::nullopt;
  const auto t0 = std::chrono::steady_clock::now();
  const SampledScene sampled = sample_scene(points, ppf.distance_step, ppf.diameter);
  if (sampled.cloud.empty()) return std::nullopt;
  std::vector<PoseHypothesis> hyps = vote_instance(sampled, ppf, config.match);
  MatchParams pool_params = config.match;
  pool_params.top_k_clusters = std::max(config.match.top_k_clusters, config.prescreen_clusters);
  std::vector<PoseCluster> clusters = cluster_poses(std::move(hyps), ppf.diameter, pool_params);
  if (clusters.empty()) return std::nullopt;
  InstanceResult result;
  result.vote_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Scoring and refinement use the undilated support when available so that
  // background caught by the dilation ring cannot explain a pose.
  const PointCloud& support = context.support ? *context.support : points;
  const ScoringScene scoring = make_scoring_scene(support, ppf.distance_step);
  const bool use_mask = context.mask && K;
  auto rank_of = [&](const PoseCluster& c) {
    return use_mask ? c.fit * mask_agreement(c.pose, ppf.cloud, *K, *context.mask) : c.fit;
  };

  // Cheap pass over the whole pool, then refinement of the best few.
  std::vector<double> rank(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    clusters[i].fit = fitting_score(clusters[i].pose, ppf, scoring, config.camera_facing_fit);
    rank[i] = rank_of(clusters[i]);
  }
  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] > rank[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(config.match.top_k_clusters)));
  std::sort(order.begin(), order.end());
  std::vector<PoseCluster> kept;
  for (std::size_t i : order) kept.push_back(clusters[i]);
  clusters = std::move(kept);

  std::optional<IcpTarget> target;
  if (config.refine && !support.empty())
    target = make_icp_target(voxel_downsample(support, ppf.distance_step), ppf.diameter, config.icp);

  int best = -1;
  double best_rank = 0.0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    PoseCluster& c = clusters[i];
    if (target) {
      try {
        c.pose = refine_icp(c.pose, camera_facing(ppf.cloud, c.pose), *target, ppf.diameter, config.icp).pose;
      } catch (const NoCorrespondences&) {
        // Keep the voted pose; its score will reflect the poor overlap.
      }
      c.fit = fitting_score(c.pose, ppf, scoring, config.camera_facing_fit);
    }
    const double r = rank_of(c);
    if (best < 0 || r > best_rank) {
      best = static_cast<int>(i);
      best_rank = r;
    }
  }
  result.pose = clusters[static_cast<std::size_t>(best)].pose;
  result.score = clusters[static_cast<std::size_t>(best)].fit;
  if (config.symmetry && context.rgb && K) {
    result.pose = select_symmetry(*context.rgb, model.object, result.pose, *K, ppf.distance_step).pose;
  }
  result.clusters = std::move(clusters);
  return result;
}

DetectRun run_detect(const fs::path& scene_dir, const DetectionSet& detections, ModelLibrary& library,
                     const PipelineConfig& config) {
  config.validate();
  for (const Detection& d : detections) library.require(d.object_id);

  // Images in order of first mention; detections keep their list order.
  std::vector<int> images;
  std::map<int, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    auto [it, fresh] = by_image.try_emplace(detections[i].image_id);
    if (fresh) images.push_back(detections[i].image_id);
    it->second.push_back(i);
  }

  DetectRun run;
  std::vector<std::optional<PoseResult>> rows(detections.size());
  for (int image_id : images) {
    const auto t0 = std::chrono::steady_clock::now();
    const SceneFrame frame = load_scene(scene_dir, image_id);
    const OrganizedCloud scene = prepare_scene(frame.depth, frame.camera);
    const std::vector<std::size_t>& todo = by_image[image_id];
    std::vector<std::optional<InstanceResult>> found(todo.size());
    std::vector<std::string> errors(todo.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < todo.size(); k = next++) {
        const Detection& d = detections[todo[k]];
        try {
          const double range = library.get(d.object_id).ppf.diameter;
          const PointCloud masked = select_masked(scene, d.mask, config.match.mask_dilation, range);
          const PointCloud support = select_masked(scene, d.mask, 0.0, range);
          if (masked.empty()) {
            errors[k] = "empty masked cloud";
            continue;
          }
          const InstanceContext context{frame.rgb ? &*frame.rgb : nullptr, &frame.camera, &d.mask, &support};
          found[k] = estimate_pose(masked, library.get(d.object_id), config, context);
          if (!found[k]) errors[k] = "no pose hypothesis";
        } catch (const std::exception& e) {
          errors[k] = e.what();
        }
      }
    };
    const int n_threads = std::min<int>(config.threads, static_cast<int>(todo.size()));
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (std::size_t k = 0; k < todo.size(); ++k)
      if (errors[k].rfind("mask size", 0) == 0) throw std::runtime_error(errors[k]);

    const double elapsed =
        config.fixed_time ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t k = 0; k < todo.size(); ++k) {
      const Detection& d = detections[todo[k]];
      if (!found[k]) {
        run.skipped.push_back({image_id, todo[k], errors[k]});
        continue;
      }
      rows[todo[k]] = PoseResult{d.scene_id, d.image_id, d.object_id, found[k]->score, found[k]->pose, elapsed};
    }
  }
  for (auto& r : rows)
    if (r) run.rows.push_back(*r);
  return run;
}

}  // namespace maskppf
