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

#include "maskppf/rgbd_io.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace maskppf {

void MatchParams::validate() const {
  if (ref_sampling_stride < 1) throw std::invalid_argument("ref_sampling_stride must be >= 1");
  if (!(peak_rel_threshold > 0.0 && peak_rel_threshold <= 1.0))
    throw std::invalid_argument("peak_rel_threshold must lie in (0, 1]");
  if (!(cluster_trans_thresh > 0.0) || !(cluster_rot_thresh > 0.0))
    throw std::invalid_argument("cluster thresholds must be positive");
  if (top_k_clusters < 1) throw std::invalid_argument("top_k_clusters must be >= 1");
  if (!(mask_dilation >= 0.0)) throw std::invalid_argument("mask_dilation must be nonnegative");
  if (n_alpha < 1) throw std::invalid_argument("n_alpha must be >= 1");
}

SampledScene sample_scene(const PointCloud& oriented, double step, double pair_radius) {
  if (!oriented.has_normals() && !oriented.empty())
    throw std::invalid_argument("sample_scene: scene cloud needs normals");
  SampledScene s;
  s.cloud = voxel_downsample(oriented, step);
  s.step = step;
  s.grid = SpatialGrid(s.cloud.points, pair_radius);
  return s;
}

std::vector<PoseHypothesis> vote_instance(const SampledScene& scene, const PpfModel& model,
                                          const MatchParams& params) {
  params.validate();
  if (scene.cloud.empty()) throw std::invalid_argument("vote_instance: empty scene cloud (empty or invalid mask)");
  if (std::abs(scene.step - model.distance_step) > 1e-9 * model.distance_step)
    throw std::invalid_argument("vote_instance: scene sampled at a different step than the model");

  const std::size_t n_model = model.cloud.size();
  const int n_alpha = params.n_alpha;
  const double bin_width = 2.0 * std::numbers::pi / n_alpha;
  const double inv_bin_width = 1.0 / bin_width;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<RigidPose> model_frames;
  model_frames.reserve(n_model);
  for (std::size_t m = 0; m < n_model; ++m)
    model_frames.push_back(canonical_frame(model.cloud.points[m], model.cloud.normals[m]));

  const auto& pts = scene.cloud.points;
  const auto& nrm = scene.cloud.normals;
  std::vector<int> acc(n_model * n_alpha);
  std::vector<std::uint32_t> neighbors;
  std::vector<PoseHypothesis> out;

  for (std::size_t r = 0; r < pts.size(); r += params.ref_sampling_stride) {
    std::fill(acc.begin(), acc.end(), 0);
    const Vec3& sr = pts[r];
    const Vec3& nr = nrm[r];
    const Mat3 align = rotation_to_x_axis(nr);
    scene.grid.radius_search(sr, model.diameter, neighbors);
    for (std::uint32_t i : neighbors) {
      if (i == r) continue;
      const Vec3 d = pts[i] - sr;
      if (d.squaredNorm() <= 0.0) continue;
      const PpfKey key = quantize_ppf(compute_ppf(sr, nr, pts[i], nrm[i]), model.distance_step, model.angle_step);
      const auto entries = model.lookup(key);
      if (entries.empty()) continue;
      const Vec3 q = align * d;
      const double alpha_scene = std::hypot(q.y(), q.z()) < 1e-12 ? 0.0 : std::atan2(-q.z(), q.y());
      // Bin of wrap(alpha_m - alpha_s) in (-pi, pi]; the difference lies in
      // (-2pi, 2pi] before wrapping.
      const double shift = std::numbers::pi - alpha_scene;
      int* const acc_data = acc.data();
      for (const PpfEntry& e : entries) {
        double a = static_cast<double>(e.alpha) + shift;  // alpha + pi, in (-pi, 3pi]
        if (a > two_pi) a -= two_pi;
        else if (a <= 0.0) a += two_pi;
        int bin = static_cast<int>(a * inv_bin_width);
        if (bin >= n_alpha) bin = n_alpha - 1;
        ++acc_data[static_cast<std::size_t>(e.ref_index) * n_alpha + bin];
      }
    }

    const int peak = *std::max_element(acc.begin(), acc.end());
    if (peak == 0) continue;
    const double threshold = params.peak_rel_threshold * peak;
    const RigidPose scene_to_canon_inv = invert(RigidPose(align, Vec3(-(align * sr))));
    for (std::size_t cell = 0; cell < acc.size(); ++cell) {
      if (acc[cell] < threshold) continue;
      const std::size_t m = cell / n_alpha;
      const int bin = static_cast<int>(cell % n_alpha);
      const double alpha = -std::numbers::pi + (bin + 0.5) * bin_width;
      const RigidPose rot_x(rotation_about_x(alpha), Vec3::Zero());
      out.push_back({compose(scene_to_canon_inv, compose(rot_x, model_frames[m])), acc[cell], static_cast<int>(r)});
    }
  }
  return out;
}

namespace {

bool hypothesis_before(const PoseHypothesis& a, const PoseHypothesis& b) {
  if (a.votes != b.votes) return a.votes > b.votes;
  if (a.ref_point != b.ref_point) return a.ref_point < b.ref_point;
  const auto key = [](const PoseHypothesis& h) {
    // Canonical quaternion sign so that q and -q order identically.
    Eigen::Vector4d q = h.pose.rotation.coeffs();
    if (q.w() < 0.0) q = -q;
    return std::make_tuple(h.pose.translation.x(), h.pose.translation.y(), h.pose.translation.z(), q.x(), q.y(),
                           q.z(), q.w());
  };
  return key(a) < key(b);
}

}  // namespace

std::vector<PoseCluster> cluster_poses(std::vector<PoseHypothesis> hyps, double diameter, const MatchParams& params) {
  std::sort(hyps.begin(), hyps.end(), hypothesis_before);

  struct Group {
    RigidPose seed;
    std::vector<Quat> rotations;
    std::vector<double> weights;
    Vec3 weighted_t = Vec3::Zero();
    int total_votes = 0;
  };
  std::vector<Group> groups;
  const double trans_gate = params.cluster_trans_thresh * diameter;
  // Seeds are bucketed by translation so that only nearby groups are tested;
  // the earliest qualifying group still wins.
  struct CellHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349669LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, CellHash> buckets;
  auto cell_of = [&](const Vec3& t) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(t.x() / trans_gate)),
                                       static_cast<std::int64_t>(std::floor(t.y() / trans_gate)),
                                       static_cast<std::int64_t>(std::floor(t.z() / trans_gate))};
  };
  for (const PoseHypothesis& h : hyps) {
    const auto c = cell_of(h.pose.translation);
    std::size_t found = groups.size();
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = buckets.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == buckets.end()) continue;
          for (std::size_t gi : it->second) {
            if (gi >= found) break;
            const Group& g = groups[gi];
            if ((g.seed.translation - h.pose.translation).norm() <= trans_gate &&
                rotation_angle_between(g.seed, h.pose) <= params.cluster_rot_thresh) {
              found = gi;
              break;
            }
          }
        }
    if (found == groups.size()) {
      groups.push_back({h.pose, {}, {}, Vec3::Zero(), 0});
      buckets[c].push_back(found);
    }
    Group* target = &groups[found];
    target->rotations.push_back(h.pose.rotation);
    target->weights.push_back(h.votes);
    target->weighted_t += h.votes * h.pose.translation;
    target->total_votes += h.votes;
  }

  std::vector<PoseCluster> out;
  out.reserve(groups.size());
  for (const Group& g : groups) {
    PoseCluster c;
    c.pose = RigidPose(average_rotations(g.rotations, g.weights), g.weighted_t / g.total_votes);
    c.total_votes = g.total_votes;
    c.members = static_cast<int>(g.rotations.size());
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PoseCluster& a, const PoseCluster& b) { return a.total_votes > b.total_votes; });
  if (out.size() > static_cast<std::size_t>(params.top_k_clusters)) out.resize(params.top_k_clusters);
  return out;
}

ScoringScene make_scoring_scene(const PointCloud& oriented, double model_step) {
  if (!oriented.has_normals() && !oriented.empty())
    throw std::invalid_argument("make_scoring_scene: scene cloud needs normals");
  ScoringScene s;
  s.cloud = oriented;
  s.grid = SpatialGrid(s.cloud.points, 2.0 * model_step);
  return s;
}

double fitting_score(const RigidPose& pose, const PpfModel& model, const ScoringScene& scene,
                     bool camera_facing_only) {
  if (model.cloud.empty()) return 0.0;
  const double radius = 2.0 * model.distance_step;
  const double min_cos = std::cos(30.0 * std::numbers::pi / 180.0);
  const Mat3 R = pose.rotation_matrix();
  std::vector<std::uint32_t> near;
  std::size_t hits = 0, counted = 0;
  for (std::size_t m = 0; m < model.cloud.size(); ++m) {
    const Vec3 p = R * model.cloud.points[m] + pose.translation;
    const Vec3 n = R * model.cloud.normals[m];
    if (camera_facing_only && n.dot(p) >= 0.0) continue;
    ++counted;
    scene.grid.radius_search(p, radius, near);
    for (std::uint32_t i : near)
      if (scene.cloud.normals[i].dot(n) >= min_cos) {
        ++hits;
        break;
      }
  }
  return counted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(counted);
}

}  // namespace maskppf
