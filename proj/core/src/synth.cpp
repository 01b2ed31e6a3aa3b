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

#include "maskppf/synth.hpp"

#include "maskppf/render.hpp"
#include "maskppf/rgbd_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace maskppf {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  // splitmix64 finalizer over a mix of the three inputs.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1) + 0xD1B54A32D192ED03ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::array<Rgb, 6> kFacePalette{{{220, 40, 40}, {40, 180, 60}, {50, 80, 220}, {230, 200, 40},
                                           {200, 60, 200}, {40, 200, 210}}};

// Cell-centered samples over one face of an axis-aligned box.
void sample_box_face(const Vec3& lo, const Vec3& hi, int axis, bool positive, double spacing, PointCloud& out,
                     const std::function<Rgb(double, double)>& color) {
  const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
  const double len1 = hi[a1] - lo[a1], len2 = hi[a2] - lo[a2];
  const int n1 = std::max(1, static_cast<int>(std::ceil(len1 / spacing - 1e-9)));
  const int n2 = std::max(1, static_cast<int>(std::ceil(len2 / spacing - 1e-9)));
  Vec3 normal = Vec3::Zero();
  normal[axis] = positive ? 1.0 : -1.0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      Vec3 p;
      p[axis] = positive ? hi[axis] : lo[axis];
      p[a1] = lo[a1] + (i + 0.5) * len1 / n1;
      p[a2] = lo[a2] + (j + 0.5) * len2 / n2;
      out.points.push_back(p);
      out.normals.push_back(normal);
      out.colors.push_back(color(p[a1] - lo[a1], p[a2] - lo[a2]));
    }
}

std::vector<RigidPose> box_half_turns() {
  return {RigidPose::identity(), RigidPose::from_axis_angle(Vec3::UnitX(), std::numbers::pi),
          RigidPose::from_axis_angle(Vec3::UnitY(), std::numbers::pi),
          RigidPose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi)};
}

double max_corner_distance(const std::vector<Vec3>& corners) {
  double best = 0.0;
  for (const Vec3& a : corners)
    for (const Vec3& b : corners) best = std::max(best, (a - b).norm());
  return best;
}

std::vector<Vec3> box_corners(const Vec3& lo, const Vec3& hi) {
  std::vector<Vec3> c;
  for (int k = 0; k < 8; ++k) c.emplace_back(k & 1 ? hi.x() : lo.x(), k & 2 ? hi.y() : lo.y(), k & 4 ? hi.z() : lo.z());
  return c;
}

Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Quat q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized();
}

std::string zero_pad(int v, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << v;
  return os.str();
}

json pose_json_rotation(const RigidPose& p) {
  const Mat3 R = p.rotation_matrix();
  json r = json::array();
  for (int i = 0; i < 9; ++i) r.push_back(R(i / 3, i % 3));
  return r;
}

json pose_json_translation(const RigidPose& p) {
  return json::array({p.translation.x() * 1e3, p.translation.y() * 1e3, p.translation.z() * 1e3});
}

}  // namespace

std::vector<RigidPose> cube_symmetries() {
  std::vector<RigidPose> out;
  std::array<int, 3> perm{0, 1, 2};
  do {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3 R = Mat3::Zero();
      for (int r = 0; r < 3; ++r) R(r, perm[r]) = (signs >> r) & 1 ? -1.0 : 1.0;
      if (R.determinant() > 0) out.emplace_back(R, Vec3::Zero());
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  // Identity first.
  std::stable_partition(out.begin(), out.end(),
                        [](const RigidPose& p) { return rotation_angle_between(p, RigidPose::identity()) < 1e-9; });
  return out;
}

ObjectModel make_box_model(int object_id, const Vec3& size, double spacing, std::optional<std::uint64_t> texture_seed) {
  ObjectModel m;
  m.object_id = object_id;
  const Vec3 hi = size / 2.0, lo = -hi;
  constexpr double kTile = 0.01;
  int face = 0;
  for (int axis = 0; axis < 3; ++axis)
    for (bool positive : {false, true}) {
      std::function<Rgb(double, double)> color;
      if (texture_seed) {
        // Independent random tile colors per face.
        const std::uint64_t fs = derive_seed(*texture_seed, static_cast<std::uint64_t>(face));
        color = [fs](double s, double t) {
          const auto i = static_cast<std::uint64_t>(std::floor(s / kTile));
          const auto j = static_cast<std::uint64_t>(std::floor(t / kTile));
          const std::uint64_t h = derive_seed(fs, i * 1000 + j);
          return Rgb{static_cast<std::uint8_t>(h & 0xFF), static_cast<std::uint8_t>((h >> 8) & 0xFF),
                     static_cast<std::uint8_t>((h >> 16) & 0xFF)};
        };
      } else {
        const Rgb c = kFacePalette[face];
        color = [c](double, double) { return c; };
      }
      sample_box_face(lo, hi, axis, positive, spacing, m.cloud, color);
      ++face;
    }
  m.diameter = size.norm();
  const bool cube = std::abs(size.x() - size.y()) < 1e-12 && std::abs(size.y() - size.z()) < 1e-12;
  m.symmetries = cube ? cube_symmetries() : box_half_turns();
  return m;
}

ObjectModel make_cylinder_model(int object_id, double radius, double height, double spacing, int continuous_steps) {
  ObjectModel m;
  m.object_id = object_id;
  const Rgb side{200, 120, 60}, cap{90, 90, 200};
  const int n_theta = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / spacing)));
  const int n_z = std::max(1, static_cast<int>(std::ceil(height / spacing)));
  for (int i = 0; i < n_theta; ++i) {
    const double th = 2.0 * std::numbers::pi * (i + 0.5) / n_theta;
    const Vec3 n(std::cos(th), std::sin(th), 0.0);
    for (int k = 0; k < n_z; ++k) {
      m.cloud.points.push_back(Vec3(radius * n.x(), radius * n.y(), -height / 2 + (k + 0.5) * height / n_z));
      m.cloud.normals.push_back(n);
      m.cloud.colors.push_back(side);
    }
  }
  const int n_cap = std::max(1, static_cast<int>(std::ceil(2.0 * radius / spacing)));
  for (int i = 0; i < n_cap; ++i)
    for (int j = 0; j < n_cap; ++j) {
      const double x = -radius + (i + 0.5) * 2.0 * radius / n_cap;
      const double y = -radius + (j + 0.5) * 2.0 * radius / n_cap;
      if (x * x + y * y > radius * radius) continue;
      for (double sgn : {-1.0, 1.0}) {
        m.cloud.points.push_back(Vec3(x, y, sgn * height / 2));
        m.cloud.normals.push_back(Vec3(0, 0, sgn));
        m.cloud.colors.push_back(cap);
      }
    }
  m.diameter = std::hypot(2.0 * radius, height);
  m.symmetries.clear();
  const auto spins = discretize_continuous_symmetry(Vec3::UnitZ(), Vec3::Zero(), continuous_steps);
  for (const RigidPose& flip : {RigidPose::identity(), RigidPose::from_axis_angle(Vec3::UnitX(), std::numbers::pi)})
    for (const RigidPose& s : spins) m.symmetries.push_back(compose(flip, s));
  return m;
}

ObjectModel make_l_block_model(int object_id, double spacing) {
  const Vec3 a_lo(-0.06, -0.02, -0.0125), a_hi(0.06, 0.02, 0.0125);
  const Vec3 b_lo(0.02, 0.02, -0.0125), b_hi(0.06, 0.06, 0.0125);
  auto inside = [](const Vec3& p, const Vec3& lo, const Vec3& hi) {
    return (p.array() >= lo.array() - 1e-12).all() && (p.array() <= hi.array() + 1e-12).all();
  };
  PointCloud a, b;
  int face = 0;
  for (int axis = 0; axis < 3; ++axis)
    for (bool positive : {false, true}) {
      const Rgb c = kFacePalette[face++];
      auto flat = [c](double, double) { return c; };
      sample_box_face(a_lo, a_hi, axis, positive, spacing, a, flat);
      sample_box_face(b_lo, b_hi, axis, positive, spacing, b, flat);
    }
  ObjectModel m;
  m.object_id = object_id;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!inside(a.points[i], b_lo, b_hi)) {
      m.cloud.points.push_back(a.points[i]);
      m.cloud.normals.push_back(a.normals[i]);
      m.cloud.colors.push_back(a.colors[i]);
    }
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!inside(b.points[i], a_lo, a_hi)) {
      m.cloud.points.push_back(b.points[i]);
      m.cloud.normals.push_back(b.normals[i]);
      m.cloud.colors.push_back(Rgb{static_cast<std::uint8_t>(255 - b.colors[i][0]),
                                   static_cast<std::uint8_t>(255 - b.colors[i][1]), b.colors[i][2]});
    }
  // Center on the bounding box so the bounding sphere stays tight.
  Vec3 lo = m.cloud.points.front(), hi = lo;
  for (const Vec3& p : m.cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 center = 0.5 * (lo + hi);
  for (Vec3& p : m.cloud.points) p -= center;
  auto corners = box_corners(a_lo, a_hi);
  const auto cb = box_corners(b_lo, b_hi);
  corners.insert(corners.end(), cb.begin(), cb.end());
  m.diameter = max_corner_distance(corners);
  return m;
}

void SceneSpec::validate() const {
  if (models.empty()) throw std::invalid_argument("SceneSpec: no models");
  if (n_objects < 1) throw std::invalid_argument("SceneSpec: n_objects must be >= 1");
  if (depth_noise < 0.0) throw std::invalid_argument("SceneSpec: depth noise must be nonnegative");
  camera.validate();
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const CameraIntrinsics& K = spec.camera;

  struct Placed {
    std::size_t model;
    RigidPose pose;
    Vec3 center;
    double radius;
  };
  std::vector<Placed> placed;
  constexpr int kMaxRejections = 1000;
  for (int k = 0; k < spec.n_objects; ++k) {
    const std::size_t mi = std::uniform_int_distribution<std::size_t>(0, spec.models.size() - 1)(rng);
    const ObjectModel& model = spec.models[mi];
    double r = 0.0;
    for (const Vec3& p : model.cloud.points) r = std::max(r, p.norm());
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRejections && !ok; ++attempt) {
      const Quat q = random_rotation(rng);
      const double u = std::uniform_real_distribution<double>(0.0, K.width)(rng);
      const double v = std::uniform_real_distribution<double>(0.0, K.height)(rng);
      const double z = std::uniform_real_distribution<double>(spec.min_z, spec.max_z)(rng);
      const Vec3 c = K.unproject(u, v, z);
      if (c.z() - r < spec.min_z || c.z() + r > spec.max_z) continue;
      bool inside = true;
      for (const Vec3& corner : box_corners(c - Vec3::Constant(r), c + Vec3::Constant(r))) {
        const Eigen::Vector2d px = K.project(corner);
        if (px.x() < 0 || px.y() < 0 || px.x() >= K.width || px.y() >= K.height) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      bool clear = true;
      for (const Placed& o : placed)
        if ((o.center - c).norm() <= o.radius + r) clear = false;
      if (spec.plane) {
        const double s_cam = -spec.plane->offset;
        const double s_obj = spec.plane->normal.dot(c) - spec.plane->offset;
        if (s_cam * s_obj <= 0.0 || std::abs(s_obj) < r) clear = false;
      }
      if (!clear) continue;
      placed.push_back({mi, RigidPose(q, c), c, r});
      ok = true;
    }
    if (!ok) throw PlacementFailure("generate_scene: no valid placement after 1000 rejections");
  }

  SplatCanvas canvas(K, spec.background);
  if (spec.plane) canvas.draw_plane(spec.plane->normal, spec.plane->offset, -2, spec.plane->color);
  for (std::size_t k = 0; k < placed.size(); ++k)
    canvas.draw(spec.models[placed[k].model].cloud, placed[k].pose, spec.splat_size, static_cast<int>(k));

  SyntheticScene scene;
  scene.camera = K;
  scene.rgb = canvas.color();
  scene.depth = DepthMap(K.width, K.height, 0.1);
  std::mt19937_64 noise_rng(derive_seed(spec.seed, 0, 1));
  std::normal_distribution<double> noise(0.0, spec.depth_noise > 0.0 ? spec.depth_noise : 1.0);
  for (std::size_t i = 0; i < canvas.depth().size(); ++i) {
    double z = canvas.depth()[i];
    if (!std::isfinite(z)) continue;
    if (spec.depth_noise > 0.0) z += noise(noise_rng);
    const double raw = std::round(z * 1000.0 / scene.depth.depth_scale);
    scene.depth.raw[i] = static_cast<std::uint16_t>(std::clamp(raw, 1.0, 65535.0));
  }
  for (std::size_t k = 0; k < placed.size(); ++k) {
    const ObjectModel& model = spec.models[placed[k].model];
    GtObject gt;
    gt.object_id = model.object_id;
    gt.model_index = placed[k].model;
    gt.pose = placed[k].pose;
    gt.mask = canvas.instance_mask(static_cast<int>(k));
    SplatCanvas alone(K);
    alone.draw(model.cloud, placed[k].pose, spec.splat_size, 0);
    const std::size_t full = alone.footprint().count();
    gt.visibility = full == 0 ? 0.0 : static_cast<double>(gt.mask.count()) / static_cast<double>(full);
    scene.objects.push_back(std::move(gt));
  }
  return scene;
}

void write_bop_scene(const fs::path& scene_dir, int scene_id, const std::vector<SyntheticScene>& images,
                     double min_visibility) {
  fs::create_directories(scene_dir / "depth");
  fs::create_directories(scene_dir / "rgb");
  fs::create_directories(scene_dir / "mask_visib");
  json cams = json::object(), gts = json::object(), infos = json::object(), dets = json::array();
  for (std::size_t im = 0; im < images.size(); ++im) {
    const SyntheticScene& s = images[im];
    const std::string key = std::to_string(im);
    const CameraIntrinsics& K = s.camera;
    cams[key] = {{"cam_K", {K.fx, 0.0, K.cx, 0.0, K.fy, K.cy, 0.0, 0.0, 1.0}},
                 {"depth_scale", s.depth.depth_scale},
                 {"width", K.width},
                 {"height", K.height}};
    const std::string name = zero_pad(static_cast<int>(im), 6);
    write_depth_png(scene_dir / "depth" / (name + ".png"), s.depth);
    write_color_png(scene_dir / "rgb" / (name + ".png"), s.rgb);
    json gt_list = json::array(), info_list = json::array();
    for (std::size_t k = 0; k < s.objects.size(); ++k) {
      const GtObject& o = s.objects[k];
      gt_list.push_back({{"cam_R_m2c", pose_json_rotation(o.pose)},
                         {"cam_t_m2c", pose_json_translation(o.pose)},
                         {"obj_id", o.object_id}});
      info_list.push_back({{"visib_fract", o.visibility}, {"px_count_visib", o.mask.count()}});
      const std::string mask_rel = "mask_visib/" + name + "_" + zero_pad(static_cast<int>(k), 6) + ".png";
      write_mask_png(scene_dir / mask_rel, o.mask);
      if (o.visibility >= min_visibility && !o.mask.empty()) {
        const BoundingBox b = mask_bbox(o.mask);
        dets.push_back({{"scene_id", scene_id},
                        {"im_id", static_cast<int>(im)},
                        {"obj_id", o.object_id},
                        {"score", 1.0},
                        {"mask_path", mask_rel},
                        {"bbox", {b.x, b.y, b.w, b.h}}});
      }
    }
    gts[key] = gt_list;
    infos[key] = info_list;
  }
  auto dump = [](const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << j.dump(1) << '\n';
  };
  dump(scene_dir / "scene_camera.json", cams);
  dump(scene_dir / "scene_gt.json", gts);
  dump(scene_dir / "scene_gt_info.json", infos);
  dump(scene_dir / "gt_detections.json", dets);
}

void write_models_dir(const fs::path& models_dir, const std::vector<ObjectModel>& models) {
  fs::create_directories(models_dir);
  json info = json::object();
  for (const ObjectModel& m : models) {
    write_ply(models_dir / ("obj_" + zero_pad(m.object_id, 6) + ".ply"), m.cloud);
    json syms = json::array();
    for (const RigidPose& s : m.symmetries) {
      if (rotation_angle_between(s, RigidPose::identity()) < 1e-9 && s.translation.norm() < 1e-12) continue;
      const Eigen::Matrix4d T = s.matrix();
      json flat = json::array();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) flat.push_back(r < 3 && c == 3 ? T(r, c) * 1e3 : T(r, c));
      syms.push_back(flat);
    }
    json entry = {{"diameter", m.diameter * 1e3}};
    if (!syms.empty()) entry["symmetries_discrete"] = syms;
    info[std::to_string(m.object_id)] = entry;
  }
  std::ofstream out(models_dir / "models_info.json");
  if (!out) throw std::runtime_error("cannot write models_info.json");
  out << info.dump(1) << '\n';
}

Composite compose_training_image(const std::vector<Crop>& crops, const ColorImage& background,
                                 const ComposeParams& params, std::uint64_t seed) {
  if (crops.empty()) throw std::invalid_argument("compose_training_image: no crops");
  std::mt19937_64 rng(seed);
  Composite out;
  out.image = background;
  const int W = background.width, H = background.height;
  const int k = std::uniform_int_distribution<int>(1, std::max(1, params.max_objects))(rng);

  struct Paste {
    int class_id;
    BinaryMask mask;
  };
  std::vector<Paste> pastes;
  for (int n = 0; n < k; ++n) {
    ++out.attempted;
    const Crop& crop = crops[std::uniform_int_distribution<std::size_t>(0, crops.size() - 1)(rng)];
    const double scale = params.min_scale == params.max_scale
                             ? params.min_scale
                             : std::uniform_real_distribution<double>(params.min_scale, params.max_scale)(rng);
    const double angle = params.min_rotation == params.max_rotation
                             ? params.min_rotation
                             : std::uniform_real_distribution<double>(params.min_rotation, params.max_rotation)(rng);
    const double c = std::cos(angle), s = std::sin(angle);
    const int cw = crop.image.width, ch = crop.image.height;
    const int tw = static_cast<int>(std::ceil(scale * (std::abs(c) * cw + std::abs(s) * ch) - 1e-9));
    const int th = static_cast<int>(std::ceil(scale * (std::abs(s) * cw + std::abs(c) * ch) - 1e-9));
    if (tw > W || th > H || tw <= 0 || th <= 0) continue;
    const int x0 = std::uniform_int_distribution<int>(0, W - tw)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, H - th)(rng);

    BinaryMask footprint(W, H);
    const double ccx = x0 + tw / 2.0, ccy = y0 + th / 2.0;
    for (int y = y0; y < y0 + th; ++y)
      for (int x = x0; x < x0 + tw; ++x) {
        const double lx = x + 0.5 - ccx, ly = y + 0.5 - ccy;
        // Inverse similarity: rotate by -angle, then unscale.
        const double sx = (c * lx + s * ly) / scale + cw / 2.0;
        const double sy = (-s * lx + c * ly) / scale + ch / 2.0;
        const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
        if (ix < 0 || iy < 0 || ix >= cw || iy >= ch) continue;
        const auto& px = crop.image.at(ix, iy);
        const int a = px[3];
        if (a == 0) continue;
        Rgb& dst = out.image.at(x, y);
        for (int ch_i = 0; ch_i < 3; ++ch_i)
          dst[ch_i] = static_cast<std::uint8_t>((a * px[ch_i] + (255 - a) * dst[ch_i] + 127) / 255);
        footprint.set(x, y);
      }
    for (Paste& p : pastes)
      for (std::size_t i = 0; i < p.mask.bits.size(); ++i)
        if (footprint.bits[i]) p.mask.bits[i] = 0;
    pastes.push_back({crop.class_id, std::move(footprint)});
  }
  for (Paste& p : pastes) {
    if (p.mask.empty()) continue;
    const BoundingBox b = mask_bbox(p.mask);
    out.annotations.push_back({p.class_id, std::move(p.mask), b});
  }
  return out;
}

ColorImage flip_horizontal(const ColorImage& img) {
  ColorImage out(img.width, img.height);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) out.at(u, v) = img.at(img.width - 1 - u, v);
  return out;
}

BinaryMask flip_horizontal(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height);
  for (int v = 0; v < mask.height; ++v)
    for (int u = 0; u < mask.width; ++u) out.set(u, v, mask.at(mask.width - 1 - u, v));
  return out;
}

namespace {

int validation_count(const TrainingSetParams& p) {
  return static_cast<int>(std::ceil(p.n_images * p.val_fraction - 1e-9));
}

}  // namespace

TrainingSample make_training_sample(const std::vector<Crop>& crops, const std::vector<ColorImage>& backgrounds,
                                    const TrainingSetParams& params, int index) {
  if (crops.empty() || backgrounds.empty()) throw std::invalid_argument("training set: empty crops or backgrounds");
  const auto i = static_cast<std::uint64_t>(index);
  const std::size_t bg = derive_seed(params.seed, i, 1) % backgrounds.size();
  TrainingSample sample;
  sample.composite = compose_training_image(crops, backgrounds[bg], params.compose, derive_seed(params.seed, i));
  sample.validation = index < validation_count(params);
  if (sample.validation) return sample;

  std::mt19937_64 rng(derive_seed(params.seed, i, 2));
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= params.augment_fraction) return sample;
  sample.augmented = true;
  Composite& c = sample.composite;
  if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
    c.image = flip_horizontal(c.image);
    for (Annotation& a : c.annotations) {
      a.mask = flip_horizontal(a.mask);
      a.bbox = mask_bbox(a.mask);
    }
  } else {
    std::uniform_real_distribution<double> gain(0.8, 1.2);
    const std::array<double, 3> g{gain(rng), gain(rng), gain(rng)};
    for (Rgb& px : c.image.pixels)
      for (int k = 0; k < 3; ++k) px[k] = static_cast<std::uint8_t>(std::clamp(std::lround(px[k] * g[k]), 0L, 255L));
  }
  return sample;
}

TrainingSetSummary build_training_set(const std::vector<Crop>& crops, const std::vector<ColorImage>& backgrounds,
                                      const TrainingSetParams& params, const fs::path& out_dir) {
  if (crops.empty() || backgrounds.empty()) throw std::invalid_argument("training set: empty crops or backgrounds");
  if (params.n_images < 1) throw std::invalid_argument("training set: n_images must be >= 1");
  for (const char* split : {"train", "val"}) {
    fs::create_directories(out_dir / split / "rgb");
    fs::create_directories(out_dir / split / "masks");
  }
  TrainingSetSummary summary;
  json train = json::array(), val = json::array();
  for (int i = 0; i < params.n_images; ++i) {
    const TrainingSample s = make_training_sample(crops, backgrounds, params, i);
    const std::string split = s.validation ? "val" : "train";
    const std::string name = zero_pad(i, 6);
    write_color_png(out_dir / split / "rgb" / (name + ".png"), s.composite.image);
    json& dets = s.validation ? val : train;
    for (std::size_t k = 0; k < s.composite.annotations.size(); ++k) {
      const Annotation& a = s.composite.annotations[k];
      const std::string mask_rel = "masks/" + name + "_" + zero_pad(static_cast<int>(k), 2) + ".png";
      write_mask_png(out_dir / split / mask_rel, a.mask);
      dets.push_back({{"scene_id", 0},
                      {"im_id", i},
                      {"obj_id", a.class_id},
                      {"score", 1.0},
                      {"mask_path", mask_rel},
                      {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}});
    }
    (s.validation ? summary.n_val : summary.n_train) += 1;
    summary.augmented += s.augmented ? 1 : 0;
    summary.max_annotations = std::max(summary.max_annotations, static_cast<int>(s.composite.annotations.size()));
  }
  for (const auto& [split, dets] : {std::pair{"train", &train}, std::pair{"val", &val}}) {
    std::ofstream out(out_dir / split / "detections.json");
    if (!out) throw std::runtime_error("cannot write detections for split " + std::string(split));
    out << dets->dump() << '\n';
  }
  return summary;
}

}  // namespace maskppf
