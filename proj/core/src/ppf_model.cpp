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

#include "maskppf/rgbd_io.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace maskppf {

namespace {

double clamped_angle(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

}  // namespace

PointPairFeature compute_ppf(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2) {
  const Vec3 d = p2 - p1;
  const double len = d.norm();
  if (len <= 0.0) throw std::invalid_argument("compute_ppf: coincident points");
  const Vec3 dir = d / len;
  return {len, clamped_angle(n1, dir), clamped_angle(n2, dir), clamped_angle(n1, n2)};
}

int angle_bin_count(double angle_step) {
  return std::max(1, static_cast<int>(std::ceil(std::numbers::pi / angle_step - 1e-9)));
}

PpfKey quantize_ppf(const PointPairFeature& f, double distance_step, double angle_step) {
  const int n_angle = angle_bin_count(angle_step);
  auto abin = [&](double a) {
    return static_cast<std::uint64_t>(std::clamp(static_cast<int>(std::floor(a / angle_step)), 0, n_angle - 1));
  };
  const auto dbin = static_cast<std::uint64_t>(
      std::clamp(static_cast<std::int64_t>(std::floor(f.distance / distance_step)), std::int64_t{0},
                 std::int64_t{0xFFFF}));
  return (dbin << 48) | (abin(f.angle_n1_d) << 32) | (abin(f.angle_n2_d) << 16) | abin(f.angle_n1_n2);
}

PpfBins unpack_key(PpfKey key) {
  return {static_cast<int>((key >> 48) & 0xFFFF), static_cast<int>((key >> 32) & 0xFFFF),
          static_cast<int>((key >> 16) & 0xFFFF), static_cast<int>(key & 0xFFFF)};
}

RigidPose canonical_frame(const Vec3& ref, const Vec3& ref_normal) {
  const Mat3 R = rotation_to_x_axis(ref_normal);
  return {R, Vec3(-(R * ref))};
}

double local_alpha(const Vec3& ref, const Vec3& ref_normal, const Vec3& other) {
  const Vec3 q = rotation_to_x_axis(ref_normal) * (other - ref);
  if (std::hypot(q.y(), q.z()) < 1e-12) return 0.0;
  return std::atan2(-q.z(), q.y());
}

std::span<const PpfEntry> PpfModel::lookup(PpfKey key) const {
  const auto it = slot_.find(key);
  if (it == slot_.end()) return {};
  const std::uint32_t s = it->second;
  return std::span<const PpfEntry>(entries_).subspan(offsets_[s], offsets_[s + 1] - offsets_[s]);
}

void PpfModel::set_table(std::vector<std::pair<PpfKey, PpfEntry>> pairs) {
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  keys_.clear();
  offsets_.clear();
  entries_.clear();
  entries_.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i == 0 || pairs[i].first != pairs[i - 1].first) {
      keys_.push_back(pairs[i].first);
      offsets_.push_back(static_cast<std::uint32_t>(i));
    }
    entries_.push_back(pairs[i].second);
  }
  offsets_.push_back(static_cast<std::uint32_t>(entries_.size()));
  index();
}

void PpfModel::set_table(std::vector<PpfKey> keys, std::vector<std::uint32_t> offsets, std::vector<PpfEntry> entries) {
  if (offsets.size() != keys.size() + 1 || offsets.back() != entries.size())
    throw std::runtime_error("PPF table: inconsistent offsets");
  keys_ = std::move(keys);
  offsets_ = std::move(offsets);
  entries_ = std::move(entries);
  index();
}

void PpfModel::index() {
  slot_.clear();
  slot_.reserve(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) slot_.emplace(keys_[i], static_cast<std::uint32_t>(i));
}

PpfModel build_model(const ObjectModel& model, const BuildParams& params) {
  if (!model.cloud.has_normals()) throw std::invalid_argument("build_model: model cloud has no normals");
  if (!(params.relative_sampling > 0.0 && params.relative_sampling <= 0.5))
    throw std::invalid_argument("build_model: relative sampling must lie in (0, 0.5]");
  if (params.n_angle < 4) throw std::invalid_argument("build_model: n_angle must be at least 4");
  if (!(model.diameter > 0.0)) throw std::invalid_argument("build_model: diameter must be positive");

  PpfModel out;
  out.object_id = model.object_id;
  out.diameter = model.diameter;
  out.distance_step = params.relative_sampling * model.diameter;
  out.n_angle = params.n_angle;
  out.angle_step = std::numbers::pi / params.n_angle;
  out.cloud = voxel_downsample(model.cloud, out.distance_step);
  const std::size_t n = out.cloud.size();
  if (n < 2) throw std::invalid_argument("build_model: fewer than two sampled points");

  std::vector<std::pair<PpfKey, PpfEntry>> pairs;
  pairs.reserve(n * (n - 1));
  const auto& pts = out.cloud.points;
  const auto& nrm = out.cloud.normals;
  for (std::size_t i = 0; i < n; ++i) {
    const Mat3 R = rotation_to_x_axis(nrm[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const PpfKey key = quantize_ppf(compute_ppf(pts[i], nrm[i], pts[j], nrm[j]), out.distance_step, out.angle_step);
      const Vec3 q = R * (pts[j] - pts[i]);
      const double alpha = std::hypot(q.y(), q.z()) < 1e-12 ? 0.0 : std::atan2(-q.z(), q.y());
      pairs.push_back({key, {static_cast<std::uint32_t>(i), static_cast<float>(alpha)}});
    }
  }
  out.set_table(std::move(pairs));
  return out;
}

namespace {

constexpr char kMagic[8] = {'M', 'P', 'P', 'F', 'M', 'D', 'L', '\0'};

static_assert(std::endian::native == std::endian::little, "model files are written in host order");

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("PPF model file truncated");
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const PpfModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kPpfModelVersion);
  put(out, static_cast<std::int32_t>(model.object_id));
  put(out, model.distance_step);
  put(out, model.angle_step);
  put(out, static_cast<std::int32_t>(model.n_angle));
  put(out, static_cast<std::uint32_t>(model.cloud.size()));
  put(out, model.diameter);
  for (std::size_t i = 0; i < model.cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) put(out, model.cloud.points[i][k]);
    for (int k = 0; k < 3; ++k) put(out, model.cloud.normals[i][k]);
  }
  put(out, static_cast<std::uint8_t>(model.cloud.has_colors() ? 1 : 0));
  for (const Rgb& c : model.cloud.colors) out.write(reinterpret_cast<const char*>(c.data()), 3);
  put(out, static_cast<std::uint64_t>(model.key_count()));
  for (PpfKey k : model.keys()) put(out, k);
  for (std::uint32_t o : model.offsets()) put(out, o);
  put(out, static_cast<std::uint64_t>(model.entry_count()));
  for (const PpfEntry& e : model.entries()) {
    put(out, e.ref_index);
    put(out, e.alpha);
  }
  if (!out) throw std::runtime_error("model file write failed: " + path.string());
}

PpfModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a PPF model file: " + path.string());
  if (const auto version = get<std::uint32_t>(in); version != kPpfModelVersion)
    throw std::runtime_error("unsupported PPF model version " + std::to_string(version));
  PpfModel m;
  m.object_id = get<std::int32_t>(in);
  m.distance_step = get<double>(in);
  m.angle_step = get<double>(in);
  m.n_angle = get<std::int32_t>(in);
  const auto n = get<std::uint32_t>(in);
  m.diameter = get<double>(in);
  m.cloud.points.resize(n);
  m.cloud.normals.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) m.cloud.points[i][k] = get<double>(in);
    for (int k = 0; k < 3; ++k) m.cloud.normals[i][k] = get<double>(in);
  }
  if (get<std::uint8_t>(in)) {
    m.cloud.colors.resize(n);
    for (auto& c : m.cloud.colors)
      if (!in.read(reinterpret_cast<char*>(c.data()), 3)) throw std::runtime_error("PPF model file truncated");
  }
  const auto key_count = get<std::uint64_t>(in);
  std::vector<PpfKey> keys(key_count);
  for (auto& k : keys) k = get<std::uint64_t>(in);
  std::vector<std::uint32_t> offsets(key_count + 1);
  for (auto& o : offsets) o = get<std::uint32_t>(in);
  const auto entry_count = get<std::uint64_t>(in);
  std::vector<PpfEntry> entries(entry_count);
  for (auto& e : entries) {
    e.ref_index = get<std::uint32_t>(in);
    e.alpha = get<float>(in);
    if (e.ref_index >= n) throw std::runtime_error("PPF model entry references missing point");
  }
  m.set_table(std::move(keys), std::move(offsets), std::move(entries));
  return m;
}

}  // namespace maskppf
