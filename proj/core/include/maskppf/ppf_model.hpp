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

#pragma once

#include "maskppf/cloud.hpp"
#include "maskppf/geom.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

namespace maskppf {

/// Point-pair feature of two oriented points.
struct PointPairFeature {
  double distance = 0.0;     // |p2 - p1|, meters
  double angle_n1_d = 0.0;   // angle(n1, p2 - p1)
  double angle_n2_d = 0.0;   // angle(n2, p2 - p1)
  double angle_n1_n2 = 0.0;  // angle(n1, n2)
};

/// Quantized feature: distance bin in bits 48..63, angle bins in bits
/// 32..47, 16..31 and 0..15.
using PpfKey = std::uint64_t;

/// Throws std::invalid_argument for coincident points.
PointPairFeature compute_ppf(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2);

/// Number of angle bins for a given angle step; angle pi falls in the last one.
int angle_bin_count(double angle_step);

PpfKey quantize_ppf(const PointPairFeature& f, double distance_step, double angle_step);

struct PpfBins {
  int distance, a1, a2, a3;
};
PpfBins unpack_key(PpfKey key);

/// Rotation angle about +x that brings `other` into the half-plane
/// {z = 0, y >= 0} after `ref` is moved to the origin and `ref_normal` is
/// rotated onto +x. Returns 0 when `other` lies on the normal axis.
double local_alpha(const Vec3& ref, const Vec3& ref_normal, const Vec3& other);

/// Transform moving `ref` to the origin and aligning `ref_normal` with +x.
RigidPose canonical_frame(const Vec3& ref, const Vec3& ref_normal);

struct PpfEntry {
  std::uint32_t ref_index = 0;
  float alpha = 0.0f;  // radians, (-pi, pi]
  bool operator==(const PpfEntry&) const = default;
};

/// Hashed model description. Entries are stored in one flat array grouped by
/// key (keys ascending; within a key, insertion order).
class PpfModel {
 public:
  int object_id = 0;
  double distance_step = 0.0;
  double angle_step = 0.0;
  int n_angle = 0;
  double diameter = 0.0;
  PointCloud cloud;  // sampled, oriented

  std::span<const PpfEntry> lookup(PpfKey key) const;
  std::size_t entry_count() const { return entries_.size(); }
  std::size_t key_count() const { return keys_.size(); }
  std::span<const PpfKey> keys() const { return keys_; }
  std::span<const PpfEntry> entries() const { return entries_; }

  /// Builds the flat table from (key, entry) pairs; stable in input order.
  void set_table(std::vector<std::pair<PpfKey, PpfEntry>> pairs);
  /// Rebuilds from already grouped arrays, as read from disk.
  void set_table(std::vector<PpfKey> keys, std::vector<std::uint32_t> offsets, std::vector<PpfEntry> entries);
  std::span<const std::uint32_t> offsets() const { return offsets_; }

 private:
  void index();

  std::vector<PpfKey> keys_;
  std::vector<std::uint32_t> offsets_;  // keys_.size() + 1
  std::vector<PpfEntry> entries_;
  std::unordered_map<PpfKey, std::uint32_t> slot_;
};

struct BuildParams {
  double relative_sampling = 0.05;  // tau_d in (0, 0.5]
  int n_angle = 30;
};

/// Samples the model at relative_sampling * diameter and stores every ordered
/// pair. Throws std::invalid_argument for a model without normals, fewer than
/// two sampled points or parameters out of range.
PpfModel build_model(const ObjectModel& model, const BuildParams& params = {});

// Binary container, little-endian:
//   char[8] "MPPFMDL\0", u32 version, i32 object_id, f64 distance_step,
//   f64 angle_step, i32 n_angle, u32 N, f64 diameter,
//   N x (f64 x, y, z, nx, ny, nz), u8 has_colors, [N x u8 r, g, b],
//   u64 key_count, key_count x u64 key, (key_count + 1) x u32 offset,
//   u64 entry_count, entry_count x (u32 ref_index, f32 alpha).
inline constexpr std::uint32_t kPpfModelVersion = 1;
void save_model(const std::filesystem::path& path, const PpfModel& model);
PpfModel load_model(const std::filesystem::path& path);

}  // namespace maskppf
