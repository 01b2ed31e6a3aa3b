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

// Pose-error metrics, detection metrics and the BOP results CSV.

#include "maskppf/cloud.hpp"
#include "maskppf/geom.hpp"
#include "maskppf/image.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace maskppf {

/// Maximum symmetry-aware surface distance in meters. Throws
/// std::invalid_argument for an empty vertex set.
double mssd(const RigidPose& est, const RigidPose& gt, const ObjectModel& model);

/// Maximum symmetry-aware projection distance in pixels, scaled by
/// 640 / image_width. Throws std::invalid_argument for an empty vertex set
/// and std::domain_error when a vertex is behind the camera.
double mspd(const RigidPose& est, const RigidPose& gt, const ObjectModel& model, const CameraIntrinsics& K,
            int image_width);

struct InstanceError {
  double mssd = 0.0;  // meters; +inf when unmatched
  double mspd = 0.0;  // pixels; +inf when unmatched
  double diameter = 0.0;
};

struct PoseErrorReport {
  std::vector<double> mssd_thresholds;  // fractions of the diameter
  std::vector<double> mspd_thresholds;  // pixels
  std::vector<double> mssd_recall;
  std::vector<double> mspd_recall;
  double ar_mssd = 0.0;
  double ar_mspd = 0.0;
  double ar = 0.0;
};

std::vector<double> default_mssd_thresholds();  // 0.05 .. 0.50 step 0.05
std::vector<double> default_mspd_thresholds();  // 5 .. 50 px step 5

/// Recall counts an instance when its error is strictly below the threshold.
PoseErrorReport average_recall(const std::vector<InstanceError>& errors,
                               const std::vector<double>& mssd_thresholds = default_mssd_thresholds(),
                               const std::vector<double>& mspd_thresholds = default_mspd_thresholds());

/// |a & b| / |a | b|; 0 when both are empty. Throws std::invalid_argument on
/// size mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

struct Detection {
  int scene_id = 0;
  int image_id = 0;
  int object_id = 0;
  double score = 1.0;
  BinaryMask mask;
  BoundingBox bbox;
  std::string mask_path;  // as written in the detections file
};
using DetectionSet = std::vector<Detection>;

struct MapResult {
  std::map<int, double> ap;  // per class with at least one ground-truth instance
  double map = 0.0;
};

/// Per-class AP from greedy score-ordered matching at `iou_thresh` and an
/// all-point interpolated precision envelope. `class_agnostic` collapses every
/// object id into one class.
MapResult map_at_iou(const DetectionSet& preds, const DetectionSet& gt, double iou_thresh = 0.5,
                     bool class_agnostic = false);

struct CandidateModel {
  std::string name;
  DetectionSet predictions;
};

/// Name of the candidate with the highest mAP; ties keep the earliest.
/// Throws std::invalid_argument for an empty list.
std::string select_best(const std::vector<CandidateModel>& candidates, const DetectionSet& gt,
                        double iou_thresh = 0.5, bool class_agnostic = false);

/// Reads a detections JSON array; masks are loaded relative to the file.
DetectionSet load_detections(const std::filesystem::path& path);
/// Writes detections; masks must already exist at their mask_path.
void save_detections(const std::filesystem::path& path, const DetectionSet& dets);

struct PoseResult {
  int scene_id = 0;
  int image_id = 0;
  int object_id = 0;
  double score = 0.0;
  RigidPose pose;  // translation in meters; written in millimeters
  double time = 0.0;  // seconds per image
};

inline constexpr const char* kBopCsvHeader = "scene_id,im_id,obj_id,score,R,t,time";

/// Formats one value as the shortest decimal that round-trips.
std::string format_shortest(double v);

/// Throws std::invalid_argument on non-finite values.
std::string format_bop_csv(const std::vector<PoseResult>& rows);
void write_bop_csv(const std::filesystem::path& path, const std::vector<PoseResult>& rows);
std::vector<PoseResult> read_bop_csv(const std::filesystem::path& path);

}  // namespace maskppf
