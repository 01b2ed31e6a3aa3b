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

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace maskppf {

namespace fs = std::filesystem;
using nlohmann::json;

double mssd(const RigidPose& est, const RigidPose& gt, const ObjectModel& model) {
  const auto& pts = model.cloud.points;
  if (pts.empty()) throw std::invalid_argument("mssd: empty vertex set");
  const Mat3 Re = est.rotation_matrix();
  std::vector<Vec3> est_pts(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) est_pts[i] = Re * pts[i] + est.translation;

  double best = std::numeric_limits<double>::infinity();
  for (const RigidPose& sym : model.symmetries) {
    const RigidPose g = compose(gt, sym);
    const Mat3 Rg = g.rotation_matrix();
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size() && worst < best; ++i)
      worst = std::max(worst, (est_pts[i] - (Rg * pts[i] + g.translation)).squaredNorm());
    best = std::min(best, worst);
  }
  return std::sqrt(best);
}

double mspd(const RigidPose& est, const RigidPose& gt, const ObjectModel& model, const CameraIntrinsics& K,
            int image_width) {
  const auto& pts = model.cloud.points;
  if (pts.empty()) throw std::invalid_argument("mspd: empty vertex set");
  const double scale = 640.0 / image_width;
  const Mat3 Re = est.rotation_matrix();
  std::vector<Eigen::Vector2d> est_px(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 p = Re * pts[i] + est.translation;
    if (p.z() <= 0.0) throw std::domain_error("mspd: vertex behind the camera under the estimated pose");
    est_px[i] = K.project(p);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const RigidPose& sym : model.symmetries) {
    const RigidPose g = compose(gt, sym);
    const Mat3 Rg = g.rotation_matrix();
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec3 p = Rg * pts[i] + g.translation;
      if (p.z() <= 0.0) throw std::domain_error("mspd: vertex behind the camera under the ground-truth pose");
      worst = std::max(worst, (est_px[i] - K.project(p)).squaredNorm());
    }
    best = std::min(best, worst);
  }
  return scale * std::sqrt(best);
}

std::vector<double> default_mssd_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(0.05 * k);
  return t;
}

std::vector<double> default_mspd_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(5.0 * k);
  return t;
}

PoseErrorReport average_recall(const std::vector<InstanceError>& errors, const std::vector<double>& mssd_thresholds,
                               const std::vector<double>& mspd_thresholds) {
  PoseErrorReport rep;
  rep.mssd_thresholds = mssd_thresholds;
  rep.mspd_thresholds = mspd_thresholds;
  const double n = static_cast<double>(errors.size());
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  for (double t : mssd_thresholds) {
    std::size_t ok = 0;
    for (const auto& e : errors) ok += e.mssd < t * e.diameter ? 1 : 0;
    rep.mssd_recall.push_back(errors.empty() ? 0.0 : ok / n);
  }
  for (double t : mspd_thresholds) {
    std::size_t ok = 0;
    for (const auto& e : errors) ok += e.mspd < t ? 1 : 0;
    rep.mspd_recall.push_back(errors.empty() ? 0.0 : ok / n);
  }
  rep.ar_mssd = mean(rep.mssd_recall);
  rep.ar_mspd = mean(rep.mspd_recall);
  std::vector<double> all = rep.mssd_recall;
  all.insert(all.end(), rep.mspd_recall.begin(), rep.mspd_recall.end());
  rep.ar = mean(all);
  return rep;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("mask_iou: mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += (a.bits[i] & b.bits[i]);
    uni += (a.bits[i] | b.bits[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

double average_precision(const std::vector<bool>& tp, std::size_t n_gt) {
  std::vector<double> precision, recall;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i] ? 1 : 0;
    precision.push_back(static_cast<double>(hits) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(hits) / static_cast<double>(n_gt));
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

MapResult map_at_iou(const DetectionSet& preds, const DetectionSet& gt, double iou_thresh, bool class_agnostic) {
  auto cls = [&](const Detection& d) { return class_agnostic ? 0 : d.object_id; };
  std::map<int, std::vector<std::size_t>> gt_by_class, pred_by_class;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_by_class[cls(gt[i])].push_back(i);
  for (std::size_t i = 0; i < preds.size(); ++i) pred_by_class[cls(preds[i])].push_back(i);

  MapResult res;
  for (const auto& [c, gt_idx] : gt_by_class) {
    std::vector<std::size_t> order = pred_by_class[c];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    std::vector<bool> matched(gt_idx.size(), false);
    std::vector<bool> tp;
    tp.reserve(order.size());
    for (std::size_t p : order) {
      const Detection& d = preds[p];
      double best_iou = iou_thresh;
      int best = -1;
      for (std::size_t k = 0; k < gt_idx.size(); ++k) {
        const Detection& g = gt[gt_idx[k]];
        if (matched[k] || g.scene_id != d.scene_id || g.image_id != d.image_id) continue;
        if (d.bbox.w > 0 && g.bbox.w > 0 && !boxes_overlap(d.bbox, g.bbox)) continue;
        const double iou = mask_iou(d.mask, g.mask);
        if (iou >= best_iou && (best < 0 || iou > best_iou)) {
          best_iou = iou;
          best = static_cast<int>(k);
        }
      }
      if (best >= 0) matched[best] = true;
      tp.push_back(best >= 0);
    }
    res.ap[c] = average_precision(tp, gt_idx.size());
  }
  double sum = 0.0;
  for (const auto& [c, ap] : res.ap) sum += ap;
  res.map = res.ap.empty() ? 0.0 : sum / static_cast<double>(res.ap.size());
  return res;
}

std::string select_best(const std::vector<CandidateModel>& candidates, const DetectionSet& gt, double iou_thresh,
                        bool class_agnostic) {
  if (candidates.empty()) throw std::invalid_argument("select_best: no candidates");
  std::size_t best = 0;
  double best_map = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double m = map_at_iou(candidates[i].predictions, gt, iou_thresh, class_agnostic).map;
    if (m > best_map) {
      best_map = m;
      best = i;
    }
  }
  return candidates[best].name;
}

DetectionSet load_detections(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detections file " + path.string());
  json arr;
  try {
    arr = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed detections JSON " + path.string() + ": " + e.what());
  }
  if (!arr.is_array()) throw std::runtime_error("detections file must hold a JSON array");
  DetectionSet out;
  for (const json& e : arr) {
    Detection d;
    d.scene_id = e.at("scene_id").get<int>();
    d.image_id = e.at("im_id").get<int>();
    d.object_id = e.at("obj_id").get<int>();
    d.score = e.value("score", 1.0);
    if (!std::isfinite(d.score)) throw std::runtime_error("detection score must be finite");
    d.mask_path = e.at("mask_path").get<std::string>();
    d.mask = read_mask_png(path.parent_path() / d.mask_path);
    if (e.contains("bbox")) {
      const json& b = e["bbox"];
      d.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    } else {
      d.bbox = mask_bbox(d.mask);
    }
    out.push_back(std::move(d));
  }
  return out;
}

void save_detections(const fs::path& path, const DetectionSet& dets) {
  json arr = json::array();
  for (const Detection& d : dets)
    arr.push_back({{"scene_id", d.scene_id},
                   {"im_id", d.image_id},
                   {"obj_id", d.object_id},
                   {"score", d.score},
                   {"mask_path", d.mask_path},
                   {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write detections file " + path.string());
  out << arr.dump(1) << '\n';
}

std::string format_shortest(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in results");
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_bop_csv(const std::vector<PoseResult>& rows) {
  std::string out = std::string(kBopCsvHeader) + "\n";
  for (const PoseResult& r : rows) {
    const Mat3 R = r.pose.rotation_matrix();
    const Vec3 t = r.pose.translation * 1000.0;
    std::string line = std::to_string(r.scene_id) + "," + std::to_string(r.image_id) + "," +
                       std::to_string(r.object_id) + "," + format_shortest(r.score) + ",";
    for (int i = 0; i < 9; ++i) line += (i ? " " : "") + format_shortest(R(i / 3, i % 3));
    line += ",";
    for (int i = 0; i < 3; ++i) line += (i ? " " : "") + format_shortest(t[i]);
    line += "," + format_shortest(r.time) + "\n";
    out += line;
  }
  return out;
}

void write_bop_csv(const fs::path& path, const std::vector<PoseResult>& rows) {
  const std::string text = format_bop_csv(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write results CSV " + path.string());
  out << text;
}

namespace {

std::vector<double> parse_numbers(const std::string& field, std::size_t expected) {
  std::vector<double> v;
  std::istringstream in(field);
  std::string tok;
  while (in >> tok) {
    double x = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw std::runtime_error("results CSV: bad number '" + tok + "'");
    v.push_back(x);
  }
  if (v.size() != expected) throw std::runtime_error("results CSV: wrong value count in field '" + field + "'");
  return v;
}

}  // namespace

std::vector<PoseResult> read_bop_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results CSV " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kBopCsvHeader) throw std::runtime_error("results CSV: bad header");
  std::vector<PoseResult> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::runtime_error("results CSV: expected 7 columns");
    PoseResult r;
    r.scene_id = std::stoi(f[0]);
    r.image_id = std::stoi(f[1]);
    r.object_id = std::stoi(f[2]);
    r.score = parse_numbers(f[3], 1)[0];
    const auto Rv = parse_numbers(f[4], 9);
    const auto tv = parse_numbers(f[5], 3);
    r.time = parse_numbers(f[6], 1)[0];
    Mat3 R;
    for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = Rv[i];
    r.pose = RigidPose(R, Vec3(tv[0], tv[1], tv[2]) / 1000.0);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace maskppf
