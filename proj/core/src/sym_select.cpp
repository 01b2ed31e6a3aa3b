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

#include "maskppf/sym_select.hpp"

#include "maskppf/render.hpp"
#include "maskppf/rgbd_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maskppf {

namespace {

std::vector<float> to_gray(const ColorImage& img) {
  std::vector<float> g(img.pixels.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Rgb& p = img.pixels[i];
    g[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
  }
  return g;
}

struct Candidate {
  float response;
  int u, v;
};

}  // namespace

KeypointSet detect_keypoints(const ColorImage& img, const BinaryMask& region, const KeypointParams& params) {
  if (region.width != img.width || region.height != img.height)
    throw std::invalid_argument("detect_keypoints: region size differs from image");
  const int w = img.width, h = img.height;
  const std::vector<float> gray = to_gray(img);
  auto at = [&](int u, int v) { return gray[static_cast<std::size_t>(v) * w + u]; };

  std::vector<float> gx(gray.size(), 0.0f), gy(gray.size(), 0.0f);
  for (int v = 1; v < h - 1; ++v)
    for (int u = 1; u < w - 1; ++u) {
      gx[static_cast<std::size_t>(v) * w + u] = 0.5f * (at(u + 1, v) - at(u - 1, v));
      gy[static_cast<std::size_t>(v) * w + u] = 0.5f * (at(u, v + 1) - at(u, v - 1));
    }

  // Keypoints need a full patch inside the image.
  const int margin = kPatchSize / 2;
  std::vector<Candidate> cands;
  for (int v = margin; v < h - margin; ++v)
    for (int u = margin; u < w - margin; ++u) {
      if (!region.at(u, v)) continue;
      float sxx = 0, sxy = 0, syy = 0;
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          const std::size_t i = static_cast<std::size_t>(v + dv) * w + (u + du);
          sxx += gx[i] * gx[i];
          sxy += gx[i] * gy[i];
          syy += gy[i] * gy[i];
        }
      const float half_tr = 0.5f * (sxx + syy);
      const float disc = std::sqrt(0.25f * (sxx - syy) * (sxx - syy) + sxy * sxy);
      cands.push_back({half_tr - disc, u, v});
    }
  KeypointSet out;
  if (cands.empty()) return out;

  std::vector<float> responses(cands.size());
  std::transform(cands.begin(), cands.end(), responses.begin(), [](const Candidate& c) { return c.response; });
  const std::size_t k = std::min(responses.size() - 1, static_cast<std::size_t>(params.response_percentile * responses.size()));
  std::nth_element(responses.begin(), responses.begin() + static_cast<std::ptrdiff_t>(k), responses.end());
  const float threshold = std::max(responses[k], 1e-3f);

  std::erase_if(cands, [&](const Candidate& c) { return !(c.response > threshold); });
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    return std::tie(a.v, a.u) < std::tie(b.v, b.u);
  });

  const int r2 = params.nms_radius * params.nms_radius;
  for (const Candidate& c : cands) {
    if (static_cast<int>(out.positions.size()) >= params.max_keypoints) break;
    bool suppressed = false;
    for (const auto& p : out.positions) {
      const int du = p.x() - c.u, dv = p.y() - c.v;
      if (du * du + dv * dv <= r2) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;

    PatchDescriptor d{};
    float mean = 0.0f;
    for (int dv = -margin; dv <= margin; ++dv)
      for (int du = -margin; du <= margin; ++du) mean += at(c.u + du, c.v + dv);
    mean /= static_cast<float>(d.size());
    float norm2 = 0.0f;
    int k2 = 0;
    for (int dv = -margin; dv <= margin; ++dv)
      for (int du = -margin; du <= margin; ++du) {
        d[k2] = at(c.u + du, c.v + dv) - mean;
        norm2 += d[k2] * d[k2];
        ++k2;
      }
    if (norm2 < 1e-6f) continue;
    const float inv = 1.0f / std::sqrt(norm2);
    for (float& x : d) x *= inv;
    out.positions.emplace_back(c.u, c.v);
    out.descriptors.push_back(d);
  }
  return out;
}

namespace {

float ncc(const PatchDescriptor& a, const PatchDescriptor& b) {
  float s = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Best partner in `to` for each element of `from`, or -1.
std::vector<int> best_partners(const KeypointSet& from, const KeypointSet& to, double max_dist) {
  std::vector<int> best(from.positions.size(), -1);
  const double max_d2 = max_dist * max_dist;
  for (std::size_t i = 0; i < from.positions.size(); ++i) {
    float best_ncc = -2.0f;
    double best_d2 = 0.0;
    for (std::size_t j = 0; j < to.positions.size(); ++j) {
      const double d2 = (from.positions[i] - to.positions[j]).cast<double>().squaredNorm();
      if (d2 > max_d2) continue;
      const float s = ncc(from.descriptors[i], to.descriptors[j]);
      if (s > best_ncc || (s == best_ncc && d2 < best_d2)) {
        best_ncc = s;
        best_d2 = d2;
        best[i] = static_cast<int>(j);
      }
    }
  }
  return best;
}

}  // namespace

int match_keypoint_sets(const KeypointSet& a, const KeypointSet& b, const KeypointParams& params) {
  const std::vector<int> ab = best_partners(a, b, params.max_pixel_distance);
  const std::vector<int> ba = best_partners(b, a, params.max_pixel_distance);
  int count = 0;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    const int j = ab[i];
    if (j < 0 || ba[j] != static_cast<int>(i)) continue;
    if (ncc(a.descriptors[i], b.descriptors[j]) >= params.min_ncc) ++count;
  }
  return count;
}

int match_keypoints(const ColorImage& a, const ColorImage& b, const BinaryMask& region, const KeypointParams& params) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("match_keypoints: image sizes differ");
  return match_keypoint_sets(detect_keypoints(a, region, params), detect_keypoints(b, region, params), params);
}

SymmetrySelection select_symmetry(const ColorImage& rgb, const ObjectModel& model, const RigidPose& pose,
                                  const CameraIntrinsics& K, double splat_size, int region_dilation,
                                  const KeypointParams& params) {
  SymmetrySelection sel{pose, 0, {}};
  if (!model.cloud.has_colors() || model.symmetries.size() <= 1) return sel;

  int best = -1;
  for (std::size_t s = 0; s < model.symmetries.size(); ++s) {
    const RigidPose candidate = compose(pose, model.symmetries[s]);
    int count = 0;
    try {
      const SplatRender r = splat_render(model, candidate, K, splat_size);
      const BinaryMask region = dilate_mask(r.footprint, region_dilation);
      count = match_keypoints(r.color, rgb, region, params);
    } catch (const std::invalid_argument&) {
      count = 0;
    }
    sel.match_counts.push_back(count);
    if (count > best) {
      best = count;
      sel.symmetry_index = s;
      sel.pose = candidate;
    }
  }
  return sel;
}

}  // namespace maskppf
