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

#include "maskppf/rgbd_io.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace maskppf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

PlyType parse_ply_type(const std::string& t) {
  if (t == "char" || t == "int8") return PlyType::kInt8;
  if (t == "uchar" || t == "uint8") return PlyType::kUint8;
  if (t == "short" || t == "int16") return PlyType::kInt16;
  if (t == "ushort" || t == "uint16") return PlyType::kUint16;
  if (t == "int" || t == "int32") return PlyType::kInt32;
  if (t == "uint" || t == "uint32") return PlyType::kUint32;
  if (t == "float" || t == "float32") return PlyType::kFloat32;
  if (t == "double" || t == "float64") return PlyType::kFloat64;
  throw std::runtime_error("PLY: unknown property type '" + t + "'");
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

template <typename T>
double load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double decode_binary(PlyType t, const char* p) {
  switch (t) {
    case PlyType::kInt8: return load_le<std::int8_t>(p);
    case PlyType::kUint8: return load_le<std::uint8_t>(p);
    case PlyType::kInt16: return load_le<std::int16_t>(p);
    case PlyType::kUint16: return load_le<std::uint16_t>(p);
    case PlyType::kInt32: return load_le<std::int32_t>(p);
    case PlyType::kUint32: return load_le<std::uint32_t>(p);
    case PlyType::kFloat32: return load_le<float>(p);
    case PlyType::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON " + path.string() + ": " + e.what());
  }
}

std::string image_name(int image_id) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << image_id << ".png";
  return os.str();
}

RigidPose pose_from_bop(const json& R, const json& t) {
  if (R.size() != 9 || t.size() != 3) throw std::runtime_error("pose needs 9 rotation and 3 translation values");
  Mat3 rot;
  for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = R[i].get<double>();
  // Re-orthonormalize: files carry limited precision.
  Eigen::JacobiSVD<Mat3> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 ortho = svd.matrixU() * svd.matrixV().transpose();
  if (ortho.determinant() < 0) throw std::runtime_error("pose rotation has negative determinant");
  return {ortho, Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()) * 1e-3};
}

}  // namespace

ObjectModel load_ply(const fs::path& path, int object_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PLY: " + path.string());

  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw std::runtime_error("not a PLY file: " + path.string());

  bool ascii = false;
  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<PlyProperty> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") ascii = true;
      else if (fmt != "binary_little_endian")
        throw std::runtime_error("PLY: unsupported format '" + fmt + "'");
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex = seen_vertex = true;
      } else {
        if (!seen_vertex && count > 0)
          throw std::runtime_error("PLY: unsupported element layout (vertex must come first)");
        in_vertex = false;
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw std::runtime_error("PLY: unsupported list property on vertex element");
      ls >> name;
      props.push_back({name, parse_ply_type(type)});
    } else if (word == "end_header") {
      break;
    }
  }
  if (!seen_vertex || vertex_count == 0) throw std::runtime_error("PLY: zero vertices in " + path.string());

  auto find = [&](const char* name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i].name == name) return static_cast<int>(i);
    return -1;
  };
  const std::array<int, 3> ix{find("x"), find("y"), find("z")};
  const std::array<int, 3> in_{find("nx"), find("ny"), find("nz")};
  const std::array<int, 3> ic{find("red"), find("green"), find("blue")};
  if (ix[0] < 0 || ix[1] < 0 || ix[2] < 0) throw std::runtime_error("PLY: vertex element lacks x/y/z");
  const bool has_n = in_[0] >= 0 && in_[1] >= 0 && in_[2] >= 0;
  const bool has_c = ic[0] >= 0 && ic[1] >= 0 && ic[2] >= 0;

  std::vector<std::size_t> offsets(props.size());
  std::size_t record = 0;
  for (std::size_t i = 0; i < props.size(); ++i) {
    offsets[i] = record;
    record += ply_type_size(props[i].type);
  }

  ObjectModel model;
  model.object_id = object_id;
  PointCloud& cloud = model.cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> values(props.size());
  std::vector<char> buf(record);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (ascii) {
      for (double& x : values)
        if (!(in >> x)) throw std::runtime_error("PLY: truncated ASCII vertex data");
    } else {
      if (!in.read(buf.data(), static_cast<std::streamsize>(record)))
        throw std::runtime_error("PLY: truncated binary vertex data");
      for (std::size_t i = 0; i < props.size(); ++i) values[i] = decode_binary(props[i].type, buf.data() + offsets[i]);
    }
    cloud.points.emplace_back(values[ix[0]] * 1e-3, values[ix[1]] * 1e-3, values[ix[2]] * 1e-3);
    if (has_n) {
      Vec3 n(values[in_[0]], values[in_[1]], values[in_[2]]);
      const double len = n.norm();
      cloud.normals.push_back(len > 0.0 ? Vec3(n / len) : Vec3(0, 0, 1));
    }
    if (has_c)
      cloud.colors.push_back({static_cast<std::uint8_t>(values[ic[0]]), static_cast<std::uint8_t>(values[ic[1]]),
                              static_cast<std::uint8_t>(values[ic[2]])});
  }
  cloud.validate();
  model.diameter = cloud_diameter(cloud.points);
  return model;
}

void write_ply(const fs::path& path, const PointCloud& cloud, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PLY: " + path.string());
  const bool bin = format == PlyFormat::kBinaryLittleEndian;
  out << "ply\nformat " << (bin ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals()) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::array<float, 6> f{};
    const Vec3 p = cloud.points[i] * 1e3;
    int nf = 3;
    f[0] = static_cast<float>(p.x());
    f[1] = static_cast<float>(p.y());
    f[2] = static_cast<float>(p.z());
    if (cloud.has_normals()) {
      f[3] = static_cast<float>(cloud.normals[i].x());
      f[4] = static_cast<float>(cloud.normals[i].y());
      f[5] = static_cast<float>(cloud.normals[i].z());
      nf = 6;
    }
    if (bin) {
      out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(nf * sizeof(float)));
      if (cloud.has_colors()) out.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
    } else {
      for (int k = 0; k < nf; ++k) out << (k ? " " : "") << f[k];
      if (cloud.has_colors())
        for (auto c : cloud.colors[i]) out << ' ' << static_cast<int>(c);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("PLY write failed: " + path.string());
}

std::vector<int> list_scene_images(const fs::path& scene_dir) {
  const json cams = read_json(scene_dir / "scene_camera.json");
  std::vector<int> ids;
  for (auto it = cams.begin(); it != cams.end(); ++it) ids.push_back(std::stoi(it.key()));
  std::sort(ids.begin(), ids.end());
  return ids;
}

SceneFrame load_scene(const fs::path& scene_dir, int image_id) {
  const json cams = read_json(scene_dir / "scene_camera.json");
  const std::string key = std::to_string(image_id);
  if (!cams.contains(key)) throw std::runtime_error("scene_camera.json has no image id " + key);
  const json& cam = cams.at(key);
  if (!cam.contains("cam_K") || cam["cam_K"].size() != 9 || !cam.contains("depth_scale"))
    throw std::runtime_error("scene_camera.json entry " + key + " lacks cam_K or depth_scale");

  SceneFrame frame;
  const json& k = cam["cam_K"];
  frame.camera.fx = k[0].get<double>();
  frame.camera.cx = k[2].get<double>();
  frame.camera.fy = k[4].get<double>();
  frame.camera.cy = k[5].get<double>();
  frame.depth = read_depth_png(scene_dir / "depth" / image_name(image_id), cam["depth_scale"].get<double>());
  frame.camera.width = frame.depth.width;
  frame.camera.height = frame.depth.height;
  if ((cam.contains("width") && cam["width"].get<int>() != frame.depth.width) ||
      (cam.contains("height") && cam["height"].get<int>() != frame.depth.height))
    throw std::runtime_error("depth image size does not match camera entry " + key);
  try {
    frame.camera.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("image/intrinsics mismatch: ") + e.what());
  }

  const fs::path rgb_path = scene_dir / "rgb" / image_name(image_id);
  if (fs::exists(rgb_path)) {
    ColorImage rgb = read_color_png(rgb_path);
    if (rgb.width != frame.depth.width || rgb.height != frame.depth.height)
      throw std::runtime_error("rgb and depth sizes differ for image " + key);
    frame.rgb = std::move(rgb);
  }
  return frame;
}

std::map<int, std::vector<GtInstance>> load_scene_gt(const fs::path& path) {
  const json gt = read_json(path);
  std::map<int, std::vector<GtInstance>> out;
  for (auto it = gt.begin(); it != gt.end(); ++it) {
    auto& list = out[std::stoi(it.key())];
    for (const json& inst : it.value())
      list.push_back({inst.at("obj_id").get<int>(), pose_from_bop(inst.at("cam_R_m2c"), inst.at("cam_t_m2c"))});
  }
  return out;
}

std::vector<RigidPose> discretize_continuous_symmetry(const Vec3& axis, const Vec3& offset, int steps) {
  std::vector<RigidPose> out;
  out.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / steps;
    const Quat q(Eigen::AngleAxisd(angle, axis.normalized()));
    out.emplace_back(q, offset - (q * offset));
  }
  return out;
}

std::map<int, ModelInfo> load_models_info(const fs::path& path, int continuous_steps) {
  const json info = read_json(path);
  std::map<int, ModelInfo> out;
  for (auto it = info.begin(); it != info.end(); ++it) {
    const json& e = it.value();
    ModelInfo mi;
    mi.diameter = e.at("diameter").get<double>() * 1e-3;
    std::vector<RigidPose> discrete{RigidPose::identity()};
    if (e.contains("symmetries_discrete")) {
      for (const json& m : e["symmetries_discrete"]) {
        if (m.size() != 16) throw std::runtime_error("symmetries_discrete entries must have 16 values");
        json R = json::array(), t = json::array();
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) R.push_back(m[r * 4 + c]);
          t.push_back(m[r * 4 + 3]);
        }
        RigidPose s = pose_from_bop(R, t);
        if (!poses_equal(s, RigidPose::identity(), 1e-6, 1e-9)) discrete.push_back(s);
      }
    }
    std::vector<RigidPose> continuous{RigidPose::identity()};
    if (e.contains("symmetries_continuous")) {
      for (const json& c : e["symmetries_continuous"]) {
        const Vec3 axis(c.at("axis")[0].get<double>(), c.at("axis")[1].get<double>(), c.at("axis")[2].get<double>());
        const Vec3 off = Vec3(c.at("offset")[0].get<double>(), c.at("offset")[1].get<double>(),
                              c.at("offset")[2].get<double>()) * 1e-3;
        continuous = discretize_continuous_symmetry(axis, off, continuous_steps);
      }
    }
    mi.symmetries.clear();
    for (const RigidPose& d : discrete)
      for (const RigidPose& c : continuous) mi.symmetries.push_back(compose(d, c));
    out[std::stoi(it.key())] = std::move(mi);
  }
  return out;
}

ObjectModel load_object_model(const fs::path& models_dir, int object_id) {
  std::ostringstream name;
  name << "obj_" << std::setw(6) << std::setfill('0') << object_id << ".ply";
  ObjectModel model = load_ply(models_dir / name.str(), object_id);
  const fs::path info_path = models_dir / "models_info.json";
  if (fs::exists(info_path)) {
    const auto info = load_models_info(info_path);
    if (auto it = info.find(object_id); it != info.end()) {
      model.diameter = std::max(model.diameter, it->second.diameter);
      model.symmetries = it->second.symmetries;
    }
  }
  return model;
}

OrganizedCloud unproject_depth(const DepthMap& depth, const CameraIntrinsics& K, const BinaryMask* mask) {
  if (mask && (mask->width != depth.width || mask->height != depth.height))
    throw std::invalid_argument("unproject_depth: mask size differs from depth");
  OrganizedCloud out;
  out.width = depth.width;
  out.height = depth.height;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      if (depth.at(u, v) == 0) continue;
      if (mask && !mask->at(u, v)) continue;
      out.cloud.points.push_back(K.unproject(u, v, depth.meters(u, v)));
      out.pixel_index.push_back(v * depth.width + u);
    }
  return out;
}

OrganizedCloud estimate_normals(const DepthMap& depth, const CameraIntrinsics& K, const OrganizedCloud& organized) {
  constexpr int kHalf = 2;
  constexpr int kMinNeighbors = 6;
  constexpr double kRelDepthJump = 0.02;

  OrganizedCloud out;
  out.width = organized.width;
  out.height = organized.height;
  const bool colored = organized.cloud.has_colors();
  for (std::size_t i = 0; i < organized.cloud.size(); ++i) {
    const int pix = organized.pixel_index[i];
    const int u0 = pix % depth.width, v0 = pix / depth.width;
    const double z0 = depth.meters(u0, v0);
    const Vec3& p0 = organized.cloud.points[i];

    Vec3 sum = p0;
    Mat3 outer = p0 * p0.transpose();
    int n = 0;
    for (int dv = -kHalf; dv <= kHalf; ++dv)
      for (int du = -kHalf; du <= kHalf; ++du) {
        if (du == 0 && dv == 0) continue;
        const int u = u0 + du, v = v0 + dv;
        if (u < 0 || v < 0 || u >= depth.width || v >= depth.height) continue;
        if (depth.at(u, v) == 0) continue;
        const double z = depth.meters(u, v);
        if (std::abs(z - z0) > kRelDepthJump * z0) continue;
        const Vec3 q = K.unproject(u, v, z);
        sum += q;
        outer += q * q.transpose();
        ++n;
      }
    if (n < kMinNeighbors) continue;

    const double count = n + 1;
    const Vec3 mean = sum / count;
    const Mat3 cov = outer / count - mean * mean.transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Vec3 normal = es.eigenvectors().col(0).normalized();
    if (normal.dot(p0) > 0.0) normal = -normal;

    out.cloud.points.push_back(p0);
    out.cloud.normals.push_back(normal);
    if (colored) out.cloud.colors.push_back(organized.cloud.colors[i]);
    out.pixel_index.push_back(pix);
  }
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("voxel_downsample: step must be positive");
  using Key = std::array<std::int64_t, 3>;
  std::vector<std::pair<Key, std::size_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    keyed.push_back({{static_cast<std::int64_t>(std::floor(p.x() / step)),
                      static_cast<std::int64_t>(std::floor(p.y() / step)),
                      static_cast<std::int64_t>(std::floor(p.z() / step))},
                     i});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  PointCloud out;
  const bool with_n = cloud.has_normals(), with_c = cloud.has_colors();
  for (std::size_t b = 0; b < keyed.size();) {
    std::size_t e = b;
    Vec3 p = Vec3::Zero(), n = Vec3::Zero();
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    while (e < keyed.size() && keyed[e].first == keyed[b].first) {
      const std::size_t i = keyed[e].second;
      p += cloud.points[i];
      if (with_n) n += cloud.normals[i];
      if (with_c) c += Eigen::Vector3d(cloud.colors[i][0], cloud.colors[i][1], cloud.colors[i][2]);
      ++e;
    }
    const double cnt = static_cast<double>(e - b);
    if (with_n) {
      // Opposing normals cancel; fall back to the first one.
      const double len = n.norm();
      out.normals.push_back(len < 1e-9 ? cloud.normals[keyed[b].second] : Vec3(n / len));
    }
    out.points.push_back(p / cnt);
    if (with_c) {
      c /= cnt;
      out.colors.push_back({static_cast<std::uint8_t>(std::lround(c.x())), static_cast<std::uint8_t>(std::lround(c.y())),
                            static_cast<std::uint8_t>(std::lround(c.z()))});
    }
    b = e;
  }
  return out;
}

BinaryMask dilate_mask(const BinaryMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("dilate_mask: negative radius");
  if (radius == 0) return mask;
  // Per-row half-widths of the disk.
  std::vector<int> half(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy)
    half[dy + radius] = static_cast<int>(std::floor(std::sqrt(static_cast<double>(radius * radius - dy * dy))));
  BinaryMask out(mask.width, mask.height);
  for (int v = 0; v < mask.height; ++v)
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int y = v + dy;
        if (y < 0 || y >= mask.height) continue;
        const int h = half[dy + radius];
        const int x0 = std::max(0, u - h), x1 = std::min(mask.width - 1, u + h);
        std::fill(out.bits.begin() + static_cast<std::ptrdiff_t>(y) * mask.width + x0,
                  out.bits.begin() + static_cast<std::ptrdiff_t>(y) * mask.width + x1 + 1, std::uint8_t{1});
      }
    }
  return out;
}

}  // namespace maskppf
