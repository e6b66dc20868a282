#include "mvref/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/SVD>
#include <png.h>

namespace mvref::io {

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw FormatError("failed writing " + path.string());
}

// ---------------------------------------------------------------- PFM

DepthMap read_pfm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  if (!(is >> magic)) throw FormatError(path.string() + ": empty PFM file");
  if (magic == "PF") throw FormatError(path.string() + ": color PFM is not a depth map");
  if (magic != "Pf") throw FormatError(path.string() + ": not a PFM file");
  if (!(is >> width >> height >> scale) || width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale))
    throw FormatError(path.string() + ": malformed PFM header");
  is.get();  // single whitespace byte ends the header
  const bool little = scale < 0.0;
  DepthMap depth(width, height);
  std::vector<char> row(static_cast<std::size_t>(width) * 4);
  for (int r = 0; r < height; ++r) {
    if (!is.read(row.data(), static_cast<std::streamsize>(row.size())))
      throw FormatError(path.string() + ": truncated PFM data");
    const int y = height - 1 - r;
    for (int x = 0; x < width; ++x) {
      std::array<char, 4> b;
      std::memcpy(b.data(), row.data() + 4 * x, 4);
      if (little != (std::endian::native == std::endian::little)) std::reverse(b.begin(), b.end());
      float v;
      std::memcpy(&v, b.data(), 4);
      depth.set(x, y, v);
    }
  }
  return depth;
}

void write_pfm(const DepthMap& depth, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "Pf\n" << depth.width() << ' ' << depth.height() << "\n-1.0\n";
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) {
      const float v = depth.valid(x, y) ? static_cast<float>(depth.value(x, y)) : 0.0f;
      std::array<char, 4> b;
      std::memcpy(b.data(), &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
      os.write(b.data(), 4);
    }
  }
  if (!os) throw FormatError("failed writing " + path.string());
}

// ---------------------------------------------------------------- PNG

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png_buffer(const fs::path& path, int width, int height, std::uint32_t format,
                      const std::vector<std::uint8_t>& buffer) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot write PNG " + path.string() + ": " + msg);
  }
}

}  // namespace

ViewImage read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(img.width);
  const int h = static_cast<int>(img.height);
  ViewImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = buffer.data() + 3 * (static_cast<std::size_t>(y) * w + x);
      out.set_unchecked(x, y, Rgb{p[0] / 255.0, p[1] / 255.0, p[2] / 255.0});
    }
  return out;
}

void write_png(const ViewImage& image, const fs::path& path) {
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(image.width()) * image.height() * 3);
  std::size_t i = 0;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) buffer[i++] = to_byte(image.channel(x, y, c));
  write_png_buffer(path, image.width(), image.height(), PNG_FORMAT_RGB, buffer);
}

void write_mask_png(const Mask& mask, const fs::path& path) {
  std::vector<std::uint8_t> buffer(mask.size());
  std::transform(mask.data().begin(), mask.data().end(), buffer.begin(),
                 [](std::uint8_t m) { return m ? 255 : 0; });
  write_png_buffer(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, buffer);
}

void write_gray_png(const Grid<double>& values, const fs::path& path) {
  std::vector<std::uint8_t> buffer(values.size());
  std::transform(values.data().begin(), values.data().end(), buffer.begin(), to_byte);
  write_png_buffer(path, values.width(), values.height(), PNG_FORMAT_GRAY, buffer);
}

// ---------------------------------------------------------------- cameras

Mat3 orthonormalize_rotation(const Mat3& r) {
  if (!r.allFinite()) throw FormatError("rotation contains non-finite entries");
  const double drift = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (drift > kMaxRotationDrift) {
    throw FormatError("rotation is not orthonormal (drift " + std::to_string(drift) + " exceeds 1e-6)");
  }
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0.0) throw FormatError("rotation has determinant -1 (reflection)");
  return q;
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw FormatError(ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(ctx + ": field '" + key + "': " + e.what());
  }
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& j, const char* key, const std::string& ctx) {
  const auto v = field<std::vector<double>>(j, key, ctx);
  if (v.size() != N) {
    throw FormatError(ctx + ": field '" + key + "' must hold " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out;
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j, const char* key, const std::string& ctx) {
  const auto a = fixed_array<3>(j, key, ctx);
  return {a[0], a[1], a[2]};
}

}  // namespace

json camera_to_json(const CameraView& camera) {
  const auto& k = camera.intrinsics;
  const auto& r = camera.pose.rotation();
  const auto& t = camera.pose.translation();
  json rot = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot.push_back(r(i, j));
  return {{"view_id", camera.view_id}, {"fx", k.fx()},           {"fy", k.fy()},
          {"cx", k.cx()},              {"cy", k.cy()},           {"width", k.width()},
          {"height", k.height()},      {"rotation", rot},        {"translation", vec3_json(t)}};
}

CameraView camera_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("camera entry must be an object");
  const std::string ctx = "camera " + (j.contains("view_id") ? j["view_id"].dump() : std::string("?"));
  const auto rot = fixed_array<9>(j, "rotation", ctx);
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r(i, k) = rot[3 * i + k];
  try {
    r = orthonormalize_rotation(r);
    return CameraView{field<int>(j, "view_id", ctx),
                      Intrinsics(field<double>(j, "fx", ctx), field<double>(j, "fy", ctx),
                                 field<double>(j, "cx", ctx), field<double>(j, "cy", ctx),
                                 field<int>(j, "width", ctx), field<int>(j, "height", ctx)),
                      Pose(r, vec3_from(j, "translation", ctx))};
  } catch (const InvalidArgument& e) {
    throw FormatError(ctx + ": " + e.what());
  } catch (const FormatError& e) {
    const std::string what = e.what();
    if (what.starts_with(ctx)) throw;
    throw FormatError(ctx + ": " + what);
  }
}

std::vector<CameraView> read_camera_json(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object() || !j.contains("cameras") || !j["cameras"].is_array())
    throw FormatError(path.string() + ": expected {\"cameras\": [...]}");
  std::vector<CameraView> out;
  std::set<int> seen;
  for (const auto& c : j["cameras"]) {
    out.push_back(camera_from_json(c));
    if (!seen.insert(out.back().view_id).second)
      throw FormatError(path.string() + ": duplicate view_id " + std::to_string(out.back().view_id));
  }
  return out;
}

void write_camera_json(const std::vector<CameraView>& cameras, const fs::path& path) {
  json arr = json::array();
  for (const auto& c : cameras) arr.push_back(camera_to_json(c));
  write_json({{"cameras", arr}}, path);
}

// ---------------------------------------------------------------- COLMAP

Mat3 quaternion_to_rotation(double qw, double qx, double qy, double qz) {
  const double n = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
  if (!(n > 1e-12) || !std::isfinite(n)) throw FormatError("quaternion has zero or non-finite norm");
  qw /= n;
  qx /= n;
  qy /= n;
  qz /= n;
  Mat3 r;
  r << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qw * qz), 2 * (qx * qz + qw * qy),
      2 * (qx * qy + qw * qz), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qw * qx),
      2 * (qx * qz - qw * qy), 2 * (qy * qz + qw * qx), 1 - 2 * (qx * qx + qy * qy);
  return r;
}

namespace {

struct ColmapCamera {
  double fx, fy, cx, cy;
  int width, height;
};

bool is_skippable(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

[[noreturn]] void colmap_error(const char* file, int line_no, const std::string& msg) {
  throw FormatError(std::string(file) + " line " + std::to_string(line_no) + ": " + msg);
}

std::map<int, ColmapCamera> parse_colmap_cameras(const std::string& text) {
  std::map<int, ColmapCamera> cams;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    std::istringstream ls(line);
    int id, w, h;
    std::string model;
    if (!(ls >> id >> model >> w >> h)) colmap_error("cameras.txt", line_no, "expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS");
    std::vector<double> params;
    for (double p; ls >> p;) params.push_back(p);
    if (!ls.eof()) colmap_error("cameras.txt", line_no, "non-numeric camera parameter");
    ColmapCamera c{};
    c.width = w;
    c.height = h;
    if (model == "SIMPLE_PINHOLE") {
      if (params.size() != 3) colmap_error("cameras.txt", line_no, "SIMPLE_PINHOLE takes 3 parameters (f cx cy)");
      c.fx = c.fy = params[0];
      c.cx = params[1];
      c.cy = params[2];
    } else if (model == "PINHOLE") {
      if (params.size() != 4) colmap_error("cameras.txt", line_no, "PINHOLE takes 4 parameters (fx fy cx cy)");
      c.fx = params[0];
      c.fy = params[1];
      c.cx = params[2];
      c.cy = params[3];
    } else {
      colmap_error("cameras.txt", line_no,
                   "unsupported camera model " + model + " (supported: PINHOLE, SIMPLE_PINHOLE)");
    }
    if (!cams.emplace(id, c).second) colmap_error("cameras.txt", line_no, "duplicate CAMERA_ID " + std::to_string(id));
  }
  return cams;
}

}  // namespace

std::vector<CameraView> parse_colmap_text(const std::string& cameras_txt, const std::string& images_txt) {
  const auto cams = parse_colmap_cameras(cameras_txt);
  std::map<int, CameraView> views;
  std::istringstream in(images_txt);
  std::string line;
  int line_no = 0;
  bool expect_points = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (expect_points) {  // POINTS2D line, possibly empty
      expect_points = false;
      continue;
    }
    if (is_skippable(line)) continue;
    std::istringstream ls(line);
    int image_id, camera_id;
    double qw, qx, qy, qz, tx, ty, tz;
    std::string name;
    if (!(ls >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> name))
      colmap_error("images.txt", line_no, "expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
    const auto cam = cams.find(camera_id);
    if (cam == cams.end()) colmap_error("images.txt", line_no, "unknown CAMERA_ID " + std::to_string(camera_id));
    const ColmapCamera& c = cam->second;
    try {
      CameraView view{image_id, Intrinsics(c.fx, c.fy, c.cx - 0.5, c.cy - 0.5, c.width, c.height),
                      Pose(quaternion_to_rotation(qw, qx, qy, qz), Vec3(tx, ty, tz))};
      if (!views.emplace(image_id, view).second)
        colmap_error("images.txt", line_no, "duplicate IMAGE_ID " + std::to_string(image_id));
    } catch (const InvalidArgument& e) {
      colmap_error("images.txt", line_no, e.what());
    } catch (const FormatError& e) {
      const std::string what = e.what();
      if (what.starts_with("images.txt")) throw;
      colmap_error("images.txt", line_no, what);
    }
    expect_points = true;
  }
  std::vector<CameraView> out;
  for (auto& [_, v] : views) out.push_back(v);
  return out;
}

std::vector<CameraView> read_colmap_text(const fs::path& cameras_txt, const fs::path& images_txt) {
  return parse_colmap_text(read_text(cameras_txt), read_text(images_txt));
}

// ---------------------------------------------------------------- scenes

namespace {

json texture_json(const Texture& t) {
  return {{"checker_period", t.checker_period}, {"freq_u", t.freq_u}, {"freq_v", t.freq_v},
          {"phase", t.phase}, {"sine_amplitude", t.sine_amplitude},
          {"base", json::array({t.base.r, t.base.g, t.base.b})}};
}

Texture texture_from(const json& j, const std::string& ctx) {
  Texture t;
  if (!j.is_object()) throw FormatError(ctx + ": texture must be an object");
  t.checker_period = j.value("checker_period", t.checker_period);
  t.freq_u = j.value("freq_u", t.freq_u);
  t.freq_v = j.value("freq_v", t.freq_v);
  t.phase = j.value("phase", t.phase);
  t.sine_amplitude = j.value("sine_amplitude", t.sine_amplitude);
  if (j.contains("base")) {
    const auto b = fixed_array<3>(j, "base", ctx);
    t.base = {b[0], b[1], b[2]};
  }
  return t;
}

}  // namespace

json scene_to_json(const SceneSpec& spec) {
  json planes = json::array();
  for (const auto& p : spec.planes) {
    planes.push_back({{"origin", vec3_json(p.origin)}, {"axis_u", vec3_json(p.axis_u)},
                      {"axis_v", vec3_json(p.axis_v)}, {"half_u", p.half_u}, {"half_v", p.half_v},
                      {"texture", texture_json(p.texture)}});
  }
  json cams = json::array();
  for (const auto& c : spec.cameras) cams.push_back(camera_to_json(c));
  return {{"name", spec.name}, {"hr_width", spec.hr_width}, {"hr_height", spec.hr_height},
          {"seed", spec.seed}, {"planes", planes}, {"cameras", cams}};
}

SceneSpec scene_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("scene spec must be a JSON object");
  SceneSpec spec;
  try {
    if (j.contains("preset")) {
      const auto preset = field<std::string>(j, "preset", "scene spec");
      const int size = j.value("hr_size", 256);
      if (preset == "desk") {
        spec = scenes::desk(size);
      } else if (preset == "occlusion") {
        spec = scenes::occlusion(size);
      } else if (preset == "closeup") {
        spec = scenes::closeup(size);
      } else {
        throw FormatError("unknown scene preset '" + preset + "' (desk, occlusion, closeup)");
      }
      if (j.contains("name")) spec.name = field<std::string>(j, "name", "scene spec");
    } else {
      spec.name = j.value("name", spec.name);
      spec.hr_width = field<int>(j, "hr_width", "scene spec");
      spec.hr_height = field<int>(j, "hr_height", "scene spec");
      spec.seed = j.value("seed", std::uint64_t{0});
      for (const auto& p : field<json>(j, "planes", "scene spec")) {
        const std::string ctx = "plane " + std::to_string(spec.planes.size());
        ScenePlane plane;
        plane.origin = vec3_from(p, "origin", ctx);
        plane.axis_u = vec3_from(p, "axis_u", ctx);
        plane.axis_v = vec3_from(p, "axis_v", ctx);
        plane.half_u = field<double>(p, "half_u", ctx);
        plane.half_v = field<double>(p, "half_v", ctx);
        if (p.contains("texture")) plane.texture = texture_from(p["texture"], ctx);
        spec.planes.push_back(plane);
      }
      for (const auto& c : field<json>(j, "cameras", "scene spec")) spec.cameras.push_back(camera_from_json(c));
    }
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("scene spec: ") + e.what());
  }
  return spec;
}

SceneSpec read_scene_spec(const fs::path& path) { return scene_from_json(read_json(path)); }

// ---------------------------------------------------------------- manifest

void SceneManifest::validate() const {
  if (sr_factor < 1) throw FormatError("manifest: sr_factor must be positive");
  if (views.size() < 2) throw FormatError("manifest: at least two views are required");
  std::set<int> ids;
  for (const auto& v : views) {
    if (!ids.insert(v.view_id).second) throw FormatError("manifest: duplicate view_id " + std::to_string(v.view_id));
    if (v.camera.view_id != v.view_id)
      throw FormatError("manifest: camera view_id differs from record view_id " + std::to_string(v.view_id));
  }
}

std::vector<int> SceneManifest::view_ids() const {
  std::vector<int> ids;
  for (const auto& v : views) ids.push_back(v.view_id);
  return ids;
}

const ViewRecord& SceneManifest::view(int view_id) const {
  for (const auto& v : views)
    if (v.view_id == view_id) return v;
  throw InvalidArgument("manifest has no view with id " + std::to_string(view_id));
}

json manifest_to_json(const SceneManifest& m) {
  json views = json::array();
  for (const auto& v : m.views) {
    json r = {{"view_id", v.view_id}, {"image", v.image}, {"depth", v.depth}, {"camera", camera_to_json(v.camera)}};
    if (v.ground_truth) r["ground_truth"] = *v.ground_truth;
    views.push_back(r);
  }
  return {{"scene_name", m.scene_name}, {"sr_factor", m.sr_factor}, {"views", views}, {"run_config", m.run_config}};
}

SceneManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("manifest must be a JSON object");
  SceneManifest m;
  m.scene_name = field<std::string>(j, "scene_name", "manifest");
  m.sr_factor = field<int>(j, "sr_factor", "manifest");
  if (j.contains("run_config")) m.run_config = j["run_config"];
  for (const auto& v : field<json>(j, "views", "manifest")) {
    const std::string ctx = "manifest view";
    ViewRecord r{field<int>(v, "view_id", ctx), field<std::string>(v, "image", ctx),
                 field<std::string>(v, "depth", ctx), camera_from_json(field<json>(v, "camera", ctx)),
                 std::nullopt};
    if (v.contains("ground_truth")) r.ground_truth = field<std::string>(v, "ground_truth", ctx);
    m.views.push_back(std::move(r));
  }
  m.validate();
  return m;
}

SceneManifest read_manifest(const fs::path& path) { return manifest_from_json(read_json(path)); }

void write_manifest(const SceneManifest& m, const fs::path& path) {
  m.validate();
  write_json(manifest_to_json(m), path);
}

json provenance_to_json(const Grid<int>& provenance, int patch_size) {
  json rows = json::array();
  for (int r = 0; r < provenance.height(); ++r) {
    json row = json::array();
    for (int c = 0; c < provenance.width(); ++c) row.push_back(provenance(c, r));
    rows.push_back(row);
  }
  return {{"patch_size", patch_size}, {"rows", provenance.height()}, {"cols", provenance.width()},
          {"provenance", rows}};
}

}  // namespace mvref::io
