#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvref/geometry.hpp"
#include "mvref/image.hpp"
#include "mvref/scene.hpp"

namespace mvref::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Grayscale PFM ("Pf"). Rows are stored bottom-to-top; a negative scale marks
// little-endian samples. Invalid depths are written as 0 and every sample that
// is not finite and positive reads back as invalid.
DepthMap read_pfm(const fs::path& path);
void write_pfm(const DepthMap& depth, const fs::path& path);

// 8-bit RGB PNG; channel value v is stored as round(255 v) and read back as byte / 255.
ViewImage read_png(const fs::path& path);
void write_png(const ViewImage& image, const fs::path& path);
// 8-bit grayscale: nonzero mask entries become 255.
void write_mask_png(const Mask& mask, const fs::path& path);
// 8-bit grayscale of values in [0, 1] (clamped).
void write_gray_png(const Grid<double>& values, const fs::path& path);

// Rotation tolerated as drift before re-orthonormalization is refused.
inline constexpr double kMaxRotationDrift = 1e-6;
// Nearest rotation (SVD projection) when within kMaxRotationDrift of orthonormal.
Mat3 orthonormalize_rotation(const Mat3& r);

json camera_to_json(const CameraView& camera);
CameraView camera_from_json(const json& j);
// File layout: {"cameras": [camera, ...]}.
std::vector<CameraView> read_camera_json(const fs::path& path);
void write_camera_json(const std::vector<CameraView>& cameras, const fs::path& path);

// Hamilton quaternion (w, x, y, z) to rotation matrix; normalizes the input.
Mat3 quaternion_to_rotation(double qw, double qx, double qy, double qz);

// COLMAP text export (cameras.txt + images.txt), PINHOLE and SIMPLE_PINHOLE only.
// Views come back in image-id order with view_id = IMAGE_ID. COLMAP places the
// pixel-center origin at 0.5, so principal points are shifted by -0.5.
std::vector<CameraView> parse_colmap_text(const std::string& cameras_txt, const std::string& images_txt);
std::vector<CameraView> read_colmap_text(const fs::path& cameras_txt, const fs::path& images_txt);

json scene_to_json(const SceneSpec& spec);
// Accepts either a full scene description or {"preset": "desk"|"occlusion"|"closeup", "hr_size": N}.
SceneSpec scene_from_json(const json& j);
SceneSpec read_scene_spec(const fs::path& path);

struct ViewRecord {
  int view_id = 0;
  std::string image;  // LR color PNG, relative to the manifest directory
  std::string depth;  // LR depth PFM
  CameraView camera;  // LR intrinsics
  std::optional<std::string> ground_truth;  // HR color PNG, when known
};

struct SceneManifest {
  std::string scene_name;
  int sr_factor = 4;
  std::vector<ViewRecord> views;  // dataset order
  json run_config = json::object();

  void validate() const;
  std::vector<int> view_ids() const;
  const ViewRecord& view(int view_id) const;
};

json manifest_to_json(const SceneManifest& m);
SceneManifest manifest_from_json(const json& j);
SceneManifest read_manifest(const fs::path& path);
void write_manifest(const SceneManifest& m, const fs::path& path);

json read_json(const fs::path& path);
void write_json(const json& j, const fs::path& path);
std::string read_text(const fs::path& path);

// Per-patch provenance: {"patch_size", "rows", "cols", "provenance": [[...], ...]}.
json provenance_to_json(const Grid<int>& provenance, int patch_size);

}  // namespace mvref::io
