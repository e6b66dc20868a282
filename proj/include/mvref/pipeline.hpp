#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvref/gars.hpp"
#include "mvref/io.hpp"
#include "mvref/scene.hpp"
#include "mvref/warp.hpp"

namespace mvref {

struct RunConfig {
  int sr_factor = 4;
  int v = 6;
  int l = 6;
  int ps = 16;
  double occl_tol = 0.01;
  Sampling sampling = Sampling::Nearest;
  double min_valid_frac = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
};

// LR views of a capture in dataset order, cameras carrying LR intrinsics.
struct SceneData {
  std::string name;
  int sr_factor = 4;
  std::vector<CameraView> cameras;
  std::vector<ViewImage> images;
  std::vector<DepthMap> depths;
  std::vector<std::optional<ViewImage>> ground_truth;  // HR

  std::vector<int> view_ids() const;
  std::size_t index_of(int view_id) const;
};

SceneData scene_from_case(const MvisrCase& c, const std::string& name);
SceneData load_scene(const std::filesystem::path& manifest_path);

// Writes LR PNG/PFM/camera files plus HR ground truth and a manifest.json into dir.
io::SceneManifest write_scene(const MvisrCase& c, const std::string& name, const RunConfig& config,
                              const std::filesystem::path& dir);

struct GarsResult {
  int target_id = 0;
  PatchGrid grid;
  ViewImage bicubic;                 // HR fallback, also the network's Bic input
  DepthMap target_depth_hr;
  std::vector<WarpedView> warped;    // every other view, dataset order
  std::vector<int> nearby_ids;
  std::vector<HFIndexMap> mvr_maps;  // positions into warped
  std::vector<HFIndexMap> nvr_maps;  // positions into the nearby subset
  std::vector<SynthesizedReference> mvrs;
  std::vector<SynthesizedReference> nvrs;
};

WarpOptions warp_options(const RunConfig& config);

// Warps every non-target view onto the target HR grid.
std::vector<WarpedView> warp_all(const SceneData& scene, int target_id, const RunConfig& config,
                                 DepthMap* target_depth_hr = nullptr);

GarsResult run_gars(const SceneData& scene, int target_id, const RunConfig& config);

}  // namespace mvref
