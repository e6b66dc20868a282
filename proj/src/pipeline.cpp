#include "mvref/pipeline.hpp"

#include <set>

#include "mvref/parallel.hpp"
#include "mvref/resample.hpp"

namespace mvref {

using nlohmann::json;

void RunConfig::validate() const {
  MVREF_REQUIRE(sr_factor >= 1, "sr_factor must be positive");
  MVREF_REQUIRE(v >= 1, "V must be at least 1");
  MVREF_REQUIRE(l >= 1, "L must be at least 1");
  MVREF_REQUIRE(ps >= 1, "patch size must be positive");
  MVREF_REQUIRE(occl_tol >= 0.0 && std::isfinite(occl_tol), "occl_tol must be a non-negative number");
  MVREF_REQUIRE(min_valid_frac >= 0.0 && min_valid_frac <= 1.0, "min_valid_frac must lie in [0, 1]");
}

json RunConfig::to_json() const {
  return {{"sr_factor", sr_factor}, {"V", v},           {"L", l},
          {"ps", ps},               {"occl_tol", occl_tol}, {"sampling", std::string(to_string(sampling))},
          {"min_valid_frac", min_valid_frac}, {"seed", seed}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw FormatError("run config must be a JSON object");
  static const std::set<std::string> known{"sr_factor", "V", "L", "ps", "occl_tol", "sampling", "min_valid_frac", "seed"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw FormatError("run config: unknown key '" + key + "'");
  RunConfig c;
  try {
    c.sr_factor = j.value("sr_factor", c.sr_factor);
    c.v = j.value("V", c.v);
    c.l = j.value("L", c.l);
    c.ps = j.value("ps", c.ps);
    c.occl_tol = j.value("occl_tol", c.occl_tol);
    if (j.contains("sampling")) c.sampling = parse_sampling(j["sampling"].get<std::string>());
    c.min_valid_frac = j.value("min_valid_frac", c.min_valid_frac);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<int> SceneData::view_ids() const {
  std::vector<int> ids;
  for (const auto& c : cameras) ids.push_back(c.view_id);
  return ids;
}

std::size_t SceneData::index_of(int view_id) const {
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (cameras[i].view_id == view_id) return i;
  throw InvalidArgument("scene has no view with id " + std::to_string(view_id));
}

SceneData scene_from_case(const MvisrCase& c, const std::string& name) {
  SceneData s;
  s.name = name;
  s.sr_factor = c.factor;
  s.cameras = c.lr_cameras;
  s.images = c.lr_images;
  s.depths = c.lr_depths;
  for (const auto& gt : c.hr_images) s.ground_truth.emplace_back(gt);
  return s;
}

SceneData load_scene(const std::filesystem::path& manifest_path) {
  const io::SceneManifest m = io::read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  SceneData s;
  s.name = m.scene_name;
  s.sr_factor = m.sr_factor;
  for (const auto& v : m.views) {
    s.cameras.push_back(v.camera);
    s.images.push_back(io::read_png(dir / v.image));
    s.depths.push_back(io::read_pfm(dir / v.depth));
    const auto& k = v.camera.intrinsics;
    if (s.images.back().width() != k.width() || s.images.back().height() != k.height() ||
        s.depths.back().width() != k.width() || s.depths.back().height() != k.height()) {
      throw FormatError("view " + std::to_string(v.view_id) + ": image/depth size differs from the camera");
    }
    if (v.ground_truth) {
      s.ground_truth.emplace_back(io::read_png(dir / *v.ground_truth));
    } else {
      s.ground_truth.emplace_back(std::nullopt);
    }
  }
  return s;
}

io::SceneManifest write_scene(const MvisrCase& c, const std::string& name, const RunConfig& config,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::SceneManifest m;
  m.scene_name = name;
  m.sr_factor = c.factor;
  m.run_config = config.to_json();
  for (std::size_t i = 0; i < c.lr_cameras.size(); ++i) {
    const std::string stem = "view_" + std::to_string(c.lr_cameras[i].view_id);
    io::ViewRecord r{c.lr_cameras[i].view_id, stem + "_lr.png", stem + "_lr_depth.pfm", c.lr_cameras[i],
                     stem + "_hr.png"};
    io::write_png(c.lr_images[i], dir / r.image);
    io::write_pfm(c.lr_depths[i], dir / r.depth);
    io::write_png(c.hr_images[i], dir / *r.ground_truth);
    m.views.push_back(std::move(r));
  }
  io::write_manifest(m, dir / "manifest.json");
  return m;
}

WarpOptions warp_options(const RunConfig& config) {
  return WarpOptions{config.sr_factor, config.sampling, config.occl_tol};
}

std::vector<WarpedView> warp_all(const SceneData& scene, int target_id, const RunConfig& config,
                                 DepthMap* target_depth_hr) {
  config.validate();
  MVREF_REQUIRE(config.sr_factor == scene.sr_factor, "run sr_factor " + std::to_string(config.sr_factor) +
                                                         " differs from the scene's " + std::to_string(scene.sr_factor));
  const std::size_t t = scene.index_of(target_id);
  std::vector<DepthMap> hr_depths(scene.depths.size());
  parallel_for(static_cast<int>(scene.depths.size()), [&](int i) {
    hr_depths[i] = upsample_depth_bicubic(scene.depths[i], config.sr_factor);
  });
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i)
    if (i != t) sources.push_back(i);
  std::vector<WarpedView> warped(sources.size());
  const WarpOptions opts = warp_options(config);
  const WarpTarget target{scene.cameras[t], hr_depths[t]};
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const std::size_t i = sources[k];
    warped[k] = warp_view(WarpSource{scene.cameras[i], scene.images[i], hr_depths[i]}, target, opts);
  }
  if (target_depth_hr) *target_depth_hr = std::move(hr_depths[t]);
  return warped;
}

GarsResult run_gars(const SceneData& scene, int target_id, const RunConfig& config) {
  GarsResult g;
  g.target_id = target_id;
  g.warped = warp_all(scene, target_id, config, &g.target_depth_hr);
  const std::size_t t = scene.index_of(target_id);
  g.bicubic = upsample_bicubic(scene.images[t], config.sr_factor);
  g.grid = PatchGrid::cover(g.bicubic.width(), g.bicubic.height(), config.ps);

  const auto ids = scene.view_ids();
  g.nearby_ids = select_nearby_views(target_id, ids, config.l);
  std::vector<WarpedView> nearby;
  for (int id : g.nearby_ids) {
    for (const auto& w : g.warped)
      if (w.source_id == id) nearby.push_back(w);
  }

  auto build = [&](const std::vector<WarpedView>& views, std::vector<HFIndexMap>& maps,
                   std::vector<SynthesizedReference>& refs) {
    std::vector<Grid<double>> means(views.size());
    parallel_for(static_cast<int>(views.size()), [&](int i) {
      means[i] = patch_mean_depth(views[i], g.grid, config.min_valid_frac);
    });
    maps = hf_index_maps(means, config.v);
    refs.resize(maps.size());
    for (std::size_t k = 0; k < maps.size(); ++k)
      refs[k] = synthesize_reference(views, maps[k], g.grid, g.bicubic);
  };
  build(g.warped, g.mvr_maps, g.mvrs);
  build(nearby, g.nvr_maps, g.nvrs);
  return g;
}

}  // namespace mvref
