#include "mvref/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvref/dhfs/network.hpp"
#include "mvref/io.hpp"
#include "mvref/metrics.hpp"
#include "mvref/pipeline.hpp"
#include "mvref/resample.hpp"

namespace mvref::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {}
  void info(const std::string& event, json fields = json::object()) {
    fields["level"] = "info";
    fields["event"] = event;
    err_ << fields.dump() << '\n';
  }

 private:
  std::ostream& err_;
};

struct Flags {
  std::string config_path;
  std::optional<int> target_id;
  std::optional<int> factor;
  std::optional<int> v;
  std::optional<int> l;
  std::optional<int> ps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> sampling;
  bool overwrite = false;
};

RunConfig resolve_config(const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = RunConfig::from_json(io::read_json(f.config_path));
  if (f.factor) c.sr_factor = *f.factor;
  if (f.v) c.v = *f.v;
  if (f.l) c.l = *f.l;
  if (f.ps) c.ps = *f.ps;
  if (f.seed) c.seed = *f.seed;
  if (f.sampling) c.sampling = parse_sampling(*f.sampling);
  c.validate();
  return c;
}

int require_target(const Flags& f) {
  if (!f.target_id) throw InvalidArgument("--target-id is required for this command");
  return *f.target_id;
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw InvalidArgument("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir) && !overwrite) {
      throw InvalidArgument("output directory " + dir.string() + " is not empty (pass --overwrite)");
    }
  } else {
    fs::create_directories(dir);
  }
}

void prepare_output_file(const fs::path& file, bool overwrite) {
  if (fs::exists(file) && !overwrite) {
    throw InvalidArgument("output file " + file.string() + " exists (pass --overwrite)");
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

json number_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

void write_run_record(const fs::path& dir, const std::string& command, const RunConfig& config, json outputs) {
  io::write_json({{"command", command}, {"run_config", config.to_json()}, {"outputs", std::move(outputs)}},
                 dir / "run.json");
}

Grid<double> index_visualization(const HFIndexMap& map, const PatchGrid& grid, int candidates) {
  Grid<double> vis(grid.hr_width, grid.hr_height, 0.0);
  for (int y = 0; y < grid.hr_height; ++y)
    for (int x = 0; x < grid.hr_width; ++x) {
      const int pick = map.index(x / grid.patch_size, y / grid.patch_size);
      vis(x, y) = pick == kSentinelNone ? 0.0 : (pick + 1.0) / candidates;
    }
  return vis;
}

Grid<double> selection_image(const dhfs::Tensor& t) {
  Grid<double> g(t.width(), t.height());
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) g(x, y) = t(0, y, x);
  return g;
}

std::string site_file_tag(std::string site) {
  for (char& ch : site)
    if (ch == '@') ch = '_';
  return site;
}

dhfs::NetworkConfig network_config(const std::string& path, std::optional<int> v) {
  dhfs::NetworkConfig nc = path.empty() ? dhfs::NetworkConfig::full() : dhfs::config_from_json(io::read_text(path));
  if (v) nc.v = *v;
  nc.validate();
  return nc;
}

// -------------------------------------------------------------- commands

void cmd_synth_scene(const std::string& spec_path, const fs::path& out_dir, const Flags& f, Logger& log) {
  const RunConfig config = resolve_config(f);
  const SceneSpec spec = io::read_scene_spec(spec_path);
  prepare_output_dir(out_dir, f.overwrite);
  log.info("render", {{"scene", spec.name}, {"views", spec.cameras.size()}});
  const MvisrCase c = make_mvisr_case(spec, config.sr_factor);
  write_scene(c, spec.name, config, out_dir);
  io::write_json(io::scene_to_json(spec), out_dir / "scene_spec.json");
  log.info("wrote", {{"manifest", (out_dir / "manifest.json").string()}});
}

void cmd_warp(const fs::path& manifest, const fs::path& out_dir, const Flags& f, Logger& log) {
  const RunConfig config = resolve_config(f);
  const int target = require_target(f);
  const SceneData scene = load_scene(manifest);
  scene.index_of(target);
  prepare_output_dir(out_dir, f.overwrite);
  const auto warped = warp_all(scene, target, config);
  json outputs = json::array();
  for (const auto& w : warped) {
    const std::string stem = "warped_" + std::to_string(w.source_id);
    io::write_png(w.color, out_dir / (stem + "_color.png"));
    io::write_pfm(w.depth, out_dir / (stem + "_depth.pfm"));
    io::write_mask_png(w.valid, out_dir / (stem + "_valid.png"));
    const double frac = static_cast<double>(w.depth.valid_count()) / static_cast<double>(w.valid.size());
    outputs.push_back({{"source_id", w.source_id}, {"color", stem + "_color.png"}, {"depth", stem + "_depth.pfm"},
                       {"valid", stem + "_valid.png"}, {"valid_fraction", frac}});
    log.info("warped", {{"source_id", w.source_id}, {"valid_fraction", frac}});
  }
  write_run_record(out_dir, "warp", config, {{"target_id", target}, {"views", outputs}});
}

void cmd_gars(const fs::path& manifest, const fs::path& out_dir, const Flags& f, Logger& log) {
  const RunConfig config = resolve_config(f);
  const int target = require_target(f);
  const SceneData scene = load_scene(manifest);
  scene.index_of(target);
  prepare_output_dir(out_dir, f.overwrite);
  const GarsResult g = run_gars(scene, target, config);
  json outputs = {{"target_id", target}, {"nearby_ids", g.nearby_ids}, {"mvrs", json::array()}, {"nvrs", json::array()}};
  auto emit = [&](const char* kind, const std::vector<SynthesizedReference>& refs,
                  const std::vector<HFIndexMap>& maps, int candidates) {
    for (std::size_t k = 0; k < refs.size(); ++k) {
      const std::string stem = std::string(kind) + "_" + std::to_string(k + 1);
      io::write_png(refs[k].image, out_dir / (stem + ".png"));
      io::write_json(io::provenance_to_json(refs[k].provenance, config.ps), out_dir / (stem + "_provenance.json"));
      io::write_gray_png(index_visualization(maps[k], g.grid, candidates), out_dir / (stem + "_index.png"));
      outputs[kind].push_back({{"rank", k + 1}, {"image", stem + ".png"}, {"provenance", stem + "_provenance.json"},
                               {"index_map", stem + "_index.png"}});
    }
  };
  emit("mvrs", g.mvrs, g.mvr_maps, static_cast<int>(g.warped.size()));
  emit("nvrs", g.nvrs, g.nvr_maps, static_cast<int>(g.nearby_ids.size()));
  io::write_png(g.bicubic, out_dir / "bicubic.png");
  log.info("gars", {{"target_id", target}, {"mvrs", g.mvrs.size()}, {"nvrs", g.nvrs.size()}});
  write_run_record(out_dir, "gars", config, outputs);
}

void cmd_init_weights(const fs::path& out, const std::string& network_path, const Flags& f, Logger& log) {
  const RunConfig config = resolve_config(f);
  const dhfs::NetworkSpec spec(network_config(network_path, f.v));
  prepare_output_file(out, f.overwrite);
  dhfs::save_weights(dhfs::init_random(spec, config.seed), out);
  log.info("weights", {{"path", out.string()}, {"parameters", dhfs::count_parameters(spec)}});
}

void cmd_infer(const fs::path& manifest, const fs::path& weights_path, const fs::path& out,
               const std::string& network_path, const Flags& f, Logger& log) {
  const RunConfig config = resolve_config(f);
  const int target = require_target(f);
  const dhfs::NetworkSpec spec(network_config(network_path, config.v));
  MVREF_REQUIRE(config.sr_factor == spec.config().sr_factor, "inference requires sr_factor 4");
  const dhfs::Weights weights = dhfs::load_weights(weights_path, spec);
  const SceneData scene = load_scene(manifest);
  const std::size_t t = scene.index_of(target);
  prepare_output_file(out, f.overwrite);
  const GarsResult g = run_gars(scene, target, config);
  std::vector<ViewImage> mvrs, nvrs;
  for (const auto& r : g.mvrs) mvrs.push_back(r.image);
  for (const auto& r : g.nvrs) nvrs.push_back(r.image);
  const dhfs::Network net(spec, weights);
  log.info("forward", {{"target_id", target}, {"parameters", dhfs::count_parameters(spec)}});
  const auto result = net.forward(scene.images[t], mvrs, nvrs, g.bicubic);
  io::write_png(result.image, out);
  json sel = json::array();
  for (const auto& s : result.selections) {
    fs::path p = out;
    p.replace_filename(out.stem().string() + "_AM_" + site_file_tag(s.site) + ".png");
    io::write_gray_png(selection_image(s.maps.a_m), p);
    sel.push_back({{"site", s.site}, {"a_m", p.filename().string()}});
  }
  fs::path record = out;
  record.replace_filename(out.stem().string() + "_run.json");
  io::write_json({{"command", "infer"}, {"run_config", config.to_json()},
                  {"network", json::parse(dhfs::config_to_json(spec.config()))},
                  {"outputs", {{"image", out.filename().string()}, {"selection_maps", sel}}}},
                 record);
}

json report_json(const MetricReport& r) {
  return {{"psnr", number_or_string(r.psnr)}, {"ssim", r.ssim}, {"l1", r.l1}, {"pixels", r.pixel_count}};
}

void cmd_eval(const fs::path& pred, const fs::path& gt, std::ostream& out) {
  const MetricReport r = evaluate(io::read_png(pred), io::read_png(gt));
  out << report_json(r).dump() << '\n';
}

std::vector<int> parse_values(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("--values entry '" + item + "' is not an integer");
    }
  }
  MVREF_REQUIRE(!values.empty(), "--values must list at least one integer");
  return values;
}

double masked_psnr_or_nan(const ViewImage& a, const ViewImage& b, const Mask& m) {
  for (auto v : m.data())
    if (v) return psnr_masked(a, b, m);
  return std::numeric_limits<double>::quiet_NaN();
}

void cmd_sweep(const fs::path& manifest, const fs::path& out_dir, const std::string& param,
               const std::string& values_text, bool infer, const std::string& network_path, const Flags& f,
               Logger& log, std::ostream& out) {
  const RunConfig base = resolve_config(f);
  const int target = require_target(f);
  if (param != "V" && param != "ps") throw InvalidArgument("--param must be V or ps");
  const std::vector<int> values = parse_values(values_text);
  const SceneData scene = load_scene(manifest);
  const std::size_t t = scene.index_of(target);
  prepare_output_dir(out_dir, f.overwrite);
  const std::optional<ViewImage>& gt = scene.ground_truth[t];

  json rows = json::array();
  std::ostringstream table;
  table << "param\tvalue\tmvr1_psnr\tmvr_mean_psnr\tnvr_mean_psnr\tview_pixel_fraction\tbicubic_psnr\tinfer_psnr\n";
  for (int value : values) {
    RunConfig cfg = base;
    (param == "V" ? cfg.v : cfg.ps) = value;
    cfg.validate();
    const GarsResult g = run_gars(scene, target, cfg);
    double mvr1 = std::numeric_limits<double>::quiet_NaN();
    double mvr_mean = mvr1, nvr_mean = mvr1, bic = mvr1, inferred = mvr1;
    std::size_t from_view = 0;
    for (const auto& r : g.mvrs)
      for (auto m : r.from_view.data()) from_view += m != 0;
    const double frac = static_cast<double>(from_view) /
                        (static_cast<double>(g.bicubic.width()) * g.bicubic.height() * g.mvrs.size());
    if (gt) {
      mvr1 = masked_psnr_or_nan(g.mvrs[0].image, *gt, g.mvrs[0].from_view);
      auto mean_psnr = [&](const std::vector<SynthesizedReference>& refs) {
        double s = 0.0;
        for (const auto& r : refs) s += psnr(r.image, *gt);
        return s / static_cast<double>(refs.size());
      };
      mvr_mean = mean_psnr(g.mvrs);
      nvr_mean = mean_psnr(g.nvrs);
      bic = psnr(g.bicubic, *gt);
    }
    if (infer) {
      const dhfs::NetworkSpec spec(network_config(network_path.empty() ? std::string{} : network_path, cfg.v));
      const dhfs::Network net(spec, dhfs::init_random(spec, cfg.seed));
      std::vector<ViewImage> mvrs, nvrs;
      for (const auto& r : g.mvrs) mvrs.push_back(r.image);
      for (const auto& r : g.nvrs) nvrs.push_back(r.image);
      const auto res = net.forward(scene.images[t], mvrs, nvrs, g.bicubic);
      if (gt) inferred = psnr(res.image, *gt);
    }
    rows.push_back({{"param", param}, {"value", value}, {"mvr1_psnr", number_or_string(mvr1)},
                    {"mvr_mean_psnr", number_or_string(mvr_mean)}, {"nvr_mean_psnr", number_or_string(nvr_mean)},
                    {"view_pixel_fraction", frac}, {"bicubic_psnr", number_or_string(bic)},
                    {"infer_psnr", number_or_string(inferred)}});
    auto cell = [](double v) {
      std::ostringstream s;
      if (std::isnan(v)) {
        s << "nan";
      } else {
        s << std::fixed << std::setprecision(4) << v;
      }
      return s.str();
    };
    table << param << '\t' << value << '\t' << cell(mvr1) << '\t' << cell(mvr_mean) << '\t' << cell(nvr_mean)
          << '\t' << cell(frac) << '\t' << cell(bic) << '\t' << cell(inferred) << '\n';
    log.info("sweep_row", rows.back());
  }
  std::ofstream(out_dir / "sweep.tsv") << table.str();
  write_run_record(out_dir, "sweep", base,
                   {{"target_id", target}, {"param", param}, {"values", values}, {"rows", rows}, {"table", "sweep.tsv"}});
  out << table.str();
}

void cmd_params(const std::string& spec_path, std::ostream& out) {
  const dhfs::NetworkSpec spec(network_config(spec_path, std::nullopt));
  out << json{{"parameters", dhfs::count_parameters(spec)}}.dump() << '\n';
}

void emit_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"level", "error"}, {"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view reference synthesis and super-resolution toolkit", "mvref"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
    sub->add_option("--target-id", flags.target_id, "Target view id");
    sub->add_option("--factor", flags.factor, "Super-resolution factor");
    sub->add_option("--v", flags.v, "Number of references V");
    sub->add_option("--l", flags.l, "Number of nearby views L");
    sub->add_option("--ps", flags.ps, "Patch size");
    sub->add_option("--seed", flags.seed, "Random seed");
    sub->add_option("--sampling", flags.sampling, "nearest or bilinear")->check(CLI::IsMember({"nearest", "bilinear"}));
    sub->add_flag("--overwrite", flags.overwrite, "Allow writing into a non-empty output location");
  };

  std::string a, b, c, network, param, values;
  bool infer = false;
  auto* synth = app.add_subcommand("synth-scene", "Render a scene spec into an LR/HR manifest tree");
  synth->add_option("spec", a, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("out_dir", b, "Output directory")->required();
  auto* warp = app.add_subcommand("warp", "Warp every source view onto the target HR grid");
  warp->add_option("manifest", a)->required()->check(CLI::ExistingFile);
  warp->add_option("out_dir", b)->required();
  auto* gars = app.add_subcommand("gars", "Synthesize MVRs and NVRs for a target view");
  gars->add_option("manifest", a)->required()->check(CLI::ExistingFile);
  gars->add_option("out_dir", b)->required();
  auto* infer_cmd = app.add_subcommand("infer", "Run the fusion network on a target view");
  infer_cmd->add_option("manifest", a)->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("weights", b)->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("out", c, "Output HR PNG")->required();
  infer_cmd->add_option("--network", network, "Network config JSON (default: full width)")->check(CLI::ExistingFile);
  auto* init = app.add_subcommand("init-weights", "Write randomly initialized network weights");
  init->add_option("out", a)->required();
  init->add_option("--network", network)->check(CLI::ExistingFile);
  auto* eval = app.add_subcommand("eval", "Compare two PNG images");
  eval->add_option("pred", a)->required()->check(CLI::ExistingFile);
  eval->add_option("gt", b)->required()->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "Re-run reference synthesis over V or ps");
  sweep->add_option("manifest", a)->required()->check(CLI::ExistingFile);
  sweep->add_option("out_dir", b)->required();
  sweep->add_option("--param", param, "V or ps")->required()->check(CLI::IsMember({"V", "ps"}));
  sweep->add_option("--values", values, "Comma-separated integers")->required();
  sweep->add_flag("--infer", infer, "Also run a randomly initialized network per value");
  sweep->add_option("--network", network)->check(CLI::ExistingFile);
  auto* params = app.add_subcommand("params", "Print the parameter count of a network config");
  params->add_option("spec", a, "Network config JSON (default: full width)")->check(CLI::ExistingFile);
  for (auto* sub : {synth, warp, gars, infer_cmd, init, eval, sweep, params}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "InvalidArgument", e.what());
    return kExitBadInput;
  }

  Logger log(err);
  try {
    if (*synth) {
      cmd_synth_scene(a, b, flags, log);
    } else if (*warp) {
      cmd_warp(a, b, flags, log);
    } else if (*gars) {
      cmd_gars(a, b, flags, log);
    } else if (*infer_cmd) {
      cmd_infer(a, b, c, network, flags, log);
    } else if (*init) {
      cmd_init_weights(a, network, flags, log);
    } else if (*eval) {
      cmd_eval(a, b, out);
    } else if (*sweep) {
      cmd_sweep(a, b, param, values, infer, network, flags, log, out);
    } else if (*params) {
      cmd_params(a, out);
    }
  } catch (const InvalidArgument& e) {
    emit_error(err, "InvalidArgument", e.what());
    return kExitBadInput;
  } catch (const FormatError& e) {
    emit_error(err, "FormatError", e.what());
    return kExitBadInput;
  } catch (const InvariantViolation& e) {
    emit_error(err, "InvariantViolation", e.what());
    return kExitInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    emit_error(err, "FormatError", e.what());
    return kExitBadInput;
  } catch (const std::exception& e) {
    emit_error(err, "InternalError", e.what());
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace mvref::cli
