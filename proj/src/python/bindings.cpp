#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "mvref/cli.hpp"
#include "mvref/dhfs/network.hpp"
#include "mvref/gars.hpp"
#include "mvref/io.hpp"
#include "mvref/metrics.hpp"
#include "mvref/pipeline.hpp"
#include "mvref/resample.hpp"

namespace py = pybind11;
using namespace mvref;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W, 3) float array in [0, 1] <-> ViewImage.
ViewImage image_from(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw InvalidArgument("image must have shape (H, W, 3)");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  ViewImage img(w, h);
  auto r = a.unchecked<3>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, {r(y, x, 0), r(y, x, 1), r(y, x, 2)});
  return img;
}

Array image_to(const ViewImage& img) {
  Array a({img.height(), img.width(), 3});
  auto r = a.mutable_unchecked<3>();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) r(y, x, c) = img.channel(x, y, c);
  return a;
}

// (H, W) array; NaN marks invalid depth.
DepthMap depth_from(const Array& a) {
  if (a.ndim() != 2) throw InvalidArgument("depth must have shape (H, W)");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  DepthMap d(w, h);
  auto r = a.unchecked<2>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!std::isnan(r(y, x))) d.set(x, y, r(y, x));
  return d;
}

Array depth_to(const DepthMap& d) {
  Array a({d.height(), d.width()});
  auto r = a.mutable_unchecked<2>();
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x)
      r(y, x) = d.valid(x, y) ? d.value(x, y) : std::numeric_limits<double>::quiet_NaN();
  return a;
}

template <class T>
py::array_t<T> grid_to(const Grid<T>& g) {
  py::array_t<T> a({g.height(), g.width()});
  auto r = a.template mutable_unchecked<2>();
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) r(y, x) = g(x, y);
  return a;
}

Array tensor_to(const dhfs::Tensor& t) {
  Array a({t.channels(), t.height(), t.width()});
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

RunConfig config_from(const py::dict& overrides) {
  nlohmann::json j = nlohmann::json::object();
  const auto json_mod = py::module_::import("json");
  if (!overrides.empty()) j = nlohmann::json::parse(json_mod.attr("dumps")(overrides).cast<std::string>());
  RunConfig c = RunConfig::from_json(j);
  c.validate();
  return c;
}

py::dict reference_dict(const SynthesizedReference& r) {
  py::dict d;
  d["image"] = image_to(r.image);
  d["provenance"] = grid_to(r.provenance);
  d["from_view"] = grid_to(r.from_view);
  return d;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["psnr"] = r.psnr;
  d["ssim"] = r.ssim;
  d["l1"] = r.l1;
  d["pixels"] = r.pixel_count;
  return d;
}

dhfs::NetworkConfig network_config(const std::string& json_text) {
  return json_text.empty() ? dhfs::NetworkConfig::full() : dhfs::config_from_json(json_text);
}

std::vector<ViewImage> images_from(const std::vector<Array>& arrays) {
  std::vector<ViewImage> out;
  for (const auto& a : arrays) out.push_back(image_from(a));
  return out;
}

}  // namespace

PYBIND11_MODULE(_mvref, m) {
  m.doc() = "Multi-view reference synthesis and reference-based super-resolution";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(image_from(a), image_from(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(image_from(a), image_from(b)); });
  m.def("l1_loss", [](const Array& a, const Array& b) { return l1_loss(image_from(a), image_from(b)); });
  m.def("evaluate", [](const Array& a, const Array& b) { return report_dict(evaluate(image_from(a), image_from(b))); });

  m.def("upsample_bicubic", [](const Array& a, int factor) { return image_to(upsample_bicubic(image_from(a), factor)); },
        py::arg("image"), py::arg("factor") = 4);
  m.def("downsample_bicubic",
        [](const Array& a, int factor) { return image_to(downsample_bicubic(image_from(a), factor)); },
        py::arg("image"), py::arg("factor") = 4);

  m.def("read_png", [](const std::filesystem::path& p) { return image_to(io::read_png(p)); });
  m.def("write_png", [](const Array& a, const std::filesystem::path& p) { io::write_png(image_from(a), p); });
  m.def("read_pfm", [](const std::filesystem::path& p) { return depth_to(io::read_pfm(p)); });
  m.def("write_pfm", [](const Array& a, const std::filesystem::path& p) { io::write_pfm(depth_from(a), p); });

  m.def("select_nearby_views", [](int target, const std::vector<int>& ids, int l) {
    return select_nearby_views(target, ids, l);
  });
  m.def(
      "hf_index_maps",
      [](const std::vector<Array>& means, int v) {
        std::vector<Grid<double>> grids;
        for (const auto& a : means) {
          if (a.ndim() != 2) throw InvalidArgument("patch means must be 2-D");
          Grid<double> g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
          auto r = a.unchecked<2>();
          for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x) g(x, y) = r(y, x);
          grids.push_back(std::move(g));
        }
        py::list out;
        for (const auto& map : hf_index_maps(grids, v)) out.append(grid_to(map.index));
        return out;
      },
      py::arg("means"), py::arg("v"));

  m.def(
      "synth_scene",
      [](const std::string& preset, int hr_size, int factor, const std::filesystem::path& dir) {
        const SceneSpec spec = io::scene_from_json({{"preset", preset}, {"hr_size", hr_size}});
        RunConfig config;
        config.sr_factor = factor;
        write_scene(make_mvisr_case(spec, factor), preset, config, dir);
        return dir / "manifest.json";
      },
      py::arg("preset"), py::arg("hr_size"), py::arg("factor") = 4, py::arg("dir"));

  m.def(
      "run_gars",
      [](const std::filesystem::path& manifest, int target_id, const py::dict& config) {
        const SceneData scene = load_scene(manifest);
        const GarsResult g = run_gars(scene, target_id, config_from(config));
        py::dict d;
        d["target_id"] = g.target_id;
        d["bicubic"] = image_to(g.bicubic);
        d["target_depth"] = depth_to(g.target_depth_hr);
        d["nearby_ids"] = g.nearby_ids;
        py::list warped, mvrs, nvrs;
        for (const auto& w : g.warped) {
          py::dict wd;
          wd["source_id"] = w.source_id;
          wd["color"] = image_to(w.color);
          wd["depth"] = depth_to(w.depth);
          wd["valid"] = grid_to(w.valid);
          warped.append(wd);
        }
        for (const auto& r : g.mvrs) mvrs.append(reference_dict(r));
        for (const auto& r : g.nvrs) nvrs.append(reference_dict(r));
        d["warped"] = warped;
        d["mvrs"] = mvrs;
        d["nvrs"] = nvrs;
        if (const auto& gt = scene.ground_truth[scene.index_of(target_id)]) d["ground_truth"] = image_to(*gt);
        return d;
      },
      py::arg("manifest"), py::arg("target_id"), py::arg("config") = py::dict());

  m.def(
      "count_parameters",
      [](const std::string& network_json) { return dhfs::count_parameters(dhfs::NetworkSpec(network_config(network_json))); },
      py::arg("network_json") = "");

  m.def(
      "init_weights",
      [](const std::filesystem::path& path, std::uint64_t seed, const std::string& network_json) {
        const dhfs::NetworkSpec spec(network_config(network_json));
        dhfs::save_weights(dhfs::init_random(spec, seed), path);
      },
      py::arg("path"), py::arg("seed") = 0, py::arg("network_json") = "");

  py::class_<dhfs::Network>(m, "Network")
      .def(py::init([](const std::string& network_json, std::optional<std::filesystem::path> weights,
                       std::uint64_t seed) {
             const dhfs::NetworkSpec spec(network_config(network_json));
             const dhfs::Weights w = weights ? dhfs::load_weights(*weights, spec) : dhfs::init_random(spec, seed);
             return dhfs::Network(spec, w);
           }),
           py::arg("network_json") = "", py::arg("weights") = py::none(), py::arg("seed") = 0)
      .def_property_readonly("v", [](const dhfs::Network& n) { return n.spec().config().v; })
      .def(
          "forward",
          [](const dhfs::Network& n, const Array& lr, const std::vector<Array>& mvrs, const std::vector<Array>& nvrs,
             const Array& bicubic) {
            dhfs::ForwardResult r;
            {
              const ViewImage lr_img = image_from(lr), bic = image_from(bicubic);
              const auto m_imgs = images_from(mvrs), n_imgs = images_from(nvrs);
              py::gil_scoped_release release;
              r = n.forward(lr_img, m_imgs, n_imgs, bic);
            }
            py::dict sel;
            for (const auto& s : r.selections) sel[py::str(s.site)] = py::make_tuple(tensor_to(s.maps.a_m), tensor_to(s.maps.a_n));
            return py::make_tuple(image_to(r.image), sel);
          },
          py::arg("lr"), py::arg("mvrs"), py::arg("nvrs"), py::arg("bicubic"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
