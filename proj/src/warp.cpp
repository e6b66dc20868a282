#include "mvref/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvref/parallel.hpp"

namespace mvref {
namespace {

Rgb sample_bilinear(const ViewImage& img, double x, double y) {
  x = std::clamp(x, 0.0, img.width() - 1.0);
  y = std::clamp(y, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - fx) * img.channel(x0, y0, c) + fx * img.channel(x1, y0, c);
    const double bottom = (1 - fx) * img.channel(x0, y1, c) + fx * img.channel(x1, y1, c);
    out[c] = std::clamp((1 - fy) * top + fy * bottom, 0.0, 1.0);
  }
  return out;
}

std::string size_str(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

void check_sizes(const WarpSource& source, const WarpTarget& target, int factor) {
  MVREF_REQUIRE(factor >= 1, "warp factor must be a positive integer");
  const Intrinsics& ks = source.camera.intrinsics;
  const Intrinsics& kt = target.camera.intrinsics;
  if (source.image_lr.width() != ks.width() || source.image_lr.height() != ks.height()) {
    throw InvalidArgument("source image " + size_str(source.image_lr.width(), source.image_lr.height()) +
                          " does not match LR intrinsics " + size_str(ks.width(), ks.height()));
  }
  if (source.depth_hr.width() != factor * ks.width() ||
      source.depth_hr.height() != factor * ks.height()) {
    throw InvalidArgument("source depth " + size_str(source.depth_hr.width(), source.depth_hr.height()) +
                          " is not the HR size for factor " + std::to_string(factor));
  }
  if (target.depth_hr.width() != factor * kt.width() ||
      target.depth_hr.height() != factor * kt.height()) {
    throw InvalidArgument("target depth " + size_str(target.depth_hr.width(), target.depth_hr.height()) +
                          " is not the HR size for factor " + std::to_string(factor));
  }
}

}  // namespace

Sampling parse_sampling(std::string_view name) {
  if (name == "nearest") return Sampling::Nearest;
  if (name == "bilinear") return Sampling::Bilinear;
  throw InvalidArgument("unknown sampling mode '" + std::string(name) + "' (nearest|bilinear)");
}

std::string_view to_string(Sampling s) { return s == Sampling::Nearest ? "nearest" : "bilinear"; }

int nearest_index(double coord, int size) {
  if (!(coord >= -0.5 && coord < size - 0.5)) return -1;
  return std::min(static_cast<int>(std::floor(coord + 0.5)), size - 1);
}

WarpedView warp_view(const WarpSource& source, const WarpTarget& target,
                     const WarpOptions& options) {
  check_sizes(source, target, options.factor);
  MVREF_REQUIRE(options.occlusion_tolerance >= 0.0, "occlusion tolerance must be non-negative");
  const int factor = options.factor;
  const Intrinsics ks_hr = scale_intrinsics(source.camera.intrinsics, factor);
  const Intrinsics kt_hr = scale_intrinsics(target.camera.intrinsics, factor);
  const RelativePose rel = relative_pose(source.camera, target.camera);

  const int width = target.depth_hr.width();
  const int height = target.depth_hr.height();
  WarpedView out{ViewImage(width, height), DepthMap(width, height), Mask(width, height, 0),
                 source.camera.view_id};

  parallel_for(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      if (!target.depth_hr.valid(x, y)) continue;
      const PixelTransfer tr =
          transfer_pixel(Vec2(x, y), target.depth_hr.value(x, y), kt_hr, ks_hr, rel);
      if (tr.behind_camera()) continue;
      const int sx = nearest_index(tr.pixel.x(), ks_hr.width());
      const int sy = nearest_index(tr.pixel.y(), ks_hr.height());
      if (sx < 0 || sy < 0) continue;
      // Occlusion test against the source's own depth; unknown source depth is not trusted.
      if (!source.depth_hr.valid(sx, sy)) continue;
      const double seen = source.depth_hr.value(sx, sy);
      if (std::abs(tr.depth - seen) > options.occlusion_tolerance * tr.depth) continue;

      const double lx = fine_to_coarse(tr.pixel.x(), factor);
      const double ly = fine_to_coarse(tr.pixel.y(), factor);
      Rgb color;
      if (options.sampling == Sampling::Nearest) {
        const int ix = nearest_index(lx, source.image_lr.width());
        const int iy = nearest_index(ly, source.image_lr.height());
        if (ix < 0 || iy < 0) continue;
        color = source.image_lr.at(ix, iy);
      } else {
        color = sample_bilinear(source.image_lr, lx, ly);
      }
      out.color.set_unchecked(x, y, color);
      out.depth.set(x, y, tr.depth);
      out.valid(x, y) = 1;
    }
  });
  return out;
}

}  // namespace mvref
