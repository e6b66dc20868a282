#include "mvref/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mvref {
namespace {

struct Tap {
  int index;
  double weight;
};
using TapTable = std::vector<std::vector<Tap>>;

TapTable upsample_taps(int in_size, int factor) {
  TapTable table(static_cast<std::size_t>(in_size) * factor);
  for (int o = 0; o < in_size * factor; ++o) {
    const double x = (o + 0.5) / factor - 0.5;
    const int base = static_cast<int>(std::floor(x));
    for (int i = base - 1; i <= base + 2; ++i) {
      const double w = cubic_kernel(x - i);
      if (w == 0.0) continue;
      table[o].push_back({std::clamp(i, 0, in_size - 1), w});
    }
  }
  return table;
}

TapTable downsample_taps(int in_size, int factor) {
  const int out_size = in_size / factor;
  TapTable table(out_size);
  const double support = 2.0 * factor;
  for (int o = 0; o < out_size; ++o) {
    const double x = (o + 0.5) * factor - 0.5;
    double total = 0.0;
    for (int i = static_cast<int>(std::ceil(x - support)); i <= static_cast<int>(std::floor(x + support)); ++i) {
      const double w = cubic_kernel((x - i) / factor);
      if (w == 0.0) continue;
      table[o].push_back({std::clamp(i, 0, in_size - 1), w});
      total += w;
    }
    for (auto& t : table[o]) t.weight /= total;
  }
  return table;
}

// Separable filter of one scalar plane: rows first, then columns.
Grid<double> apply_separable(const Grid<double>& in, const TapTable& xs, const TapTable& ys) {
  Grid<double> tmp(static_cast<int>(xs.size()), in.height());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < tmp.width(); ++x) {
      double acc = 0.0;
      for (const auto& t : xs[x]) acc += t.weight * in(t.index, y);
      tmp(x, y) = acc;
    }
  }
  Grid<double> out(tmp.width(), static_cast<int>(ys.size()));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      double acc = 0.0;
      for (const auto& t : ys[y]) acc += t.weight * tmp(x, t.index);
      out(x, y) = acc;
    }
  }
  return out;
}

// Output pixel is flagged when any contributing tap is flagged.
Mask propagate_invalid(const Mask& valid, const TapTable& xs, const TapTable& ys) {
  Mask row_ok(static_cast<int>(xs.size()), valid.height());
  for (int y = 0; y < valid.height(); ++y) {
    for (int x = 0; x < row_ok.width(); ++x) {
      bool ok = true;
      for (const auto& t : xs[x]) ok = ok && valid(t.index, y);
      row_ok(x, y) = ok;
    }
  }
  Mask out(row_ok.width(), static_cast<int>(ys.size()));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      bool ok = true;
      for (const auto& t : ys[y]) ok = ok && row_ok(x, t.index);
      out(x, y) = ok;
    }
  }
  return out;
}

ViewImage filter_image(const ViewImage& img, const TapTable& xs, const TapTable& ys) {
  ViewImage out(static_cast<int>(xs.size()), static_cast<int>(ys.size()));
  for (int c = 0; c < 3; ++c) {
    Grid<double> plane(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) plane(x, y) = img.channel(x, y, c);
    const Grid<double> res = apply_separable(plane, xs, ys);
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        Rgb px = out.at(x, y);
        px[c] = std::clamp(res(x, y), 0.0, 1.0);
        out.set_unchecked(x, y, px);
      }
    }
  }
  return out;
}

DepthMap filter_depth(const DepthMap& depth, const TapTable& xs, const TapTable& ys) {
  Grid<double> plane(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      plane(x, y) = depth.valid(x, y) ? depth.value(x, y) : 0.0;
  const Grid<double> res = apply_separable(plane, xs, ys);
  const Mask ok = propagate_invalid(depth.mask(), xs, ys);
  DepthMap out(res.width(), res.height());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (ok(x, y)) out.set(x, y, res(x, y));  // set() rejects non-positive results
    }
  }
  return out;
}

void check_downsample(int width, int height, int factor) {
  MVREF_REQUIRE(factor >= 1, "resample factor must be a positive integer");
  MVREF_REQUIRE(width % factor == 0 && height % factor == 0,
                "image dimensions must be divisible by the downsampling factor");
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = kBicubicA;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

ViewImage upsample_bicubic(const ViewImage& img, int factor) {
  MVREF_REQUIRE(factor >= 1, "resample factor must be a positive integer");
  if (factor == 1) return img;
  return filter_image(img, upsample_taps(img.width(), factor), upsample_taps(img.height(), factor));
}

DepthMap upsample_depth_bicubic(const DepthMap& depth, int factor) {
  MVREF_REQUIRE(factor >= 1, "resample factor must be a positive integer");
  return filter_depth(depth, upsample_taps(depth.width(), factor),
                      upsample_taps(depth.height(), factor));
}

ViewImage downsample_bicubic(const ViewImage& img, int factor) {
  check_downsample(img.width(), img.height(), factor);
  if (factor == 1) return img;
  return filter_image(img, downsample_taps(img.width(), factor),
                      downsample_taps(img.height(), factor));
}

DepthMap downsample_depth_bicubic(const DepthMap& depth, int factor) {
  check_downsample(depth.width(), depth.height(), factor);
  return filter_depth(depth, downsample_taps(depth.width(), factor),
                      downsample_taps(depth.height(), factor));
}

}  // namespace mvref
