#include "mvref/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace mvref {
namespace {

void require_same_size(const ViewImage& a, const ViewImage& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument(std::string(what) + ": image sizes differ (" + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + ")");
  }
  MVREF_REQUIRE(a.width() > 0 && a.height() > 0, std::string(what) + ": empty image");
}

double psnr_from_mse(double mse, double peak) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable "valid" filtering: output is (w - 10) x (h - 10).
Grid<double> filter_valid(const Grid<double>& in, const std::array<double, kSsimWindow>& g) {
  const int ow = in.width() - kSsimWindow + 1;
  const int oh = in.height() - kSsimWindow + 1;
  Grid<double> rows(ow, in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * in(x + k, y);
      rows(x, y) = acc;
    }
  Grid<double> out(ow, oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * rows(x, y + k);
      out(x, y) = acc;
    }
  return out;
}

}  // namespace

double l1_loss(const ViewImage& a, const ViewImage& b) {
  require_same_size(a, b, "l1_loss");
  double sum = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < 3; ++c) sum += std::abs(a.channel(x, y, c) - b.channel(x, y, c));
  return sum / (3.0 * a.width() * a.height());
}

double psnr(const ViewImage& a, const ViewImage& b, double peak) {
  require_same_size(a, b, "psnr");
  Mask all(a.width(), a.height(), 1);
  return psnr_masked(a, b, all, peak);
}

double psnr_masked(const ViewImage& a, const ViewImage& b, const Mask& mask, double peak) {
  require_same_size(a, b, "psnr");
  MVREF_REQUIRE(mask.width() == a.width() && mask.height() == a.height(), "psnr: mask size differs");
  MVREF_REQUIRE(peak > 0.0 && std::isfinite(peak), "psnr: peak must be positive");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = a.channel(x, y, c) - b.channel(x, y, c);
        sum += d * d;
      }
      n += 3;
    }
  MVREF_REQUIRE(n > 0, "psnr: mask selects no pixels");
  return psnr_from_mse(sum / static_cast<double>(n), peak);
}

double ssim(const ViewImage& a, const ViewImage& b) {
  require_same_size(a, b, "ssim");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw InvalidArgument("ssim: images must be at least 11x11 pixels");
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto g = gaussian_taps();
  const int w = a.width();
  const int h = a.height();
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    Grid<double> pa(w, h), pb(w, h), aa(w, h), bb(w, h), ab(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double u = a.channel(x, y, c);
        const double v = b.channel(x, y, c);
        pa(x, y) = u;
        pb(x, y) = v;
        aa(x, y) = u * u;
        bb(x, y) = v * v;
        ab(x, y) = u * v;
      }
    const auto mu_a = filter_valid(pa, g);
    const auto mu_b = filter_valid(pb, g);
    const auto e_aa = filter_valid(aa, g);
    const auto e_bb = filter_valid(bb, g);
    const auto e_ab = filter_valid(ab, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a.data()[i];
      const double mb = mu_b.data()[i];
      const double va = e_aa.data()[i] - ma * ma;
      const double vb = e_bb.data()[i] - mb * mb;
      const double cov = e_ab.data()[i] - ma * mb;
      sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / 3.0;
}

MetricReport evaluate(const ViewImage& a, const ViewImage& b) {
  MetricReport r;
  r.psnr = psnr(a, b);
  r.ssim = ssim(a, b);
  r.l1 = l1_loss(a, b);
  r.pixel_count = static_cast<std::size_t>(a.width()) * a.height();
  return r;
}

}  // namespace mvref
