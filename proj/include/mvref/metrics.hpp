#pragma once

#include <cstddef>

#include "mvref/image.hpp"

namespace mvref {

struct MetricReport {
  double psnr = 0.0;  // +inf for identical images
  double ssim = 0.0;
  double l1 = 0.0;
  std::size_t pixel_count = 0;
};

// Mean absolute difference over all pixels and channels.
double l1_loss(const ViewImage& a, const ViewImage& b);

// 10 log10(peak^2 / MSE); +inf when MSE is zero.
double psnr(const ViewImage& a, const ViewImage& b, double peak = 1.0);

// PSNR restricted to pixels where mask != 0. Throws if the mask selects nothing.
double psnr_masked(const ViewImage& a, const ViewImage& b, const Mask& mask, double peak = 1.0);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// dynamic range 1. Only windows lying fully inside the image are averaged; the
// per-channel means are averaged over RGB. Both sides must be at least 11 px.
double ssim(const ViewImage& a, const ViewImage& b);

MetricReport evaluate(const ViewImage& a, const ViewImage& b);

}  // namespace mvref
