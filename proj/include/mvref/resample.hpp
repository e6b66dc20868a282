#pragma once

#include "mvref/image.hpp"

namespace mvref {

inline constexpr double kBicubicA = -0.5;

// Keys cubic convolution kernel with parameter a = -0.5.
double cubic_kernel(double x);

// Bicubic enlargement by an integer factor. Output pixel o samples input coordinate
// (o + 0.5) / factor - 0.5; border taps replicate the edge.
ViewImage upsample_bicubic(const ViewImage& img, int factor);

// As upsample_bicubic, but an output pixel is invalid when any of its 16 taps is
// invalid or the interpolated depth is not positive.
DepthMap upsample_depth_bicubic(const DepthMap& depth, int factor);

// Anti-aliased bicubic decimation (kernel stretched by the factor). Dimensions
// must be divisible by factor.
ViewImage downsample_bicubic(const ViewImage& img, int factor);

// Decimation of depth with the same kernel; any invalid tap with nonzero weight
// invalidates the output pixel.
DepthMap downsample_depth_bicubic(const DepthMap& depth, int factor);

}  // namespace mvref
