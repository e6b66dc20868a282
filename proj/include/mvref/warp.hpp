#pragma once

#include <string_view>

#include "mvref/geometry.hpp"
#include "mvref/image.hpp"

namespace mvref {

enum class Sampling { Nearest, Bilinear };

Sampling parse_sampling(std::string_view name);
std::string_view to_string(Sampling s);

struct WarpOptions {
  int factor = 4;
  Sampling sampling = Sampling::Nearest;
  // Relative depth disagreement above which a gathered pixel counts as occluded.
  double occlusion_tolerance = 0.01;
};

// A source view whose camera carries LR intrinsics; depth is on the HR grid.
struct WarpSource {
  const CameraView& camera;
  const ViewImage& image_lr;
  const DepthMap& depth_hr;
};

struct WarpTarget {
  const CameraView& camera;  // LR intrinsics
  const DepthMap& depth_hr;
};

// Source view re-rendered on the target HR grid. Invalid pixels are black and
// carry no depth; valid depths are the transferred source-camera z.
struct WarpedView {
  ViewImage color;
  DepthMap depth;
  Mask valid;
  int source_id = 0;
};

// Backward (gather) warp of the LR source image onto the target HR grid, driven
// by the target HR depth. Each target pixel is written once.
WarpedView warp_view(const WarpSource& source, const WarpTarget& target,
                     const WarpOptions& options = {});

// Nearest-neighbour sample index for a continuous pixel coordinate, or -1 outside [-0.5, size - 0.5).
int nearest_index(double coord, int size);

}  // namespace mvref
