#include "mvref/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvref {

void ViewImage::set(int x, int y, Rgb v) {
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(v[c])) {
      throw InvalidArgument("non-finite color at (" + std::to_string(x) + ", " +
                            std::to_string(y) + ")");
    }
    v[c] = std::clamp(v[c], 0.0, 1.0);
  }
  pixels_(x, y) = v;
}

void DepthMap::set(int x, int y, double depth) {
  if (std::isfinite(depth) && depth > 0.0) {
    values_(x, y) = depth;
    valid_(x, y) = 1;
  } else {
    invalidate(x, y);
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(valid_.data().begin(), valid_.data().end(), [](auto v) { return v != 0; }));
}

}  // namespace mvref
