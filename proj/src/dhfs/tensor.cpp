#include "mvref/dhfs/tensor.hpp"

#include <cmath>
#include <string>

namespace mvref::dhfs {

Tensor::Tensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  MVREF_REQUIRE(channels >= 0 && height >= 0 && width >= 0, "tensor dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

void check_finite(const Tensor& t, std::string_view stage) {
  const auto data = t.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      const std::size_t plane = t.plane_size();
      throw InvariantViolation("non-finite value " + std::to_string(data[i]) + " after " +
                               std::string(stage) + " at channel " + std::to_string(i / plane) +
                               ", offset " + std::to_string(i % plane));
    }
  }
}

}  // namespace mvref::dhfs
