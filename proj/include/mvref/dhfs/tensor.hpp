#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mvref/error.hpp"

namespace mvref::dhfs {

// Dense channel-major (C, H, W) feature map.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  double& operator()(int c, int y, int x) { return data_[offset(c, y, x)]; }
  double operator()(int c, int y, int x) const { return data_[offset(c, y, x)]; }

  std::span<double> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Tensor& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  bool same_spatial(const Tensor& o) const { return height_ == o.height_ && width_ == o.width_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Throws InvariantViolation naming the stage when any value is NaN or infinite.
void check_finite(const Tensor& t, std::string_view stage);

}  // namespace mvref::dhfs
