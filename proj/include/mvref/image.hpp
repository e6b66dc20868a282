#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvref/error.hpp"

namespace mvref {

// Row-major H x W raster.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    MVREF_REQUIRE(width >= 0 && height >= 0, "grid dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

struct Rgb {
  double r = 0, g = 0, b = 0;
  double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
  double& operator[](int c) { return c == 0 ? r : (c == 1 ? g : b); }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// RGB raster with channel values clamped to [0, 1].
class ViewImage {
 public:
  ViewImage() = default;
  ViewImage(int width, int height) : pixels_(width, height) {}

  int width() const { return pixels_.width(); }
  int height() const { return pixels_.height(); }

  const Rgb& at(int x, int y) const { return pixels_(x, y); }
  // Stores a clamped copy; non-finite input is rejected.
  void set(int x, int y, Rgb v);
  // Unclamped write for values already known to lie in [0, 1].
  void set_unchecked(int x, int y, const Rgb& v) { pixels_(x, y) = v; }

  double channel(int x, int y, int c) const { return pixels_(x, y)[c]; }

  const Grid<Rgb>& grid() const { return pixels_; }

  friend bool operator==(const ViewImage&, const ViewImage&) = default;

 private:
  Grid<Rgb> pixels_;
};

// Per-pixel scene depth. Invalid entries carry no depth.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height) : values_(width, height, 0.0), valid_(width, height, 0) {}

  int width() const { return values_.width(); }
  int height() const { return values_.height(); }

  bool valid(int x, int y) const { return valid_(x, y) != 0; }
  std::optional<double> at(int x, int y) const {
    if (!valid_(x, y)) return std::nullopt;
    return values_(x, y);
  }
  // Precondition: valid(x, y).
  double value(int x, int y) const { return values_(x, y); }

  // Finite positive depths become valid; anything else invalidates the pixel.
  void set(int x, int y, double depth);
  void invalidate(int x, int y) {
    values_(x, y) = 0.0;
    valid_(x, y) = 0;
  }

  const Mask& mask() const { return valid_; }
  std::size_t valid_count() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  Grid<double> values_;
  Mask valid_;
};

}  // namespace mvref
