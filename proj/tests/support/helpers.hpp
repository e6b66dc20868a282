#pragma once

#include <cmath>
#include <random>

#include "mvref/geometry.hpp"
#include "mvref/image.hpp"

namespace helpers {

using mvref::Mat3;
using mvref::Vec3;

inline mvref::ViewImage random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mvref::ViewImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, {u(rng), u(rng), u(rng)});
  return img;
}

// Uniformly distributed rotation from a random unit quaternion.
inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Mat3 rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

inline Mat3 rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

inline mvref::Intrinsics simple_intrinsics(int w, int h, double f = 0.0) {
  if (f == 0.0) f = 1.2 * w;
  return {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
}

}  // namespace helpers
