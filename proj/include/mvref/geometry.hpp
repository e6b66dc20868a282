#pragma once

#include <Eigen/Dense>

#include "mvref/error.hpp"

namespace mvref {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Pinhole intrinsics. Pixel (x = column, y = row); the top-left pixel center is (0, 0).
class Intrinsics {
 public:
  Intrinsics(double fx, double fy, double cx, double cy, int width, int height);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;

 private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
};

inline constexpr double kRotationTolerance = 1e-9;

// World-to-camera rigid transform: x_cam = R * x_world + t.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 camera_center() const { return -rotation_.transpose() * translation_; }
  Vec3 to_camera(const Vec3& world) const { return rotation_ * world + translation_; }

  // Camera at `eye` looking at `target`; +z forward, +y down in the image.
  static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Throws InvalidArgument unless R is orthonormal with det +1 within kRotationTolerance.
void check_rotation(const Mat3& r, double tolerance = kRotationTolerance);

struct CameraView {
  int view_id = 0;
  Intrinsics intrinsics;
  Pose pose;
};

struct RelativePose {
  Mat3 rotation;
  Vec3 translation;
};

// Maps target-camera coordinates into source-camera coordinates:
// R_r = R_s R_t^T, t_r = t_s - R_r t_t.
RelativePose relative_pose(const CameraView& source, const CameraView& target);

// Intrinsics of an s-times finer pixel grid over the same image plane.
Intrinsics scale_intrinsics(const Intrinsics& k, int factor);
// Inverse of scale_intrinsics; the width and height must be divisible by factor.
Intrinsics downscale_intrinsics(const Intrinsics& k, int factor);

// Coordinate of a fine-grid pixel expressed on the coarse grid (and back).
inline double fine_to_coarse(double coord, int factor) {
  return (coord - 0.5 * (factor - 1)) / factor;
}
inline double coarse_to_fine(double coord, int factor) {
  return coord * factor + 0.5 * (factor - 1);
}

inline constexpr double kBehindCameraDepth = 1e-12;

struct PixelTransfer {
  Vec2 pixel;    // dehomogenized source pixel (meaningless when behind the camera)
  double depth;  // source-camera z
  bool behind_camera() const { return !(depth > kBehindCameraDepth); }
};

// Solves D_s(p_s) p_s = K_s (R_r K_t^-1 D_t(p_t) p_t + t_r) for p_s and D_s(p_s).
PixelTransfer transfer_pixel(const Vec2& p_target, double depth_target,
                             const Intrinsics& k_target, const Intrinsics& k_source,
                             const RelativePose& rel);

}  // namespace mvref
