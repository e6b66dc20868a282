#include "mvref/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Geometry>

namespace mvref {

Intrinsics::Intrinsics(double fx, double fy, double cx, double cy, int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
  MVREF_REQUIRE(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy),
                "intrinsics must be finite");
  MVREF_REQUIRE(fx > 0 && fy > 0, "focal lengths must be positive");
  MVREF_REQUIRE(width >= 1 && height >= 1, "image size must be at least 1x1");
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx_, 0, cx_, 0, fy_, cy_, 0, 0, 1;
  return k;
}

Mat3 Intrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx_, 0, -cx_ / fx_, 0, 1.0 / fy_, -cy_ / fy_, 0, 0, 1;
  return k;
}

void check_rotation(const Mat3& r, double tolerance) {
  if (!r.allFinite()) throw InvalidArgument("rotation has non-finite entries");
  const double drift = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (drift > tolerance) {
    throw InvalidArgument("rotation is not orthonormal (max |R^T R - I| = " +
                          std::to_string(drift) + ")");
  }
  const double det = r.determinant();
  if (std::abs(det - 1.0) > tolerance) {
    throw InvalidArgument("rotation determinant " + std::to_string(det) + " is not +1");
  }
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  check_rotation(rotation_);
  MVREF_REQUIRE(translation_.allFinite(), "translation must be finite");
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = (-up).cross(z);
  MVREF_REQUIRE(x.norm() > 1e-12, "look_at: up vector parallel to viewing direction");
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return Pose(r, -r * eye);
}

RelativePose relative_pose(const CameraView& source, const CameraView& target) {
  const Mat3& rs = source.pose.rotation();
  const Mat3& rt = target.pose.rotation();
  RelativePose rel;
  rel.rotation = rs * rt.transpose();
  rel.translation = source.pose.translation() - rel.rotation * target.pose.translation();
  return rel;
}

Intrinsics scale_intrinsics(const Intrinsics& k, int factor) {
  MVREF_REQUIRE(factor >= 1, "scale factor must be a positive integer");
  const double s = factor;
  return Intrinsics(s * k.fx(), s * k.fy(), coarse_to_fine(k.cx(), factor),
                    coarse_to_fine(k.cy(), factor), factor * k.width(), factor * k.height());
}

Intrinsics downscale_intrinsics(const Intrinsics& k, int factor) {
  MVREF_REQUIRE(factor >= 1, "scale factor must be a positive integer");
  MVREF_REQUIRE(k.width() % factor == 0 && k.height() % factor == 0,
                "image size not divisible by scale factor");
  const double s = factor;
  return Intrinsics(k.fx() / s, k.fy() / s, fine_to_coarse(k.cx(), factor),
                    fine_to_coarse(k.cy(), factor), k.width() / factor, k.height() / factor);
}

PixelTransfer transfer_pixel(const Vec2& p_target, double depth_target,
                             const Intrinsics& k_target, const Intrinsics& k_source,
                             const RelativePose& rel) {
  MVREF_REQUIRE(depth_target > 0.0, "target depth must be positive");
  // Back-project with the closed-form inverse of K; avoids a 3x3 solve per pixel.
  const Vec3 ray((p_target.x() - k_target.cx()) / k_target.fx(),
                 (p_target.y() - k_target.cy()) / k_target.fy(), 1.0);
  const Vec3 in_source = rel.rotation * (depth_target * ray) + rel.translation;
  PixelTransfer out;
  out.depth = in_source.z();
  if (out.behind_camera()) {
    out.pixel = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  out.pixel = Vec2(k_source.fx() * in_source.x() / out.depth + k_source.cx(),
                   k_source.fy() * in_source.y() / out.depth + k_source.cy());
  return out;
}

}  // namespace mvref
