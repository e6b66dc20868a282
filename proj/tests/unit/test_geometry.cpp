#include <doctest.h>

#include <Eigen/Geometry>

#include "helpers.hpp"
#include "mvref/geometry.hpp"

using namespace mvref;
using helpers::random_rotation;
using helpers::random_vec;

namespace {

Eigen::Matrix4d homogeneous(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rotation();
  m.topRightCorner<3, 1>() = p.translation();
  return m;
}

// Independent projection: P = K [R | t], then intersect the target ray at depth d.
Vec2 project(const Intrinsics& k, const Pose& pose, const Vec3& world, double* z = nullptr) {
  Eigen::Matrix<double, 3, 4> rt;
  rt << pose.rotation(), pose.translation();
  const Eigen::Matrix<double, 3, 4> p = k.matrix() * rt;
  const Vec3 h = p * world.homogeneous();
  if (z) *z = h.z();
  return h.hnormalized();
}

Vec3 unproject(const Intrinsics& k, const Pose& pose, const Vec2& px, double depth) {
  const Vec3 cam = depth * k.matrix().inverse() * px.homogeneous();
  return pose.rotation().transpose() * (cam - pose.translation());
}

}  // namespace

TEST_CASE("intrinsics reject invalid fields") {
  CHECK_THROWS_AS(Intrinsics(0, 1, 0, 0, 4, 4), InvalidArgument);
  CHECK_THROWS_AS(Intrinsics(1, -1, 0, 0, 4, 4), InvalidArgument);
  CHECK_THROWS_AS(Intrinsics(1, 1, NAN, 0, 4, 4), InvalidArgument);
  CHECK_THROWS_AS(Intrinsics(1, 1, 0, 0, 0, 4), InvalidArgument);
  CHECK_NOTHROW(Intrinsics(1, 1, 0, 0, 1, 1));
  const Intrinsics k(100, 90, 50, 40, 101, 81);
  CHECK((k.matrix() * k.inverse_matrix() - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("pose rejects non-rotations") {
  Mat3 r = Mat3::Identity();
  r(0, 1) = 1e-8;
  CHECK_THROWS_AS(Pose(r, Vec3::Zero()), InvalidArgument);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  CHECK_THROWS_AS(Pose(reflect, Vec3::Zero()), InvalidArgument);
  CHECK_THROWS_AS(Pose(Mat3::Identity(), Vec3(0, INFINITY, 0)), InvalidArgument);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) CHECK_NOTHROW(Pose(random_rotation(rng), random_vec(rng)));
}

TEST_CASE("look_at points +z at the target with image y down") {
  const Pose p = Pose::look_at(Vec3(1, 2, -3), Vec3(1, 2, 5), Vec3(0, -1, 0));
  CHECK((p.to_camera(Vec3(1, 2, 5)) - Vec3(0, 0, 8)).norm() < 1e-12);
  // A point above the target (world -y is up) lands at negative image y.
  CHECK(p.to_camera(Vec3(1, 1, 5)).y() < 0);
  CHECK((p.camera_center() - Vec3(1, 2, -3)).norm() < 1e-12);
}

TEST_CASE("relative pose examples") {
  const Intrinsics k = helpers::simple_intrinsics(8, 8);
  std::mt19937_64 rng(2);
  const CameraView a{0, k, Pose(random_rotation(rng), random_vec(rng))};
  const RelativePose same = relative_pose(a, a);
  CHECK((same.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(same.translation.norm() < 1e-12);

  const Mat3 rz = helpers::rot_z(M_PI / 2);
  const CameraView src{1, k, Pose(rz, Vec3(1, 2, 3))};
  const CameraView tgt{2, k, Pose()};
  const RelativePose r = relative_pose(src, tgt);
  CHECK(r.rotation == rz);
  CHECK(r.translation == Vec3(1, 2, 3));
}

TEST_CASE("relative pose matches 4x4 composition and inverts") {
  std::mt19937_64 rng(3);
  const Intrinsics k = helpers::simple_intrinsics(8, 8);
  for (int i = 0; i < 50; ++i) {
    const CameraView s{0, k, Pose(random_rotation(rng), random_vec(rng, 5))};
    const CameraView t{1, k, Pose(random_rotation(rng), random_vec(rng, 5))};
    const Eigen::Matrix4d oracle = homogeneous(s.pose) * homogeneous(t.pose).inverse();
    const RelativePose r = relative_pose(s, t);
    CHECK((r.rotation - oracle.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.translation - oracle.topRightCorner<3, 1>()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_NOTHROW(check_rotation(r.rotation));

    const RelativePose back = relative_pose(t, s);
    const Mat3 rr = back.rotation * r.rotation;
    const Vec3 tt = back.rotation * r.translation + back.translation;
    CHECK((rr - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(tt.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("scale_intrinsics follows the pixel-center convention") {
  const Intrinsics k(100, 80, 50, 30, 101, 61);
  CHECK(scale_intrinsics(k, 1) == k);
  const Intrinsics k4 = scale_intrinsics(k, 4);
  CHECK(k4.fx() == 400);
  CHECK(k4.fy() == 320);
  CHECK(k4.cx() == 201.5);
  CHECK(k4.cy() == 121.5);
  CHECK(k4.width() == 404);
  CHECK(k4.height() == 244);
  CHECK_THROWS_AS(scale_intrinsics(k, 0), InvalidArgument);
  CHECK(downscale_intrinsics(k4, 4) == k);
  CHECK_THROWS_AS(downscale_intrinsics(Intrinsics(1, 1, 0, 0, 10, 8), 4), InvalidArgument);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 x(u(rng), u(rng), 3 + u(rng));
    const Vec2 lr = project(k, Pose(), x);
    const Vec2 hr = project(k4, Pose(), x);
    CHECK(std::abs(hr.x() - (4 * lr.x() + 1.5)) < 1e-9);
    CHECK(std::abs(hr.y() - (4 * lr.y() + 1.5)) < 1e-9);
  }
  CHECK(fine_to_coarse(coarse_to_fine(3.25, 4), 4) == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(fine_to_coarse(1.5, 4) == 0.0);
}

TEST_CASE("transfer_pixel identity") {
  const Intrinsics k(120, 110, 31.5, 23.5, 64, 48);
  const RelativePose id{Mat3::Identity(), Vec3::Zero()};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 60), d(0.5, 20);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(u(rng), u(rng) * 0.7);
    const double z = d(rng);
    const PixelTransfer t = transfer_pixel(p, z, k, k, id);
    CHECK((t.pixel - p).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(t.depth - z) < 1e-9);
  }
}

TEST_CASE("transfer_pixel forward translation magnifies about the principal point") {
  const Intrinsics k(100, 100, 32, 24, 65, 49);
  const double d = 10.0, delta = 4.0;
  // Source camera moved delta along +z: x_cam = x - (0, 0, delta).
  const CameraView target{0, k, Pose()};
  const CameraView source{1, k, Pose(Mat3::Identity(), Vec3(0, 0, -delta))};
  const RelativePose rel = relative_pose(source, target);
  const Vec2 p(40, 10);
  const PixelTransfer t = transfer_pixel(p, d, k, k, rel);
  CHECK(t.depth == doctest::Approx(d - delta).epsilon(1e-12));
  const double mag = d / (d - delta);
  CHECK(t.pixel.x() == doctest::Approx(32 + (40 - 32) * mag).epsilon(1e-12));
  CHECK(t.pixel.y() == doctest::Approx(24 + (10 - 24) * mag).epsilon(1e-12));
}

TEST_CASE("transfer_pixel flags points behind the source") {
  const Intrinsics k = helpers::simple_intrinsics(32, 32);
  const CameraView target{0, k, Pose()};
  // Source at the origin looking down -z.
  const CameraView source{1, k, Pose(helpers::rot_y(M_PI), Vec3::Zero())};
  const PixelTransfer t = transfer_pixel(Vec2(16, 16), 5.0, k, k, relative_pose(source, target));
  CHECK(t.behind_camera());
  CHECK(std::isnan(t.pixel.x()));
  CHECK_THROWS_AS(transfer_pixel(Vec2(1, 1), 0.0, k, k, relative_pose(source, target)), InvalidArgument);
}

TEST_CASE("transfer_pixel agrees with a projection-matrix oracle") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const Intrinsics kt(80 + 40 * u(rng), 80 + 40 * u(rng), 30 + 4 * u(rng), 20 + 4 * u(rng), 64, 48);
    const Intrinsics ks(60 + 60 * u(rng), 60 + 60 * u(rng), 30 + 4 * u(rng), 20 + 4 * u(rng), 64, 48);
    const Pose pt(random_rotation(rng), random_vec(rng, 2));
    // Source camera near the target so most points stay in front.
    const Pose ps(Eigen::AngleAxisd(0.2 * u(rng), random_vec(rng).normalized()).toRotationMatrix() * pt.rotation(),
                  pt.translation() + random_vec(rng, 0.5));
    const Vec2 p(64 * u(rng), 48 * u(rng));
    const double d = 2 + 8 * u(rng);
    const PixelTransfer t = transfer_pixel(p, d, kt, ks, relative_pose({1, ks, ps}, {0, kt, pt}));
    double z;
    const Vec2 oracle = project(ks, ps, unproject(kt, pt, p, d), &z);
    CHECK(t.depth == doctest::Approx(z).epsilon(1e-9));
    if (t.behind_camera()) continue;
    ++checked;
    CHECK((t.pixel - oracle).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK(checked > 400);
}
