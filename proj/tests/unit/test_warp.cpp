#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvref/resample.hpp"
#include "mvref/scene.hpp"
#include "mvref/warp.hpp"

using namespace mvref;

namespace {

// One textured fronto-parallel wall, two cameras translated sideways.
SceneSpec wall_scene(int hr) {
  SceneSpec s;
  s.hr_width = s.hr_height = hr;
  ScenePlane wall;
  wall.origin = Vec3(0, 0, 6);
  wall.half_u = wall.half_v = 50;
  s.planes = {wall};
  const Intrinsics k = helpers::simple_intrinsics(hr, hr);
  s.cameras = {{0, k, Pose()}, {1, k, Pose(Mat3::Identity(), Vec3(-0.7, 0.2, 0))}};
  return s;
}

}  // namespace

TEST_CASE("nearest_index bounds") {
  CHECK(nearest_index(-0.5, 4) == 0);
  CHECK(nearest_index(-0.5000001, 4) == -1);
  CHECK(nearest_index(0.49, 4) == 0);
  CHECK(nearest_index(0.5, 4) == 1);
  CHECK(nearest_index(3.49, 4) == 3);
  CHECK(nearest_index(3.5, 4) == -1);
  CHECK(nearest_index(NAN, 4) == -1);
  CHECK(parse_sampling("bilinear") == Sampling::Bilinear);
  CHECK_THROWS_AS(parse_sampling("cubic"), InvalidArgument);
}

TEST_CASE("identity warp reproduces the nearest upsample of the source") {
  const MvisrCase c = make_mvisr_case(scenes::desk(64), 4);
  const DepthMap hr_depth = upsample_depth_bicubic(c.lr_depths[2], 4);
  const WarpedView w = warp_view({c.lr_cameras[2], c.lr_images[2], hr_depth}, {c.lr_cameras[2], hr_depth});
  CHECK(w.source_id == 2);
  std::size_t valid = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      CHECK(w.valid(x, y) == hr_depth.valid(x, y));
      if (!w.valid(x, y)) {
        CHECK(w.color.at(x, y) == Rgb{});
        CHECK_FALSE(w.depth.valid(x, y));
        continue;
      }
      ++valid;
      CHECK(w.color.at(x, y) == c.lr_images[2].at(x / 4, y / 4));
      CHECK(std::abs(w.depth.value(x, y) - hr_depth.value(x, y)) < 1e-9);
    }
  CHECK(valid > 0);
}

TEST_CASE("fronto-parallel warp matches the analytic correspondence") {
  const SceneSpec spec = wall_scene(64);
  const MvisrCase c = make_mvisr_case(spec, 4);
  const WarpedView w = warp_view({c.lr_cameras[1], c.lr_images[1], c.hr_depths[1]}, {c.lr_cameras[0], c.hr_depths[0]});
  const CameraView& t = c.hr_cameras[0];
  const CameraView& s = c.hr_cameras[1];
  int compared = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const auto hit = cast_ray(spec, t.pose.camera_center(), pixel_ray(t, Vec2(x, y)));
      REQUIRE(hit);
      const Vec3 cam = s.pose.to_camera(hit->point);
      const double px = s.intrinsics.fx() * cam.x() / cam.z() + s.intrinsics.cx();
      const double py = s.intrinsics.fy() * cam.y() / cam.z() + s.intrinsics.cy();
      const bool in_bounds = px >= -0.5 && px < 63.5 && py >= -0.5 && py < 63.5;
      CHECK(w.valid(x, y) == in_bounds);
      if (!in_bounds) continue;
      const int lx = static_cast<int>(std::floor((px - 1.5) / 4 + 0.5));
      const int ly = static_cast<int>(std::floor((py - 1.5) / 4 + 0.5));
      CHECK(w.color.at(x, y) == c.lr_images[1].at(lx, ly));
      CHECK(w.depth.value(x, y) == doctest::Approx(cam.z()).epsilon(1e-12));
      ++compared;
    }
  CHECK(compared > 1000);
}

TEST_CASE("valid pixels re-project inside the sampled source pixel") {
  const MvisrCase c = make_mvisr_case(scenes::desk(64), 4);
  const WarpedView w = warp_view({c.lr_cameras[1], c.lr_images[1], c.hr_depths[1]}, {c.lr_cameras[0], c.hr_depths[0]});
  const Intrinsics kt = c.hr_cameras[0].intrinsics;
  const Intrinsics ks = c.hr_cameras[1].intrinsics;
  const RelativePose rel = relative_pose(c.hr_cameras[1], c.hr_cameras[0]);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (!w.valid(x, y)) continue;
      const PixelTransfer tr = transfer_pixel(Vec2(x, y), c.hr_depths[0].value(x, y), kt, ks, rel);
      const double lx = fine_to_coarse(tr.pixel.x(), 4), ly = fine_to_coarse(tr.pixel.y(), 4);
      const int ix = nearest_index(lx, 16), iy = nearest_index(ly, 16);
      CHECK(std::abs(lx - ix) <= 0.5);
      CHECK(std::abs(ly - iy) <= 0.5);
      CHECK(w.color.at(x, y) == c.lr_images[1].at(ix, iy));
    }
}

TEST_CASE("validity is monotone in the occlusion tolerance") {
  const MvisrCase c = make_mvisr_case(scenes::desk(64), 4);
  const DepthMap dt = upsample_depth_bicubic(c.lr_depths[3], 4);
  const DepthMap ds = upsample_depth_bicubic(c.lr_depths[5], 4);
  Mask previous(64, 64, 0);
  for (double tol : {0.0, 0.001, 0.01, 0.05, 0.5}) {
    WarpOptions o;
    o.occlusion_tolerance = tol;
    const WarpedView w = warp_view({c.lr_cameras[5], c.lr_images[5], ds}, {c.lr_cameras[3], dt}, o);
    for (std::size_t i = 0; i < previous.size(); ++i) CHECK(w.valid.data()[i] >= previous.data()[i]);
    previous = w.valid;
  }
}

TEST_CASE("bilinear sampling interpolates the LR source") {
  const SceneSpec spec = wall_scene(32);
  const MvisrCase c = make_mvisr_case(spec, 4);
  WarpOptions o;
  o.sampling = Sampling::Bilinear;
  const WarpedView w = warp_view({c.lr_cameras[0], c.lr_images[0], c.hr_depths[0]}, {c.lr_cameras[0], c.hr_depths[0]}, o);
  // Identity geometry: HR pixel 5 sits at LR coordinate 0.875 on both axes.
  const double f = 0.875;
  const auto& img = c.lr_images[0];
  for (int ch = 0; ch < 3; ++ch) {
    const double expect = (1 - f) * (1 - f) * img.channel(0, 0, ch) + f * (1 - f) * img.channel(1, 0, ch) +
                          (1 - f) * f * img.channel(0, 1, ch) + f * f * img.channel(1, 1, ch);
    CHECK(w.color.channel(5, 5, ch) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("warp rejects inconsistent resolutions") {
  const MvisrCase c = make_mvisr_case(wall_scene(32), 4);
  CHECK_THROWS_AS(warp_view({c.lr_cameras[1], c.lr_images[1], c.lr_depths[1]}, {c.lr_cameras[0], c.hr_depths[0]}),
                  InvalidArgument);
  WarpOptions o;
  o.factor = 2;
  CHECK_THROWS_AS(warp_view({c.lr_cameras[1], c.lr_images[1], c.hr_depths[1]}, {c.lr_cameras[0], c.hr_depths[0]}, o),
                  InvalidArgument);
}
