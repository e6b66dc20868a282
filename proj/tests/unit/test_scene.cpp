#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvref/scene.hpp"

using namespace mvref;

TEST_CASE("single fronto-parallel plane gives uniform depth") {
  SceneSpec s;
  s.hr_width = s.hr_height = 32;
  ScenePlane p;
  p.origin = Vec3(0, 0, 4.5);
  p.half_u = p.half_v = 100;
  s.planes = {p};
  const Intrinsics k = helpers::simple_intrinsics(32, 32);
  s.cameras = {{0, k, Pose()}, {1, k, Pose(Mat3::Identity(), Vec3(-0.5, 0, 0))}};
  const auto views = render_scene(s);
  REQUIRE(views.size() == 2);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) CHECK(views[0].depth.value(x, y) == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("plane extent limits the hit region") {
  SceneSpec s;
  s.hr_width = s.hr_height = 33;
  ScenePlane p;
  p.origin = Vec3(0, 0, 5);
  p.half_u = p.half_v = 1.0;
  s.planes = {p};
  const Intrinsics k(20, 20, 16, 16, 33, 33);
  s.cameras = {{0, k, Pose()}, {1, k, Pose()}};
  const RenderedView v = render_view(s, s.cameras[0]);
  // Plane spans |x| <= 1 at z = 5, i.e. 4 px either side of the center.
  CHECK(v.depth.valid(16, 16));
  CHECK(v.depth.valid(20, 16));
  CHECK_FALSE(v.depth.valid(21, 16));
  CHECK_FALSE(v.depth.valid(16, 11));
  CHECK(v.plane_id(16, 16) == 0);
  CHECK(v.plane_id(0, 0) == -1);
  CHECK(v.image.at(0, 0) == Rgb{});
}

TEST_CASE("nearest hit wins where planes overlap") {
  const SceneSpec s = scenes::occlusion(64);
  const RenderedView v = render_view(s, s.cameras[0]);
  int near = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const auto hit = cast_ray(s, Vec3::Zero(), pixel_ray(s.cameras[0], Vec2(x, y)));
      REQUIRE(hit);
      CHECK(v.plane_id(x, y) == hit->plane);
      if (hit->plane == 1) {
        ++near;
        CHECK(v.depth.value(x, y) == doctest::Approx(5.0).epsilon(1e-12));
      } else {
        CHECK(v.depth.value(x, y) == doctest::Approx(10.0).epsilon(1e-12));
      }
    }
  CHECK(near > 100);
}

TEST_CASE("corresponding pixels carry identical texture") {
  const SceneSpec s = scenes::desk(64);
  const CameraView& a = s.cameras[0];
  const CameraView& b = s.cameras[4];
  int matched = 0;
  for (int y = 0; y < 64; y += 3)
    for (int x = 0; x < 64; x += 3) {
      const auto hit = cast_ray(s, a.pose.camera_center(), pixel_ray(a, Vec2(x, y)));
      if (!hit) continue;
      // Re-cast from b through the same point; same plane and point means same texture.
      const Vec3 dir = hit->point - b.pose.camera_center();
      const auto back = cast_ray(s, b.pose.camera_center(), dir);
      if (!back || back->plane != hit->plane || (back->point - hit->point).norm() > 1e-9) continue;
      const auto& tex = s.planes[hit->plane].texture;
      const Rgb ca = tex.evaluate(hit->u, hit->v), cb = tex.evaluate(back->u, back->v);
      for (int ch = 0; ch < 3; ++ch) CHECK(ca[ch] == doctest::Approx(cb[ch]).epsilon(1e-9));
      ++matched;
    }
  CHECK(matched > 100);
}

TEST_CASE("pixel ray has unit camera-z") {
  const SceneSpec s = scenes::desk(64);
  for (const auto& cam : s.cameras) {
    const Vec3 r = pixel_ray(cam, Vec2(10, 50));
    CHECK((cam.pose.rotation() * r).z() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("half the distance doubles the projected texture period") {
  const SceneSpec s = scenes::closeup(128);
  const auto views = render_scene(s);
  // Fronto-parallel wall: the pixel footprint of one plane unit is f / depth.
  const double f = s.cameras[0].intrinsics.fx();
  const double far = views[0].depth.value(64, 64);
  const double near = views[2].depth.value(64, 64);
  CHECK(far == doctest::Approx(8.0));
  CHECK(near == doctest::Approx(4.0));
  CHECK((f / near) / (f / far) == doctest::Approx(2.0));

  // Autocorrelation of a luminance row peaks at twice the lag in the closer view.
  auto period = [](const RenderedView& v, int max_lag) {
    std::vector<double> row;
    for (int x = 0; x < v.image.width(); ++x) row.push_back(v.image.channel(x, 64, 0));
    double mean = 0;
    for (double r : row) mean += r;
    mean /= row.size();
    int best = 0;
    double best_val = -1e9;
    for (int lag = 4; lag <= max_lag; ++lag) {
      double acc = 0;
      for (std::size_t i = 0; i + lag < row.size(); ++i) acc += (row[i] - mean) * (row[i + lag] - mean);
      acc /= static_cast<double>(row.size() - lag);
      if (acc > best_val) {
        best_val = acc;
        best = lag;
      }
    }
    return best;
  };
  const int p_far = period(views[0], 40);
  const int p_near = period(views[2], 80);
  CHECK(std::abs(p_near - 2 * p_far) <= 2);
}

TEST_CASE("mvisr case shapes and intrinsics") {
  const MvisrCase c = make_mvisr_case(scenes::desk(64), 4);
  REQUIRE(c.lr_cameras.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(c.lr_images[i].width() == 16);
    CHECK(c.lr_depths[i].height() == 16);
    CHECK(c.hr_images[i].width() == 64);
    CHECK(scale_intrinsics(c.lr_cameras[i].intrinsics, 4) == c.hr_cameras[i].intrinsics);
  }
  CHECK_THROWS_AS(make_mvisr_case(scenes::desk(66), 4), InvalidArgument);
}

TEST_CASE("scene validation") {
  SceneSpec s = scenes::desk(64);
  CHECK_NOTHROW(s.validate());
  s.cameras.erase(s.cameras.begin() + 1, s.cameras.end());
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = scenes::desk(64);
  s.planes[0].axis_u = Vec3(1, 1, 0);
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}
