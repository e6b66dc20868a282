#include "mvref/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "mvref/parallel.hpp"
#include "mvref/resample.hpp"

namespace mvref {

Rgb Texture::evaluate(double u, double v) const {
  const long cell = static_cast<long>(std::floor(u / checker_period)) +
                    static_cast<long>(std::floor(v / checker_period));
  const double checker = (cell & 1) ? 1.0 : 0.35;
  const double wave =
      1.0 - sine_amplitude * (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (freq_u * u + freq_v * v) + phase));
  Rgb out;
  for (int c = 0; c < 3; ++c) out[c] = std::clamp(base[c] * checker * wave, 0.0, 1.0);
  return out;
}

void SceneSpec::validate() const {
  MVREF_REQUIRE(cameras.size() >= 2, "a scene needs at least two cameras");
  MVREF_REQUIRE(!planes.empty(), "a scene needs at least one plane");
  MVREF_REQUIRE(hr_width >= 1 && hr_height >= 1, "scene resolution must be positive");
  std::set<int> ids;
  for (const auto& cam : cameras) {
    MVREF_REQUIRE(ids.insert(cam.view_id).second,
                  "duplicate view id " + std::to_string(cam.view_id));
    MVREF_REQUIRE(cam.intrinsics.width() == hr_width && cam.intrinsics.height() == hr_height,
                  "camera " + std::to_string(cam.view_id) + " intrinsics do not match the scene size");
  }
  for (const auto& p : planes) {
    MVREF_REQUIRE(std::abs(p.axis_u.norm() - 1.0) < 1e-9 && std::abs(p.axis_v.norm() - 1.0) < 1e-9,
                  "plane axes must be unit vectors");
    MVREF_REQUIRE(std::abs(p.axis_u.dot(p.axis_v)) < 1e-9, "plane axes must be orthogonal");
    MVREF_REQUIRE(p.half_u > 0 && p.half_v > 0, "plane extents must be positive");
    MVREF_REQUIRE(p.texture.checker_period > 0, "checker period must be positive");
  }
}

Vec3 pixel_ray(const CameraView& camera, const Vec2& p) {
  const Intrinsics& k = camera.intrinsics;
  const Vec3 dir_cam((p.x() - k.cx()) / k.fx(), (p.y() - k.cy()) / k.fy(), 1.0);
  return camera.pose.rotation().transpose() * dir_cam;
}

std::optional<RayHit> cast_ray(const SceneSpec& spec, const Vec3& center, const Vec3& direction) {
  std::optional<RayHit> best;
  for (int i = 0; i < static_cast<int>(spec.planes.size()); ++i) {
    const ScenePlane& pl = spec.planes[i];
    const Vec3 n = pl.normal();
    const double denom = n.dot(direction);
    if (std::abs(denom) < 1e-12) continue;  // ray parallel to the plane
    const double lambda = n.dot(pl.origin - center) / denom;
    if (!(lambda > 0.0)) continue;
    if (best && lambda >= best->lambda) continue;
    const Vec3 x = center + lambda * direction;
    const Vec3 rel = x - pl.origin;
    const double u = rel.dot(pl.axis_u);
    const double v = rel.dot(pl.axis_v);
    if (std::abs(u) > pl.half_u || std::abs(v) > pl.half_v) continue;
    best = RayHit{i, lambda, x, u, v};
  }
  return best;
}

RenderedView render_view(const SceneSpec& spec, const CameraView& camera) {
  const int w = camera.intrinsics.width();
  const int h = camera.intrinsics.height();
  RenderedView out{ViewImage(w, h), DepthMap(w, h), Grid<int>(w, h, -1), camera};
  const Vec3 center = camera.pose.camera_center();
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto hit = cast_ray(spec, center, pixel_ray(camera, Vec2(x, y)));
      if (!hit) continue;
      out.image.set(x, y, spec.planes[hit->plane].texture.evaluate(hit->u, hit->v));
      out.depth.set(x, y, hit->lambda);
      out.plane_id(x, y) = hit->plane;
    }
  });
  return out;
}

std::vector<RenderedView> render_scene(const SceneSpec& spec) {
  spec.validate();
  std::vector<RenderedView> views;
  views.reserve(spec.cameras.size());
  for (const auto& cam : spec.cameras) views.push_back(render_view(spec, cam));
  return views;
}

MvisrCase make_mvisr_case(const SceneSpec& spec, int factor) {
  MVREF_REQUIRE(factor >= 1, "SR factor must be positive");
  MVREF_REQUIRE(spec.hr_width % factor == 0 && spec.hr_height % factor == 0,
                "scene resolution must be divisible by the SR factor");
  MvisrCase c;
  c.factor = factor;
  for (auto& v : render_scene(spec)) {
    c.lr_cameras.push_back(CameraView{v.camera.view_id,
                                      downscale_intrinsics(v.camera.intrinsics, factor),
                                      v.camera.pose});
    c.lr_images.push_back(downsample_bicubic(v.image, factor));
    c.lr_depths.push_back(downsample_depth_bicubic(v.depth, factor));
    c.hr_cameras.push_back(v.camera);
    c.hr_images.push_back(std::move(v.image));
    c.hr_depths.push_back(std::move(v.depth));
  }
  return c;
}

namespace scenes {
namespace {

Intrinsics default_intrinsics(int size) {
  const double f = 1.17 * size;  // ~46 degree field of view
  return Intrinsics(f, f, 0.5 * (size - 1), 0.5 * (size - 1), size, size);
}

const Vec3 kUp(0, -1, 0);  // world +y points down, matching image rows

Texture random_texture(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Texture t;
  t.checker_period = 0.08 + 0.1 * unit(rng);
  t.freq_u = 1.0 + 4.0 * unit(rng);
  t.freq_v = 1.0 + 4.0 * unit(rng);
  t.phase = 2.0 * std::numbers::pi * unit(rng);
  t.base = Rgb{0.5 + 0.5 * unit(rng), 0.5 + 0.5 * unit(rng), 0.5 + 0.5 * unit(rng)};
  return t;
}

}  // namespace

SceneSpec desk(int hr_size) {
  SceneSpec s;
  s.name = "desk";
  s.hr_width = s.hr_height = hr_size;
  s.seed = 7;
  std::mt19937_64 rng(s.seed);

  ScenePlane wall;
  wall.origin = Vec3(0, 0, 10);
  wall.half_u = wall.half_v = 40;
  wall.texture = random_texture(rng);

  ScenePlane floor;
  floor.origin = Vec3(0, 1.6, 3);
  floor.axis_u = Vec3::UnitX();
  floor.axis_v = Vec3::UnitZ();
  floor.half_u = 40;
  floor.half_v = 6.99;
  floor.texture = random_texture(rng);

  ScenePlane card;
  card.origin = Vec3(0.2, -0.1, 6.5);
  const double tilt = 0.35;
  card.axis_u = Vec3(std::cos(tilt), 0, std::sin(tilt));
  card.axis_v = Vec3::UnitY();
  card.half_u = 1.0;
  card.half_v = 0.9;
  card.texture = random_texture(rng);

  s.planes = {wall, floor, card};

  const Vec3 look(0, 0, 8);
  for (int i = 0; i < 8; ++i) {
    const double a = -0.45 + 0.9 * i / 7.0;
    // Distance to the look-at point varies so some views are closer than others.
    const double dist = 8.0 - 3.0 * std::abs(std::sin(1.3 * i));
    const Vec3 eye = look + dist * Vec3(std::sin(a), -0.05, -std::cos(a));
    s.cameras.push_back(CameraView{i, default_intrinsics(hr_size), Pose::look_at(eye, look, kUp)});
  }
  return s;
}

SceneSpec occlusion(int hr_size) {
  SceneSpec s;
  s.name = "occlusion";
  s.hr_width = s.hr_height = hr_size;
  s.seed = 11;
  std::mt19937_64 rng(s.seed);

  ScenePlane far;
  far.origin = Vec3(0, 0, 10);
  far.half_u = far.half_v = 40;
  far.texture = random_texture(rng);

  ScenePlane near;
  near.origin = Vec3(0.9, 0, 5);
  near.half_u = 0.6;
  near.half_v = 1.0;
  near.texture = random_texture(rng);

  s.planes = {far, near};
  const Intrinsics k = default_intrinsics(hr_size);
  s.cameras.push_back(CameraView{0, k, Pose(Mat3::Identity(), Vec3::Zero())});
  // Translated camera: the near card hides part of the far wall that the target sees.
  s.cameras.push_back(CameraView{1, k, Pose(Mat3::Identity(), -Vec3(1.5, 0, 0))});
  return s;
}

SceneSpec closeup(int hr_size) {
  SceneSpec s;
  s.name = "closeup";
  s.hr_width = s.hr_height = hr_size;
  s.seed = 3;

  ScenePlane wall;
  wall.origin = Vec3(0, 0, 8);
  wall.half_u = wall.half_v = 40;
  wall.texture.checker_period = 0.11;
  wall.texture.freq_u = 2.5;
  wall.texture.freq_v = 1.5;
  wall.texture.base = Rgb{0.9, 0.75, 0.6};
  s.planes = {wall};

  const Intrinsics k = default_intrinsics(hr_size);
  s.cameras.push_back(CameraView{0, k, Pose(Mat3::Identity(), Vec3::Zero())});
  s.cameras.push_back(CameraView{1, k, Pose(Mat3::Identity(), -Vec3(1.0, 0.0, 0.0))});
  s.cameras.push_back(CameraView{2, k, Pose(Mat3::Identity(), -Vec3(0.3, 0.2, 4.0))});
  return s;
}

}  // namespace scenes
}  // namespace mvref
