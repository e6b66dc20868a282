#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvref/geometry.hpp"
#include "mvref/image.hpp"

namespace mvref {

// Closed-form planar texture: a checkerboard modulated by a sinusoid, both in
// plane-local units, so any surface point has an exact color.
struct Texture {
  double checker_period = 0.25;
  double freq_u = 3.0;
  double freq_v = 2.0;
  double phase = 0.0;
  double sine_amplitude = 0.3;
  Rgb base{0.8, 0.6, 0.4};

  Rgb evaluate(double u, double v) const;
};

// Rectangle origin + a*axis_u + b*axis_v, |a| <= half_u, |b| <= half_v.
struct ScenePlane {
  Vec3 origin = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
  Texture texture;

  Vec3 normal() const { return axis_u.cross(axis_v); }
};

// Cameras carry HR intrinsics matching hr_width x hr_height.
struct SceneSpec {
  std::string name = "scene";
  std::vector<ScenePlane> planes;
  std::vector<CameraView> cameras;
  int hr_width = 256;
  int hr_height = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RayHit {
  int plane = -1;
  double lambda = 0.0;  // ray parameter; equals camera-z depth for rays with unit z in camera frame
  Vec3 point = Vec3::Zero();
  double u = 0.0, v = 0.0;
};

// Nearest hit with lambda > 0 along center + lambda * direction, if any.
std::optional<RayHit> cast_ray(const SceneSpec& spec, const Vec3& center, const Vec3& direction);

// World-space ray through pixel p of a camera, scaled so that its camera-frame z is 1.
Vec3 pixel_ray(const CameraView& camera, const Vec2& p);

struct RenderedView {
  ViewImage image;
  DepthMap depth;  // analytic camera-z of the nearest hit; misses invalid
  Grid<int> plane_id;
  CameraView camera;
};

std::vector<RenderedView> render_scene(const SceneSpec& spec);
RenderedView render_view(const SceneSpec& spec, const CameraView& camera);

// LR inputs plus HR ground truth for every view of a scene.
struct MvisrCase {
  int factor = 4;
  std::vector<CameraView> lr_cameras;
  std::vector<ViewImage> lr_images;
  std::vector<DepthMap> lr_depths;
  std::vector<CameraView> hr_cameras;
  std::vector<ViewImage> hr_images;
  std::vector<DepthMap> hr_depths;
};

MvisrCase make_mvisr_case(const SceneSpec& spec, int factor);

namespace scenes {

// Three planes (back wall, floor, tilted card) seen by eight cameras on an arc.
SceneSpec desk(int hr_size = 256);
// Far wall partly hidden from the second camera by a near card.
SceneSpec occlusion(int hr_size = 256);
// Fronto-parallel textured wall; view 1 at the target's distance, view 2 at half of it.
SceneSpec closeup(int hr_size = 256);

}  // namespace scenes

}  // namespace mvref
