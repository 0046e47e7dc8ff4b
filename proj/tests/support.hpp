#pragma once

// Shared fixtures for the unit and acceptance tests: seeded draws and
// hand-written forward models that do not go through the library's geometry.

#include "nfseg/simulator.hpp"
#include "nfseg/types.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using nfseg::ImagePoint;
using nfseg::MotionParams;
using nfseg::NormalFlowSample;
using nfseg::Plane;
using nfseg::Vec2;
using nfseg::Vec3;

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  Vec2 unit2() {
    const double a = uniform(0.0, 2.0 * std::numbers::pi);
    return {std::cos(a), std::sin(a)};
  }
  Vec3 unit3() {
    Vec3 v(normal(), normal(), normal());
    return v.normalized();
  }
  Vec3 vec3(double scale) { return {uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)}; }
  ImagePoint point(double half = 0.6) { return {uniform(-half, half), uniform(-half, half)}; }

  // Plane with inverse depth bounded away from zero over |x|, |y| <= 0.6.
  Plane plane() {
    Plane p;
    p.alpha = uniform(-0.5, 0.5);
    p.beta = uniform(-0.5, 0.5);
    p.gamma = 1.0;
    p.d = uniform(1.0, 3.0);
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// The pinhole motion field written out component by component:
//   u = (-tx + x tz) / Z + xy wx - (1 + x^2) wy + y wz
//   v = (-ty + y tz) / Z + (1 + y^2) wx - xy wy - x wz
inline Vec2 motion_field(const ImagePoint& p, const Vec3& t, const Vec3& w, double inv_depth) {
  const double x = p.x(), y = p.y();
  return {inv_depth * (-t.x() + x * t.z()) + x * y * w.x() - (1.0 + x * x) * w.y() + y * w.z(),
          inv_depth * (-t.y() + y * t.z()) + (1.0 + y * y) * w.x() - x * y * w.y() - x * w.z()};
}

inline double inverse_depth(const Plane& plane, const ImagePoint& p) {
  return (plane.alpha * p.x() + plane.beta * p.y() + plane.gamma) / plane.d;
}

// Normal-flow samples of a rigid planar scene with random edge directions.
inline std::vector<NormalFlowSample> planar_samples(const Vec3& t, const Vec3& w, const Plane& plane,
                                                    std::size_t count, Draw& draw, double half = 0.6) {
  std::vector<NormalFlowSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    NormalFlowSample s;
    s.point = draw.point(half);
    s.n0 = draw.unit2();
    s.n = motion_field(s.point, t, w, inverse_depth(plane, s.point)).dot(s.n0);
    out.push_back(s);
  }
  return out;
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

// A small scene: plane background, camera translating sideways, one or two
// fast planar objects. Used wherever a realistic recording is needed.
inline nfseg::SceneSpec two_object_scene(bool second_object = true) {
  nfseg::SceneSpec s;
  s.camera.t = Vec3(0.3, -0.1, 0.2);
  s.camera.w = Vec3(-0.05, 0.1, 0.05);
  nfseg::ObjectSpec a;
  a.plane.d = 1.0;
  a.motion.t = Vec3(-2.3, 1.1, -0.2);
  a.motion.w = s.camera.w;
  a.center_px = Vec2(95, 85);
  a.radii_px = Vec2(60, 51);
  s.objects.push_back(a);
  if (second_object) {
    nfseg::ObjectSpec b;
    b.plane.d = 1.2;
    b.motion.t = Vec3(2.1, -0.3, 0.4);
    b.motion.w = s.camera.w;
    b.center_px = Vec2(255, 175);
    b.radii_px = Vec2(60, 51);
    s.objects.push_back(b);
  }
  return s;
}

inline nfseg::SceneSpec one_object_scene() {
  nfseg::SceneSpec s;
  s.camera.t = Vec3(0.4, 0.1, 0.2);
  s.camera.w = Vec3(0.05, -0.1, 0.08);
  nfseg::ObjectSpec a;
  a.plane.d = 1.0;
  a.motion.t = Vec3(-2.8, 0.7, 0.0);
  a.motion.w = s.camera.w;
  a.center_px = Vec2(130, 130);
  a.radii_px = Vec2(60, 51);
  s.objects.push_back(a);
  return s;
}

// Two objects drifting sideways against a slowly translating camera; the
// second one enters at step 10.
inline nfseg::SceneSpec emerging_object_scene() {
  nfseg::SceneSpec s;
  s.camera.t = Vec3(0.3, 0.1, 0.1);
  s.camera.w = Vec3(0.02, -0.03, 0.02);
  nfseg::ObjectSpec a;
  a.motion.t = Vec3(-0.5, 0.0, 0.0);
  a.motion.w = s.camera.w;
  a.center_px = Vec2(80, 100);
  a.radii_px = Vec2(50, 45);
  s.objects.push_back(a);
  nfseg::ObjectSpec b = a;
  b.motion.t = Vec3(-0.3, 0.4, 0.0);
  b.center_px = Vec2(250, 200);
  b.appear_step = 10;
  s.objects.push_back(b);
  return s;
}

}  // namespace testing
