#pragma once

#include "nfseg/recording.hpp"
#include "nfseg/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace nfseg {

/// A planar object moving independently of the camera. `motion` is the
/// camera motion relative to the object, expressed in the camera frame, so its
/// image flow is flow_at(x, motion, plane.inverse_depth(x)).
struct ObjectSpec {
  Plane plane{0.0, 0.0, 1.0, 1.0};
  MotionParams motion;
  Vec2 center_px = Vec2::Zero();
  Vec2 radii_px = Vec2(30.0, 30.0);  // elliptical image support
  int appear_step = 0;
  int vanish_step = -1;  // -1: never
};

struct SceneSpec {
  Intrinsics intrinsics;
  Plane background{0.0, 0.0, 1.0, 1.5};
  MotionParams camera;
  std::vector<MotionParams> camera_trajectory;  // optional per-step override
  std::vector<ObjectSpec> objects;
  double slice_duration = 0.025;  // s
  double edge_density = 0.08;     // texture points per pixel
  double fire_probability = 0.7;  // chance that a texture point fires in a slice
  double orientation_scale = 8.0; // px; correlation length of edge orientations
  double flow_noise = 0.0;        // sigma of additive noise on n, calibrated units / s
  double outlier_fraction = 0.0;
  double imu_noise = 0.0;         // rad/s
};

/// Forward model producing a Recording with labels and poses. Deterministic
/// for a given (spec, steps, seed).
Recording simulate(const SceneSpec& spec, int steps, std::uint64_t seed);

/// Scene files are JSON; see README for the schema.
SceneSpec parse_scene(std::istream& in);
SceneSpec load_scene(const std::string& path);

}  // namespace nfseg
