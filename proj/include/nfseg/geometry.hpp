#pragma once

// Pinhole motion-field algebra for calibrated image coordinates.
//
//   u(x)   = inv_depth * A(x) t + B(x) w
//   u_n(x) = u(x) . n0
//
// Under a planar scene d/Z = alpha x + beta y + gamma the flow becomes
// u(x) = C(x) a with the 8-vector a built by assemble_a().

#include "nfseg/types.hpp"

#include <span>

namespace nfseg::geometry {

Mat23 matrix_A(const ImagePoint& p);
Mat23 matrix_B(const ImagePoint& p);
Mat28 matrix_C(const ImagePoint& p);

Vec2 flow_at(const ImagePoint& p, const MotionParams& motion, double inv_depth);

double normal_flow_at(const ImagePoint& p, const Vec2& n0,
                      const MotionParams& motion, double inv_depth);

/// Removes the rotational component: n - (B(x) w) . n0.
double derotate(const NormalFlowSample& sample, const Vec3& w);

std::vector<double> derotate(std::span<const NormalFlowSample> samples,
                             const Vec3& w);

/// Row vector n0^T C(x); the normal flow predicted by `a` is row * a.
Eigen::Matrix<double, 1, 8> constraint_row(const ImagePoint& p, const Vec2& n0);

/// Plane parameters for camera motion `motion` over scene plane `plane`,
/// normalized so that C(x) a reproduces flow_at() with inv_depth from the plane.
PlaneParams assemble_a(const MotionParams& motion, const Plane& plane);

}  // namespace nfseg::geometry
