#pragma once

#include "nfseg/types.hpp"

#include <Eigen/Core>

namespace nfseg::se3 {

using Pose = Eigen::Matrix4d;

/// Twist (v, omega): translational and angular parts.
struct Twist {
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();
};

Pose exp(const Twist& xi);

/// Inverse of exp(). Throws ValidationError when `pose` is not a rigid
/// transform (orthogonality or determinant off by more than 1e-6).
Twist log(const Pose& pose);

Pose inverse(const Pose& pose);

void validate_rigid(const Pose& pose, double tolerance = 1e-6);

}  // namespace nfseg::se3
