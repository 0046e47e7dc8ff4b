#include "nfseg/se3.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace nfseg::se3 {

namespace {

Eigen::Matrix3d hat(const Vec3& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return m;
}

// Left Jacobian V(omega) of SO(3) and its inverse, with Taylor branches near 0.
Eigen::Matrix3d left_jacobian(const Vec3& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d k = hat(w);
  double a, b;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    const double s = std::sin(0.5 * theta);
    a = 2.0 * s * s / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Matrix3d left_jacobian_inverse(const Vec3& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d k = hat(w);
  double c;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
}

}  // namespace

void validate_rigid(const Pose& pose, double tolerance) {
  if (!pose.allFinite()) throw ValidationError("pose has non-finite entries");
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tolerance) {
    throw ValidationError("pose rotation is not orthogonal (deviation " + std::to_string(ortho) + ")");
  }
  if (std::abs(r.determinant() - 1.0) > tolerance) throw ValidationError("pose rotation has determinant != 1");
  const Eigen::RowVector4d bottom = pose.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tolerance) {
    throw ValidationError("pose bottom row is not [0 0 0 1]");
  }
}

Pose exp(const Twist& xi) {
  Pose out = Pose::Identity();
  const double theta = xi.w.norm();
  if (theta > 0.0) {
    out.topLeftCorner<3, 3>() = Eigen::AngleAxisd(theta, xi.w / theta).toRotationMatrix();
  }
  out.topRightCorner<3, 1>() = left_jacobian(xi.w) * xi.v;
  return out;
}

Twist log(const Pose& pose) {
  validate_rigid(pose);
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  const Eigen::AngleAxisd aa(r);
  Twist xi;
  xi.w = aa.angle() * aa.axis();
  xi.v = left_jacobian_inverse(xi.w) * pose.topRightCorner<3, 1>();
  return xi;
}

Pose inverse(const Pose& pose) {
  Pose out = Pose::Identity();
  const Eigen::Matrix3d rt = pose.topLeftCorner<3, 3>().transpose();
  out.topLeftCorner<3, 3>() = rt;
  out.topRightCorner<3, 1>() = -rt * pose.topRightCorner<3, 1>();
  return out;
}

}  // namespace nfseg::se3
