#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfseg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat28 = Eigen::Matrix<double, 2, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

/// Calibrated (focal-normalized) image coordinates.
using ImagePoint = Vec2;

/// Rigid motion: translation t in m/s and rotation w in rad/s.
struct MotionParams {
  Vec3 t = Vec3::Zero();
  Vec3 w = Vec3::Zero();
};

/// One normal-flow measurement. The flow vector is n * n0; n may be negative.
struct NormalFlowSample {
  ImagePoint point = ImagePoint::Zero();
  Vec2 n0 = Vec2::UnitX();
  double n = 0.0;

  Vec2 vector() const { return n * n0; }
};

/// Eight combined motion/plane parameters of the planar-scene flow model.
using PlaneParams = Vec8;

/// Scene plane d / Z(x) = alpha * x + beta * y + gamma.
struct Plane {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 1.0;
  double d = 1.0;

  double inverse_depth(const ImagePoint& p) const {
    return (alpha * p.x() + beta * p.y() + gamma) / d;
  }
};

struct Intrinsics {
  double fx = 200.0;
  double fy = 200.0;
  double cx = 173.0;
  double cy = 130.0;
  int width = 346;
  int height = 260;

  ImagePoint to_calibrated(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy};
  }
  Vec2 to_pixel(const ImagePoint& p) const {
    return {p.x() * fx + cx, p.y() * fy + cy};
  }
  double mean_focal() const { return 0.5 * (fx + fy); }
};

struct Event {
  double t = 0.0;  // seconds
  double x = 0.0;  // pixels
  double y = 0.0;  // pixels
};

/// Pixel-space axis-aligned rectangle, inclusive bounds.
struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = -1.0;
  double max_y = -1.0;

  bool empty() const { return max_x < min_x || max_y < min_y; }
  void extend(double x, double y);
  void extend(const BBox& other);
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  /// True when the boxes, each grown by `dilation`, overlap or touch.
  bool overlaps(const BBox& other, double dilation) const;
};

inline void BBox::extend(double x, double y) {
  if (empty()) {
    min_x = max_x = x;
    min_y = max_y = y;
    return;
  }
  min_x = std::min(min_x, x);
  min_y = std::min(min_y, y);
  max_x = std::max(max_x, x);
  max_y = std::max(max_y, y);
}

inline void BBox::extend(const BBox& other) {
  if (other.empty()) return;
  extend(other.min_x, other.min_y);
  extend(other.max_x, other.max_y);
}

inline bool BBox::overlaps(const BBox& other, double dilation) const {
  if (empty() || other.empty()) return false;
  return min_x - dilation <= other.max_x + dilation &&
         other.min_x - dilation <= max_x + dilation &&
         min_y - dilation <= other.max_y + dilation &&
         other.min_y - dilation <= max_y + dilation;
}

// Errors raised by the engine. Callers that can recover (the pipeline) catch
// the specific types; everything else bubbles up as std::runtime_error.

struct EmptySlice : std::runtime_error {
  EmptySlice() : std::runtime_error("event slice is empty") {}
};

struct DegenerateSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientSupport : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nfseg
