#include "nfseg/geometry.hpp"

namespace nfseg::geometry {

Mat23 matrix_A(const ImagePoint& p) {
  Mat23 a;
  a << -1.0, 0.0, p.x(),
        0.0, -1.0, p.y();
  return a;
}

Mat23 matrix_B(const ImagePoint& p) {
  const double x = p.x();
  const double y = p.y();
  Mat23 b;
  b << x * y, -(1.0 + x * x), y,
       1.0 + y * y, -x * y, -x;
  return b;
}

Mat28 matrix_C(const ImagePoint& p) {
  const double x = p.x();
  const double y = p.y();
  Mat28 c;
  c << x * x, x * y, x, y, 1.0, 0.0, 0.0, 0.0,
       x * y, y * y, 0.0, 0.0, 0.0, y, x, 1.0;
  return c;
}

Vec2 flow_at(const ImagePoint& p, const MotionParams& motion, double inv_depth) {
  return inv_depth * (matrix_A(p) * motion.t) + matrix_B(p) * motion.w;
}

double normal_flow_at(const ImagePoint& p, const Vec2& n0,
                      const MotionParams& motion, double inv_depth) {
  return flow_at(p, motion, inv_depth).dot(n0);
}

double derotate(const NormalFlowSample& sample, const Vec3& w) {
  return sample.n - (matrix_B(sample.point) * w).dot(sample.n0);
}

std::vector<double> derotate(std::span<const NormalFlowSample> samples,
                             const Vec3& w) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(derotate(s, w));
  return out;
}

Eigen::Matrix<double, 1, 8> constraint_row(const ImagePoint& p, const Vec2& n0) {
  return n0.transpose() * matrix_C(p);
}

PlaneParams assemble_a(const MotionParams& motion, const Plane& plane) {
  const double tx = motion.t.x(), ty = motion.t.y(), tz = motion.t.z();
  const double wx = motion.w.x(), wy = motion.w.y(), wz = motion.w.z();
  const double al = plane.alpha, be = plane.beta, ga = plane.gamma, d = plane.d;

  // Coefficients of d * u(x) collected against the columns of C(x).
  PlaneParams a;
  a << -d * wy + tz * al,
        d * wx + tz * be,
        tz * ga - tx * al,
        d * wz - tx * be,
       -d * wy - tx * ga,
        tz * ga - ty * be,
       -d * wz - ty * al,
        d * wx - ty * ga;
  return a / d;
}

}  // namespace nfseg::geometry
