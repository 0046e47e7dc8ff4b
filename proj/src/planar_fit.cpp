#include "nfseg/planar_fit.hpp"

#include "nfseg/geometry.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace nfseg {

namespace {

constexpr double kPivotTolerance = 1e-12;

}  // namespace

PlaneFitResult fit_plane(std::span<const NormalFlowSample> samples) {
  if (samples.size() < 8) {
    throw DegenerateSystem("plane fit needs at least 8 samples, got " +
                           std::to_string(samples.size()));
  }

  Eigen::Matrix<double, 8, 8> normal = Eigen::Matrix<double, 8, 8>::Zero();
  Vec8 rhs = Vec8::Zero();
  for (const auto& s : samples) {
    const auto row = geometry::constraint_row(s.point, s.n0);
    normal.noalias() += row.transpose() * row;
    rhs.noalias() += row.transpose() * s.n;
  }

  const double trace = normal.trace();
  if (!(trace > 0.0) || !std::isfinite(trace)) {
    throw DegenerateSystem("plane fit normal matrix has zero trace");
  }

  Eigen::LDLT<Eigen::Matrix<double, 8, 8>> ldlt(normal);
  const auto pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || pivots.minCoeff() <= kPivotTolerance * trace) {
    throw DegenerateSystem("plane fit normal matrix is rank deficient");
  }

  PlaneFitResult result;
  result.a = ldlt.solve(rhs);
  const double rcond = ldlt.rcond();
  result.condition_estimate =
      rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();

  const auto predicted = predict_normal_flow(result.a, samples);
  result.residuals.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    result.residuals[i] = samples[i].n - predicted[i];
  }
  return result;
}

std::vector<double> predict_normal_flow(const PlaneParams& a,
                                        std::span<const NormalFlowSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(geometry::constraint_row(s.point, s.n0).dot(a));
  }
  return out;
}

}  // namespace nfseg
