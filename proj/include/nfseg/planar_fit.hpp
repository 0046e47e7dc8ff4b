#pragma once

#include "nfseg/types.hpp"

#include <span>

namespace nfseg {

struct PlaneFitResult {
  PlaneParams a = PlaneParams::Zero();
  std::vector<double> residuals;  // observed minus predicted normal flow
  double condition_estimate = 0.0;
};

/// Least-squares fit of the 8-parameter planar flow model to all samples.
/// Throws DegenerateSystem when the normal matrix is rank deficient.
PlaneFitResult fit_plane(std::span<const NormalFlowSample> samples);

std::vector<double> predict_normal_flow(const PlaneParams& a,
                                        std::span<const NormalFlowSample> samples);

}  // namespace nfseg
