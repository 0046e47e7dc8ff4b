#pragma once

#include "nfseg/kmeans.hpp"
#include "nfseg/types.hpp"

#include <span>

namespace nfseg {

struct ClusterSet {
  std::vector<int> labels;  // per event, each < k
  int k = 0;
  FeatureMatrix centroids;  // k rows

  std::vector<std::vector<int>> members() const;
};

/// k-means over-segmentation on features [x, y, lambda * flow.x, lambda * flow.y].
/// `pixels` are event positions in pixels and `flow` the normal-flow vectors
/// (n * n0) already expressed in the caller's feature units.
ClusterSet over_segment(std::span<const Vec2> pixels, std::span<const Vec2> flow,
                        int k, double lambda, std::uint64_t seed = 42, int max_iter = 100,
                        double tol = 1e-6);

struct ResidualGrid {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct SmoothedResiduals {
  ResidualGrid grid;
  std::vector<double> per_event;
};

/// Zero-padded convolution with a Gaussian truncated at radius ceil(3 sigma).
/// Applied separably; `values` is row-major width x height.
std::vector<double> gaussian_convolve(std::span<const double> values, int width,
                                      int height, double sigma);

/// Count-normalized Gaussian smoothing of |residual| on the pixel grid.
SmoothedResiduals smooth_residuals(std::span<const Vec2> pixels,
                                   std::span<const double> residuals, double sigma,
                                   int width, int height);

struct Segregation {
  std::vector<int> background;
  std::vector<int> foreground;
};

/// Two-means on scalar residuals; the lower-centered cluster is background.
Segregation segregate_by_residual(std::span<const double> smoothed);

}  // namespace nfseg
