#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace nfseg {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KMeansOptions {
  int k = 30;
  std::uint64_t seed = 42;
  int max_iter = 100;
  double tol = 1e-6;  // max centroid movement for convergence
};

struct KMeansResult {
  std::vector<int> labels;
  FeatureMatrix centroids;
  std::vector<double> objective;  // sum of squared distances after each assignment
  int iterations = 0;
};

/// Lloyd's k-means with k-means++ seeding.
///
/// Rows are visited in lexicographic feature order, so the resulting partition
/// does not depend on the input row order. Ties go to the lowest centroid index.
/// Empty clusters keep their previous centroid.
KMeansResult kmeans(const FeatureMatrix& features, const KMeansOptions& options);

}  // namespace nfseg
