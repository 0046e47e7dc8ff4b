#include "nfseg/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nfseg {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<int> lexicographic_order(const FeatureMatrix& f) {
  std::vector<int> order(static_cast<std::size_t>(f.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      if (f(a, c) < f(b, c)) return true;
      if (f(a, c) > f(b, c)) return false;
    }
    return false;
  });
  return order;
}

FeatureMatrix seed_plus_plus(const FeatureMatrix& f, int k, std::mt19937_64& rng) {
  const Eigen::Index n = f.rows();
  FeatureMatrix centroids(k, f.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

  Eigen::Index first = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centroids.row(0) = f.row(first);

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (f.row(i) - centroids.row(c - 1)).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min<Eigen::Index>(static_cast<Eigen::Index>(uniform01(rng) * n), n - 1);
    }
    centroids.row(c) = f.row(pick);
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& input, const KMeansOptions& options) {
  if (options.k < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (input.rows() == 0) throw std::invalid_argument("kmeans: no samples");

  const auto order = lexicographic_order(input);
  FeatureMatrix f(input.rows(), input.cols());
  for (std::size_t i = 0; i < order.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = input.row(order[i]);

  const Eigen::Index n = f.rows();
  const int k = options.k;
  std::mt19937_64 rng(options.seed);

  KMeansResult result;
  result.centroids = seed_plus_plus(f, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), 0);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (f.row(i) - result.centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      labels[i] = best;
      objective += best_d;
    }
    result.objective.push_back(objective);
    result.iterations = iter + 1;

    FeatureMatrix sums = FeatureMatrix::Zero(k, f.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += f.row(i);
      ++counts[labels[i]];
    }
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const Eigen::RowVectorXd updated = sums.row(c) / static_cast<double>(counts[c]);
      movement = std::max(movement, (updated - result.centroids.row(c)).norm());
      result.centroids.row(c) = updated;
    }
    if (movement < options.tol) break;
  }

  result.labels.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < order.size(); ++i) result.labels[order[i]] = labels[i];
  return result;
}

}  // namespace nfseg
