#pragma once

#include "nfseg/clustering.hpp"
#include "nfseg/types.hpp"

#include <optional>
#include <span>

namespace nfseg {

/// Persistent occupancy grid of background evidence, values in [0, 1].
struct BackgroundMap {
  int width = 0;
  int height = 0;
  std::vector<double> grid;  // row-major
  double alpha_last = 0.0;

  static BackgroundMap empty(int width, int height);
  bool has_evidence() const;
};

struct BackgroundState {
  std::vector<ImagePoint> mask;  // calibrated coordinates of last step's background events
  MotionParams motion;
  BackgroundMap map;
};

/// Displaces each previous background point by dt * flow under the previous
/// motion, treating the scene as fronto-parallel at `depth` metres.
std::vector<ImagePoint> warp_background(const BackgroundState& prev, double dt,
                                        double depth = 1.0);

/// Indices of clusters whose fraction of events lying within `radius` px of a
/// warped point exceeds `min_fraction`.
std::vector<int> match_clusters(std::span<const Vec2> warped_px,
                                std::span<const Vec2> event_px,
                                const ClusterSet& clusters, double radius,
                                double min_fraction);

struct SvmOptions {
  double c = 1.0;
  int iterations = 500;
  std::size_t min_samples = 50;
  double min_agreement = 0.6;
};

struct TranslationEstimate {
  Vec3 direction = Vec3::Zero();  // unit
  double scale = 0.0;             // least-squares magnitude at unit depth
  double agreement = 0.0;         // fraction of samples with matching sign
  std::vector<double> residuals;  // n - predicted, for the input samples

  Vec3 translation() const { return scale * direction; }
};

/// Homogeneous max-margin separator on s_i * A(x_i)^T n0_i, s_i the sign of
/// the derotated normal flow, followed by a local search that maximizes sign
/// agreement. Throws InsufficientSupport for fewer than `min_samples`
/// informative samples or agreement below `min_agreement`.
TranslationEstimate estimate_translation_svm(std::span<const NormalFlowSample> samples,
                                             const Vec3& w, const SvmOptions& options = {});

/// n - n(x, t, w) at unit depth.
std::vector<double> translation_residuals(std::span<const NormalFlowSample> samples,
                                          const MotionParams& motion);

/// Fraction of samples where sign((A t) . n0) equals sign(n_derot); zero-valued
/// derotated samples are skipped.
double sign_agreement(std::span<const NormalFlowSample> samples, const Vec3& w,
                      const Vec3& direction);

/// grid <- (1 - alpha) grid + alpha * occupancy(current),
/// alpha = alpha_min + (alpha_max - alpha_min) * similarity.
BackgroundMap update_map(const BackgroundMap& map, std::span<const Vec2> current_px,
                         double similarity, double alpha_min = 0.05,
                         double alpha_max = 0.5);

/// Cosine similarity of the map and the candidate occupancy, both pooled into
/// 8x8-pixel blocks. With `region`, only blocks intersecting it are compared.
double background_similarity(const BackgroundMap& map, std::span<const Vec2> candidate_px,
                             const std::optional<BBox>& region = std::nullopt);

}  // namespace nfseg
