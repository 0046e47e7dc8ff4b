#pragma once

#include "nfseg/background.hpp"
#include "nfseg/types.hpp"

#include <Eigen/Core>

#include <span>

namespace nfseg {

/// Normal equations of the per-cluster Tikhonov translation fit. Additive over
/// events, so merged clusters combine by summation.
struct TranslationSystem {
  Eigen::Matrix3d lhs = Eigen::Matrix3d::Zero();
  Vec3 rhs = Vec3::Zero();
  std::size_t count = 0;

  void add(const NormalFlowSample& sample, double derotated, double lambda);
  TranslationSystem& operator+=(const TranslationSystem& other);
  Vec3 solve() const;
};

/// Solves sum_i (A_i^T A_i + lambda I) t = sum_i A_i^T (n_derot_i n0_i) at unit depth.
Vec3 fit_cluster_translation(std::span<const NormalFlowSample> samples, const Vec3& w,
                             double lambda = 1e-6);

struct SegmentCandidate {
  std::vector<int> event_indices;  // sorted
  Vec3 t = Vec3::Zero();
  double mean_residual = 0.0;
  BBox bbox;
  bool is_bg_like = false;
  TranslationSystem system;
};

struct MergeOptions {
  double threshold = -0.8;
  double lambda_r = 0.5;
  double bg_penalty = 1.0;
  double bbox_dilation = 2.0;
  double bg_like_threshold = 0.5;
};

/// Per-event inputs shared by all candidates of one slice.
struct MergeContext {
  std::span<const NormalFlowSample> samples;
  std::span<const double> derotated;
  std::span<const double> residuals;  // per-event residual magnitudes
  std::span<const Vec2> pixels;
  double lambda = 1e-6;
};

SegmentCandidate make_candidate(std::vector<int> event_indices, const MergeContext& ctx);

/// -|ti - tj|^2 / (|ti|^2 + |tj|^2) - lambda_r (ri - rj)^2, minus bg_penalty
/// when exactly one of the two is background-like. The motion term is 0 when
/// both translations are zero.
double similarity(const SegmentCandidate& a, const SegmentCandidate& b, double lambda_r,
                  double bg_penalty = 1.0);

/// Greedy agglomeration of bbox-connected candidates. Each round merges the
/// pair with the highest similarity above the threshold (ties: lowest (i, j)).
/// The merged candidate is background-like if either part was.
std::vector<SegmentCandidate> hierarchical_merge(std::vector<SegmentCandidate> candidates,
                                                 const MergeOptions& options);

}  // namespace nfseg
