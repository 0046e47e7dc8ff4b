#include "nfseg/merging.hpp"

#include "nfseg/geometry.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <limits>

namespace nfseg {

void TranslationSystem::add(const NormalFlowSample& sample, double derotated, double lambda) {
  const Mat23 a = geometry::matrix_A(sample.point);
  lhs.noalias() += a.transpose() * a;
  lhs.diagonal().array() += lambda;
  rhs.noalias() += a.transpose() * (derotated * sample.n0);
  ++count;
}

TranslationSystem& TranslationSystem::operator+=(const TranslationSystem& other) {
  lhs += other.lhs;
  rhs += other.rhs;
  count += other.count;
  return *this;
}

Vec3 TranslationSystem::solve() const {
  if (count == 0) return Vec3::Zero();
  return lhs.ldlt().solve(rhs);
}

Vec3 fit_cluster_translation(std::span<const NormalFlowSample> samples, const Vec3& w,
                             double lambda) {
  TranslationSystem sys;
  for (const auto& s : samples) sys.add(s, geometry::derotate(s, w), lambda);
  return sys.solve();
}

SegmentCandidate make_candidate(std::vector<int> event_indices, const MergeContext& ctx) {
  SegmentCandidate c;
  std::sort(event_indices.begin(), event_indices.end());
  double residual_sum = 0.0;
  for (int i : event_indices) {
    c.system.add(ctx.samples[i], ctx.derotated[i], ctx.lambda);
    c.bbox.extend(ctx.pixels[i].x(), ctx.pixels[i].y());
    if (!ctx.residuals.empty()) residual_sum += ctx.residuals[i];
  }
  c.t = c.system.solve();
  c.mean_residual = event_indices.empty() ? 0.0 : residual_sum / static_cast<double>(event_indices.size());
  c.event_indices = std::move(event_indices);
  return c;
}

double similarity(const SegmentCandidate& a, const SegmentCandidate& b, double lambda_r,
                  double bg_penalty) {
  const double denom = a.t.squaredNorm() + b.t.squaredNorm();
  const double motion = denom > 0.0 ? -(a.t - b.t).squaredNorm() / denom : 0.0;
  const double dr = a.mean_residual - b.mean_residual;
  double score = motion - lambda_r * dr * dr;
  if (a.is_bg_like != b.is_bg_like) score -= bg_penalty;
  return score;
}

namespace {

SegmentCandidate merge_pair(const SegmentCandidate& a, const SegmentCandidate& b) {
  SegmentCandidate m;
  m.event_indices.reserve(a.event_indices.size() + b.event_indices.size());
  std::merge(a.event_indices.begin(), a.event_indices.end(), b.event_indices.begin(),
             b.event_indices.end(), std::back_inserter(m.event_indices));
  m.system = a.system;
  m.system += b.system;
  m.t = m.system.solve();
  const double na = static_cast<double>(a.event_indices.size());
  const double nb = static_cast<double>(b.event_indices.size());
  m.mean_residual = na + nb > 0.0 ? (na * a.mean_residual + nb * b.mean_residual) / (na + nb) : 0.0;
  m.bbox = a.bbox;
  m.bbox.extend(b.bbox);
  m.is_bg_like = a.is_bg_like || b.is_bg_like;
  return m;
}

}  // namespace

std::vector<SegmentCandidate> hierarchical_merge(std::vector<SegmentCandidate> candidates,
                                                 const MergeOptions& options) {
  while (candidates.size() >= 2) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (std::size_t j = i + 1; j < candidates.size(); ++j) {
        if (!candidates[i].bbox.overlaps(candidates[j].bbox, options.bbox_dilation)) continue;
        const double s = similarity(candidates[i], candidates[j], options.lambda_r, options.bg_penalty);
        if (s > options.threshold && (!found || s > best)) {
          best = s;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) break;
    candidates[bi] = merge_pair(candidates[bi], candidates[bj]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return candidates;
}

}  // namespace nfseg
