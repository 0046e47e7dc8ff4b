#include "nfseg/background.hpp"

#include "nfseg/geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace nfseg {

BackgroundMap BackgroundMap::empty(int width, int height) {
  BackgroundMap m;
  m.width = width;
  m.height = height;
  m.grid.assign(static_cast<std::size_t>(width) * height, 0.0);
  return m;
}

bool BackgroundMap::has_evidence() const {
  return std::any_of(grid.begin(), grid.end(), [](double v) { return v > 0.0; });
}

std::vector<ImagePoint> warp_background(const BackgroundState& prev, double dt,
                                        double depth) {
  std::vector<ImagePoint> out;
  out.reserve(prev.mask.size());
  const double inv_depth = 1.0 / depth;
  for (const auto& p : prev.mask) out.push_back(p + dt * geometry::flow_at(p, prev.motion, inv_depth));
  return out;
}

namespace {

struct CellHash {
  std::size_t operator()(const std::pair<long, long>& c) const {
    return std::hash<long>()(c.first * 73856093L ^ c.second * 19349663L);
  }
};

// Points bucketed on a square lattice with cell size equal to the query radius.
class PointIndex {
 public:
  PointIndex(std::span<const Vec2> points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(points[i])].push_back(i);
  }

  bool any_within(const Vec2& q, double radius) const {
    const auto [cx, cy] = key(q);
    const double r2 = radius * radius;
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const auto it = buckets_.find({cx + dx, cy + dy});
        if (it == buckets_.end()) continue;
        for (auto idx : it->second) {
          if ((points_[idx] - q).squaredNorm() <= r2) return true;
        }
      }
    }
    return false;
  }

 private:
  std::pair<long, long> key(const Vec2& p) const {
    return {static_cast<long>(std::floor(p.x() / cell_)), static_cast<long>(std::floor(p.y() / cell_))};
  }

  std::span<const Vec2> points_;
  double cell_;
  std::unordered_map<std::pair<long, long>, std::vector<std::size_t>, CellHash> buckets_;
};

}  // namespace

std::vector<int> match_clusters(std::span<const Vec2> warped_px,
                                std::span<const Vec2> event_px,
                                const ClusterSet& clusters, double radius,
                                double min_fraction) {
  std::vector<int> matched;
  if (warped_px.empty() || clusters.k == 0) return matched;
  const PointIndex index(warped_px, std::max(radius, 1e-9));

  std::vector<std::size_t> hits(static_cast<std::size_t>(clusters.k), 0);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(clusters.k), 0);
  for (std::size_t i = 0; i < event_px.size(); ++i) {
    const int c = clusters.labels[i];
    ++sizes[c];
    if (index.any_within(event_px[i], radius)) ++hits[c];
  }
  for (int c = 0; c < clusters.k; ++c) {
    if (sizes[c] == 0) continue;
    const double fraction = static_cast<double>(hits[c]) / static_cast<double>(sizes[c]);
    if (fraction > min_fraction) matched.push_back(c);
  }
  return matched;
}

namespace {

using FeatureRows = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Homogeneous soft-margin SVM,
//   min  lambda/2 |w|^2 + mean_i max(0, 1 - w . f_i),   lambda = 1 / (C N),
// by full-batch subgradient descent with step 1 / (lambda k). Returns the
// iterate with the lowest objective.
Vec3 solve_hinge(const FeatureRows& f, double c, int iterations) {
  const double n = static_cast<double>(f.rows());
  const double lambda = 1.0 / (c * n);
  auto objective = [&](const Vec3& w) {
    const Eigen::VectorXd margin = f * w;
    return 0.5 * lambda * w.squaredNorm() + (1.0 - margin.array()).max(0.0).mean();
  };

  Vec3 w = Vec3::Zero();
  Vec3 best = w;
  double best_obj = objective(w);
  for (int k = 1; k <= iterations; ++k) {
    const Eigen::VectorXd margin = f * w;
    Vec3 grad = lambda * w;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      if (margin[i] < 1.0) grad -= f.row(i).transpose() / n;
    }
    w -= grad / (lambda * k);
    const double obj = objective(w);
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
  }
  return best;
}

std::size_t count_agreeing(const FeatureRows& f, const Vec3& d) {
  return static_cast<std::size_t>(((f * d).array() > 0.0).count());
}

// Coarse-to-fine search on the tangent plane of the sphere. At each scale the
// new center is the mean of all probe directions that attain the maximum
// agreement count, i.e. the middle of the best-agreement cone.
Vec3 refine_agreement(const FeatureRows& f, Vec3 center) {
  constexpr int kHalf = 4;
  constexpr double kDeg = std::numbers::pi / 180.0;
  for (double step_deg : {8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125}) {
    for (int rep = 0; rep < 2; ++rep) {
      const Vec3 helper = std::abs(center.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      const Vec3 u = center.cross(helper).normalized();
      const Vec3 v = center.cross(u);
      std::size_t best = 0;
      Vec3 sum = Vec3::Zero();
      for (int i = -kHalf; i <= kHalf; ++i) {
        for (int j = -kHalf; j <= kHalf; ++j) {
          const Vec3 d = (center + (i * step_deg * kDeg) * u + (j * step_deg * kDeg) * v).normalized();
          const std::size_t agree = count_agreeing(f, d);
          if (agree > best) {
            best = agree;
            sum = d;
          } else if (agree == best) {
            sum += d;
          }
        }
      }
      if (sum.norm() > 0.0) center = sum.normalized();
    }
  }
  return center;
}

}  // namespace

double sign_agreement(std::span<const NormalFlowSample> samples, const Vec3& w,
                      const Vec3& direction) {
  std::size_t informative = 0, agree = 0;
  for (const auto& s : samples) {
    const double nd = geometry::derotate(s, w);
    if (nd == 0.0) continue;
    ++informative;
    const double pred = (geometry::matrix_A(s.point) * direction).dot(s.n0);
    if ((pred > 0.0) == (nd > 0.0) && pred != 0.0) ++agree;
  }
  return informative == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(informative);
}

TranslationEstimate estimate_translation_svm(std::span<const NormalFlowSample> samples,
                                             const Vec3& w, const SvmOptions& options) {
  std::vector<Vec3> rows;
  rows.reserve(samples.size());
  const auto derotated = geometry::derotate(samples, w);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (derotated[i] == 0.0) continue;
    const double sign = derotated[i] > 0.0 ? 1.0 : -1.0;
    rows.push_back(sign * (geometry::matrix_A(samples[i].point).transpose() * samples[i].n0));
  }
  if (rows.size() < options.min_samples) {
    throw InsufficientSupport("translation estimate needs " + std::to_string(options.min_samples) +
                              " informative samples, got " + std::to_string(rows.size()));
  }
  FeatureRows f(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();

  Vec3 init = solve_hinge(f, options.c, options.iterations);
  if (!(init.norm() > 0.0)) init = f.colwise().sum().transpose();
  if (!(init.norm() > 0.0)) throw InsufficientSupport("translation features cancel out");

  TranslationEstimate est;
  est.direction = refine_agreement(f, init.normalized());
  est.agreement = static_cast<double>(count_agreeing(f, est.direction)) / static_cast<double>(f.rows());
  if (est.agreement < options.min_agreement) {
    throw InsufficientSupport("sign agreement " + std::to_string(est.agreement) +
                              " below threshold");
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double g = (geometry::matrix_A(samples[i].point) * est.direction).dot(samples[i].n0);
    num += g * derotated[i];
    den += g * g;
  }
  est.scale = den > 0.0 ? num / den : 0.0;
  est.residuals = translation_residuals(samples, MotionParams{est.translation(), w});
  return est;
}

std::vector<double> translation_residuals(std::span<const NormalFlowSample> samples,
                                          const MotionParams& motion) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.n - geometry::normal_flow_at(s.point, s.n0, motion, 1.0));
  return out;
}

BackgroundMap update_map(const BackgroundMap& map, std::span<const Vec2> current_px,
                         double similarity, double alpha_min, double alpha_max) {
  const double s = std::clamp(similarity, 0.0, 1.0);
  const double alpha = std::clamp(alpha_min + (alpha_max - alpha_min) * s, 0.0, 1.0);

  std::vector<double> occupancy(map.grid.size(), 0.0);
  for (const auto& p : current_px) {
    const int x = static_cast<int>(std::floor(p.x()));
    const int y = static_cast<int>(std::floor(p.y()));
    if (x < 0 || y < 0 || x >= map.width || y >= map.height) continue;
    occupancy[static_cast<std::size_t>(y) * map.width + x] = 1.0;
  }
  BackgroundMap out = map;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    out.grid[i] = std::clamp((1.0 - alpha) * map.grid[i] + alpha * occupancy[i], 0.0, 1.0);
  }
  out.alpha_last = alpha;
  return out;
}

namespace {

constexpr int kBlock = 8;

}  // namespace

double background_similarity(const BackgroundMap& map, std::span<const Vec2> candidate_px,
                             const std::optional<BBox>& region) {
  if (candidate_px.empty() || map.width <= 0 || map.height <= 0) return 0.0;
  const int bw = (map.width + kBlock - 1) / kBlock;
  const int bh = (map.height + kBlock - 1) / kBlock;
  std::vector<double> hist_map(static_cast<std::size_t>(bw) * bh, 0.0);
  std::vector<double> hist_cand(hist_map.size(), 0.0);

  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      hist_map[static_cast<std::size_t>(y / kBlock) * bw + x / kBlock] +=
          map.grid[static_cast<std::size_t>(y) * map.width + x];
    }
  }
  // Candidate occupancy counts each pixel once, matching the map's rasterization.
  std::vector<char> occupied(map.grid.size(), 0);
  for (const auto& p : candidate_px) {
    const int x = static_cast<int>(std::floor(p.x()));
    const int y = static_cast<int>(std::floor(p.y()));
    if (x < 0 || y < 0 || x >= map.width || y >= map.height) continue;
    auto& cell = occupied[static_cast<std::size_t>(y) * map.width + x];
    if (cell) continue;
    cell = 1;
    hist_cand[static_cast<std::size_t>(y / kBlock) * bw + x / kBlock] += 1.0;
  }

  double dot = 0.0, nm = 0.0, nc = 0.0;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      if (region) {
        const double x0 = bx * kBlock, x1 = x0 + kBlock - 1;
        const double y0 = by * kBlock, y1 = y0 + kBlock - 1;
        if (x1 < region->min_x || x0 > region->max_x || y1 < region->min_y || y0 > region->max_y) continue;
      }
      const std::size_t i = static_cast<std::size_t>(by) * bw + bx;
      dot += hist_map[i] * hist_cand[i];
      nm += hist_map[i] * hist_map[i];
      nc += hist_cand[i] * hist_cand[i];
    }
  }
  if (nm <= 0.0 || nc <= 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(nm * nc), 0.0, 1.0);
}

}  // namespace nfseg
