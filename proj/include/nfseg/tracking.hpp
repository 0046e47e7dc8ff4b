#pragma once

#include "nfseg/types.hpp"

#include <Eigen/Core>

#include <span>
#include <utility>

namespace nfseg {

/// Constant-velocity centroid track; state is [cx, cy, vx, vy] in px and px/s.
struct Track {
  int id = 0;
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
  int age = 0;
  int misses = 0;

  Vec2 position() const { return state.head<2>(); }
};

struct TrackerOptions {
  double process_noise = 1.0;        // q, px^2/s^3
  double measurement_noise = 4.0;    // R = r I, px^2
  double gate = 30.0;                // px
  int max_misses = 3;
  double initial_velocity_var = 1e4; // (px/s)^2
};

Track predict(const Track& track, double dt, double process_noise);

/// Kalman correction with a position-only measurement, Joseph-form covariance.
Track update(const Track& track, const Vec2& measured, double measurement_noise);

struct Association {
  std::vector<std::pair<int, int>> matches;      // (track index, segment index)
  std::vector<std::pair<int, int>> attachments;  // extra segments of a matched track
  std::vector<int> births;                       // unmatched segment indices
  std::vector<int> deaths;                   // track indices exceeding max_misses
};

/// Greedy assignment in increasing Mahalanobis distance, restricted to pairs
/// within `gate` px. A segment left over once every track has its match still
/// joins the nearest matched track inside the gate: over-segmentation can
/// leave an object in pieces. Tracks are expected to be predicted already.
Association associate(std::span<const Track> tracks, std::span<const Vec2> centroids,
                      const TrackerOptions& options);

/// Owns the live tracks and hands out IDs. ID 0 is reserved for background;
/// foreground IDs start at 1 and are never reused.
class Tracker {
 public:
  explicit Tracker(TrackerOptions options = {}) : options_(options) {}

  /// Advances all tracks by dt and returns one ID per foreground centroid.
  /// A track predicted within the gate of an older one is dropped first.
  /// Segments sharing an ID update their track with the weighted mean of
  /// their centroids; weights default to 1.
  std::vector<int> step(double dt, std::span<const Vec2> centroids, std::span<const double> weights = {});

  const std::vector<Track>& tracks() const { return tracks_; }
  int next_id() const { return next_id_; }

 private:
  TrackerOptions options_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
};

}  // namespace nfseg
