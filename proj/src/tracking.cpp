#include "nfseg/tracking.hpp"

#include <Eigen/LU>

#include <Eigen/Cholesky>

#include <algorithm>
#include <tuple>

namespace nfseg {

namespace {

using Mat24 = Eigen::Matrix<double, 2, 4>;

Mat24 measurement_matrix() {
  Mat24 h = Mat24::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

}  // namespace

Track predict(const Track& track, double dt, double process_noise) {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  Eigen::Vector4d q_diag(dt * dt, dt * dt, dt, dt);

  Track out = track;
  out.state = f * track.state;
  out.covariance = f * track.covariance * f.transpose();
  out.covariance.diagonal() += process_noise * q_diag;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

Track update(const Track& track, const Vec2& measured, double measurement_noise) {
  const Mat24 h = measurement_matrix();
  const Eigen::Matrix2d r = measurement_noise * Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d s = h * track.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 4, 2> k = track.covariance * h.transpose() * s.inverse();

  Track out = track;
  out.state = track.state + k * (measured - h * track.state);
  const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - k * h;
  out.covariance = ikh * track.covariance * ikh.transpose() + k * r * k.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.misses = 0;
  return out;
}

Association associate(std::span<const Track> tracks, std::span<const Vec2> centroids,
                      const TrackerOptions& options) {
  const Mat24 h = measurement_matrix();
  const Eigen::Matrix2d r = options.measurement_noise * Eigen::Matrix2d::Identity();

  std::vector<std::tuple<double, int, int>> pairs;
  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    const Eigen::Matrix2d s_inv = (h * tracks[ti].covariance * h.transpose() + r).inverse();
    for (std::size_t si = 0; si < centroids.size(); ++si) {
      const Vec2 innovation = centroids[si] - tracks[ti].position();
      if (innovation.norm() > options.gate) continue;
      const double mahalanobis = innovation.dot(s_inv * innovation);
      pairs.emplace_back(mahalanobis, static_cast<int>(ti), static_cast<int>(si));
    }
  }
  std::sort(pairs.begin(), pairs.end());

  Association out;
  std::vector<char> track_used(tracks.size(), 0), seg_used(centroids.size(), 0);
  for (const auto& [d, ti, si] : pairs) {
    if (track_used[ti] || seg_used[si]) continue;
    track_used[ti] = seg_used[si] = 1;
    out.matches.emplace_back(ti, si);
  }
  for (const auto& [d, ti, si] : pairs) {
    if (!track_used[ti] || seg_used[si]) continue;
    seg_used[si] = 1;
    out.attachments.emplace_back(ti, si);
  }
  for (std::size_t si = 0; si < centroids.size(); ++si) {
    if (!seg_used[si]) out.births.push_back(static_cast<int>(si));
  }
  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    if (!track_used[ti] && tracks[ti].misses + 1 > options.max_misses) {
      out.deaths.push_back(static_cast<int>(ti));
    }
  }
  return out;
}

std::vector<int> Tracker::step(double dt, std::span<const Vec2> centroids, std::span<const double> weights) {
  for (auto& t : tracks_) t = predict(t, dt, options_.process_noise);
  // Two tracks predicted within the gate of each other follow one object;
  // the older one (lower ID) keeps it.
  std::vector<Track> distinct;
  for (const auto& t : tracks_) {
    const bool duplicate = std::any_of(distinct.begin(), distinct.end(), [&](const Track& kept) {
      return (kept.position() - t.position()).norm() <= options_.gate;
    });
    if (!duplicate) distinct.push_back(t);
  }
  tracks_ = std::move(distinct);
  const Association assoc = associate(tracks_, centroids, options_);
  auto weight = [&](int si) { return weights.empty() ? 1.0 : weights[si]; };

  std::vector<int> ids(centroids.size(), 0);
  std::vector<Vec2> sum(tracks_.size(), Vec2::Zero());
  std::vector<double> total(tracks_.size(), 0.0);
  std::vector<char> matched(tracks_.size(), 0);
  for (const auto& pairs : {assoc.matches, assoc.attachments}) {
    for (const auto& [ti, si] : pairs) {
      sum[ti] += weight(si) * centroids[si];
      total[ti] += weight(si);
      matched[ti] = 1;
      ids[si] = tracks_[ti].id;
    }
  }
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    if (!matched[ti]) continue;
    tracks_[ti] = update(tracks_[ti], sum[ti] / total[ti], options_.measurement_noise);
    ++tracks_[ti].age;
  }
  std::vector<char> dead(tracks_.size(), 0);
  for (int ti : assoc.deaths) dead[ti] = 1;

  std::vector<Track> survivors;
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    if (dead[ti]) continue;
    Track t = tracks_[ti];
    if (!matched[ti]) {
      ++t.misses;
      ++t.age;
    }
    survivors.push_back(t);
  }
  for (int si : assoc.births) {
    Track t;
    t.id = next_id_++;
    t.state << centroids[si].x(), centroids[si].y(), 0.0, 0.0;
    t.covariance = Eigen::Matrix4d::Zero();
    t.covariance(0, 0) = t.covariance(1, 1) = options_.measurement_noise;
    t.covariance(2, 2) = t.covariance(3, 3) = options_.initial_velocity_var;
    survivors.push_back(t);
    ids[si] = t.id;
  }
  tracks_ = std::move(survivors);
  return ids;
}

}  // namespace nfseg
