#include "nfseg/pipeline.hpp"

#include "nfseg/clustering.hpp"
#include "nfseg/geometry.hpp"
#include "nfseg/merging.hpp"
#include "nfseg/planar_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace nfseg {

namespace {

std::vector<int> clusters_with_majority(const ClusterSet& clusters, const std::vector<char>& is_bg) {
  std::vector<std::size_t> bg(static_cast<std::size_t>(clusters.k), 0), total(bg.size(), 0);
  for (std::size_t i = 0; i < clusters.labels.size(); ++i) {
    ++total[clusters.labels[i]];
    if (is_bg[i]) ++bg[clusters.labels[i]];
  }
  std::vector<int> out;
  for (int c = 0; c < clusters.k; ++c) {
    if (total[c] > 0 && 2 * bg[c] > total[c]) out.push_back(c);
  }
  return out;
}

std::vector<int> events_of(const ClusterSet& clusters, const std::vector<int>& cluster_ids) {
  std::vector<char> chosen(static_cast<std::size_t>(clusters.k), 0);
  for (int c : cluster_ids) chosen[c] = 1;
  std::vector<int> out;
  for (std::size_t i = 0; i < clusters.labels.size(); ++i) {
    if (chosen[clusters.labels[i]]) out.push_back(static_cast<int>(i));
  }
  return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> values, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(values[i]);
  return out;
}

std::vector<Vec2> to_pixels(const std::vector<ImagePoint>& pts, const Intrinsics& k) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(k.to_pixel(p));
  return out;
}

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Relative misfit of the segment's derotated normal flow against the flow
// the translation direction t predicts at one inverse depth rho, fitted by
// least squares. Returns infinity when rho is not positive.
double egomotion_misfit(std::span<const NormalFlowSample> samples, std::span<const double> derotated,
                        const std::vector<int>& idx, const Vec3& t) {
  double gg = 0.0, gd = 0.0, dd = 0.0;
  for (int i : idx) {
    const double g = (geometry::matrix_A(samples[i].point) * t).dot(samples[i].n0);
    gg += g * g;
    gd += g * derotated[i];
    dd += derotated[i] * derotated[i];
  }
  if (gg <= 0.0 || dd <= 0.0 || gd <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(std::max(0.0, dd - gd * gd / gg) / dd);
}

// Inverse depth rho minimizing sum |derotated - rho * g| g-weighted: the
// median of derotated / g under weights |g|.
double weighted_median_ratio(const std::vector<int>& idx, std::span<const double> derotated,
                             const std::vector<double>& g) {
  std::vector<std::pair<double, double>> ratios;
  double total = 0.0;
  for (std::size_t e = 0; e < idx.size(); ++e) {
    const double weight = std::abs(g[e]);
    if (weight <= 0.0) continue;
    ratios.push_back({derotated[idx[e]] / g[e], weight});
    total += weight;
  }
  if (ratios.empty()) return 0.0;
  std::sort(ratios.begin(), ratios.end());
  double acc = 0.0;
  for (const auto& [ratio, weight] : ratios) {
    acc += weight;
    if (acc >= 0.5 * total) return ratio;
  }
  return ratios.back().first;
}

}  // namespace

StepOutput step(const StepInput& input, const Config& config) {
  const Slice& slice = input.slice;
  const Intrinsics& K = input.intrinsics;
  const std::size_t n = slice.size();
  if (n == 0) throw EmptySlice();

  const bool has_prev = input.prev.has_value();
  PipelineState fresh;
  fresh.tracker = Tracker(config.tracker);
  const PipelineState& prev = has_prev ? *input.prev : fresh;
  const Vec3 w = slice.imu_w;
  const double dt = has_prev && slice.t_start > prev.last_t_start ? slice.t_start - prev.last_t_start
                                                                  : std::max(slice.duration(), 1e-6);

  StepOutput out;
  const auto samples = samples_of(slice, K);
  std::vector<Vec2> pixels(n);
  for (std::size_t i = 0; i < n; ++i) pixels[i] = Vec2(slice.events[i].x, slice.events[i].y);
  const auto derotated = geometry::derotate(samples, w);

  // Stage 1: over-segmentation on position and normal flow.
  const double flow_scale = config.flow_feature_scale > 0.0 ? config.flow_feature_scale : K.mean_focal();
  std::vector<Vec2> flow_features(n);
  for (std::size_t i = 0; i < n; ++i) flow_features[i] = flow_scale * samples[i].vector();
  const int k = std::max(2, std::min<int>(config.k, static_cast<int>(n)));
  const ClusterSet clusters = over_segment(pixels, flow_features, k, config.lambda, config.seed,
                                             config.kmeans_max_iter, config.kmeans_tol);

  // Stage 2: planar-scene fit, smoothed residuals and two-means segregation.
  std::vector<double> plane_residuals;
  try {
    plane_residuals = fit_plane(samples).residuals;
  } catch (const DegenerateSystem& e) {
    out.reinitialized = true;
    out.notes.push_back(std::string("plane fit: ") + e.what());
    plane_residuals = derotated;
  }
  const auto smoothed = smooth_residuals(pixels, plane_residuals, config.smoothing_sigma, K.width, K.height);
  const auto segregation = segregate_by_residual(smoothed.per_event);
  std::vector<char> residual_bg(n, 0);
  for (int i : segregation.background) residual_bg[i] = 1;
  const auto residual_bg_clusters = clusters_with_majority(clusters, residual_bg);

  // Stage 3: temporal background matching and translation estimate.
  const bool initializing = !has_prev || !prev.has_background || prev.step_index < config.init_frames;
  std::vector<int> bg_clusters;
  if (initializing) {
    bg_clusters = residual_bg_clusters;
  } else {
    const auto warped = to_pixels(warp_background(prev.background, dt, config.warp_depth), K);
    bg_clusters = match_clusters(warped, pixels, clusters, config.match_radius, config.match_fraction);
    if (bg_clusters.empty()) {
      out.reinitialized = true;
      out.notes.push_back("no cluster matched the warped background");
      bg_clusters = residual_bg_clusters;
    }
  }

  std::optional<TranslationEstimate> coarse;
  auto try_svm = [&](const std::vector<int>& events) -> std::optional<TranslationEstimate> {
    try {
      return estimate_translation_svm(gather<NormalFlowSample>(samples, events), w, config.svm);
    } catch (const InsufficientSupport& e) {
      out.notes.push_back(std::string("translation: ") + e.what());
      return std::nullopt;
    }
  };
  coarse = try_svm(events_of(clusters, bg_clusters));
  if (!coarse && bg_clusters != residual_bg_clusters) {
    out.reinitialized = true;
    bg_clusters = residual_bg_clusters;
    coarse = try_svm(events_of(clusters, bg_clusters));
  }

  if (coarse && !initializing) {
    // Re-warp with the fresh estimate to pick up background clusters the
    // previous motion missed.
    BackgroundState rewarp = prev.background;
    rewarp.motion = MotionParams{coarse->translation(), w};
    const auto warped = to_pixels(warp_background(rewarp, dt, config.warp_depth), K);
    auto extra = match_clusters(warped, pixels, clusters, config.match_radius, config.match_fraction);
    bg_clusters = sorted_union(bg_clusters, extra);
  }

  // Position alone cannot tell an object emerging over old background from
  // the background itself, so matched clusters whose events the translation
  // estimate mostly cannot explain are dropped.
  if (coarse && config.reject_fraction < 1.0 && bg_clusters.size() > 1) {
    const auto mem = clusters.members();
    const Vec3 t = coarse->translation();
    std::vector<std::vector<double>> residual(bg_clusters.size());
    std::vector<double> all;
    for (std::size_t j = 0; j < bg_clusters.size(); ++j) {
      const auto& idx = mem[bg_clusters[j]];
      std::vector<double> g(idx.size());
      for (std::size_t e = 0; e < idx.size(); ++e) {
        g[e] = (geometry::matrix_A(samples[idx[e]].point) * t).dot(samples[idx[e]].n0);
      }
      const double rho = weighted_median_ratio(idx, derotated, g);
      for (std::size_t e = 0; e < idx.size(); ++e) {
        residual[j].push_back(std::abs(derotated[idx[e]] - rho * g[e]));
      }
      all.insert(all.end(), residual[j].begin(), residual[j].end());
    }
    std::nth_element(all.begin(), all.begin() + all.size() / 2, all.end());
    const double tol = config.reject_sigmas * 1.4826 * all[all.size() / 2];
    std::vector<int> kept;
    for (std::size_t j = 0; j < bg_clusters.size(); ++j) {
      const auto bad = std::count_if(residual[j].begin(), residual[j].end(), [&](double r) { return r > tol; });
      if (static_cast<double>(bad) <= config.reject_fraction * static_cast<double>(residual[j].size())) {
        kept.push_back(bg_clusters[j]);
      }
    }
    if (!kept.empty() && kept.size() < bg_clusters.size()) {
      if (auto refit = try_svm(events_of(clusters, kept))) {
        bg_clusters = std::move(kept);
        coarse = refit;
      }
    }
  }

  std::vector<double> residual_mag(n);
  if (coarse) {
    const auto r_new = translation_residuals(samples, MotionParams{coarse->translation(), w});
    for (std::size_t i = 0; i < n; ++i) residual_mag[i] = std::abs(r_new[i]);
  } else {
    out.reinitialized = true;
    for (std::size_t i = 0; i < n; ++i) residual_mag[i] = std::abs(plane_residuals[i]);
  }

  // Stage 4: per-cluster translations and hierarchical merging.
  MergeContext ctx{samples, derotated, residual_mag, pixels, config.tikhonov};
  const bool have_map = has_prev && prev.background.map.has_evidence();
  const BackgroundMap* map = have_map ? &prev.background.map : nullptr;

  std::vector<SegmentCandidate> candidates;
  std::vector<char> in_bg(static_cast<std::size_t>(clusters.k), 0);
  for (int c : bg_clusters) in_bg[c] = 1;
  const auto members = clusters.members();
  std::vector<int> bg_events = events_of(clusters, bg_clusters);
  if (!bg_events.empty()) {
    candidates.push_back(make_candidate(bg_events, ctx));
    candidates.back().is_bg_like = map != nullptr;
  }
  for (int c = 0; c < clusters.k; ++c) {
    if (in_bg[c] || members[c].empty()) continue;
    auto cand = make_candidate(members[c], ctx);
    if (map != nullptr) {
      // Compared within the cluster's own box: a global comparison would
      // rate every small cluster as dissimilar.
      cand.is_bg_like = background_similarity(*map, gather<Vec2>(pixels, cand.event_indices), cand.bbox) >
                        config.merge.bg_like_threshold;
    }
    candidates.push_back(std::move(cand));
  }
  auto merged = hierarchical_merge(std::move(candidates), config.merge);

  // The segment holding the temporally matched background is background;
  // without one, the largest segment is.
  std::size_t bg_index = 0;
  if (!bg_events.empty()) {
    for (std::size_t s = 0; s < merged.size(); ++s) {
      if (std::binary_search(merged[s].event_indices.begin(), merged[s].event_indices.end(), bg_events.front())) {
        bg_index = s;
        break;
      }
    }
  } else {
    for (std::size_t s = 1; s < merged.size(); ++s) {
      if (merged[s].event_indices.size() > merged[bg_index].event_indices.size()) bg_index = s;
    }
  }
  const std::size_t min_events =
      config.min_segment_events > 0 ? config.min_segment_events : std::max<std::size_t>(1, n / 100);

  std::vector<int> final_bg = merged[bg_index].event_indices;
  std::vector<const SegmentCandidate*> foreground;
  for (std::size_t s = 0; s < merged.size(); ++s) {
    if (s == bg_index) continue;
    const bool explained = coarse && config.egomotion_misfit > 0.0 &&
                           egomotion_misfit(samples, derotated, merged[s].event_indices, coarse->translation()) <
                               config.egomotion_misfit;
    if (merged[s].event_indices.size() < min_events || explained) {
      final_bg = sorted_union(final_bg, merged[s].event_indices);
    } else {
      foreground.push_back(&merged[s]);
    }
  }

  // Tracking assigns persistent IDs to foreground segments; pieces given the
  // same ID become one segment.
  std::vector<Vec2> centroids;
  std::vector<double> weights;
  for (const auto* seg : foreground) {
    Vec2 c = Vec2::Zero();
    for (int i : seg->event_indices) c += pixels[i];
    centroids.push_back(c / static_cast<double>(seg->event_indices.size()));
    weights.push_back(static_cast<double>(seg->event_indices.size()));
  }
  out.next = prev;
  const auto ids = out.next.tracker.step(dt, centroids, weights);

  out.labels.assign(n, 0);
  std::map<int, SegmentCandidate> by_id;
  for (std::size_t f = 0; f < foreground.size(); ++f) {
    for (int i : foreground[f]->event_indices) out.labels[i] = ids[f];
    auto& joined = by_id[ids[f]];
    joined.event_indices.insert(joined.event_indices.end(), foreground[f]->event_indices.begin(),
                                foreground[f]->event_indices.end());
    joined.system += foreground[f]->system;
    joined.bbox.extend(foreground[f]->bbox);
  }

  // Refined background motion for the next step.
  auto refined = try_svm(final_bg);
  if (!refined) refined = coarse;
  out.translation_valid = refined.has_value();
  out.egomotion.w = w;
  if (refined) {
    out.egomotion.t = refined->translation();
    out.translation_direction = refined->direction;
  }

  SegmentMotion bg_seg;
  bg_seg.id = 0;
  bg_seg.motion = out.egomotion;
  bg_seg.event_count = final_bg.size();
  Vec2 bg_centroid = Vec2::Zero();
  for (int i : final_bg) {
    bg_centroid += pixels[i];
    bg_seg.bbox.extend(pixels[i].x(), pixels[i].y());
  }
  if (!final_bg.empty()) bg_seg.centroid_px = bg_centroid / static_cast<double>(final_bg.size());
  out.segments.push_back(bg_seg);
  for (const auto& [id, seg] : by_id) {
    SegmentMotion sm;
    sm.id = id;
    sm.motion = MotionParams{seg.system.solve(), w};
    sm.event_count = seg.event_indices.size();
    Vec2 c = Vec2::Zero();
    for (int i : seg.event_indices) c += pixels[i];
    sm.centroid_px = c / static_cast<double>(seg.event_indices.size());
    sm.bbox = seg.bbox;
    out.segments.push_back(sm);
  }

  // Persistent background map and state for the next step.
  const auto bg_pixels = gather<Vec2>(pixels, final_bg);
  const BackgroundMap base = has_prev && prev.background.map.width == K.width && prev.background.map.height == K.height
                                 ? prev.background.map
                                 : BackgroundMap::empty(K.width, K.height);
  const double sim = base.has_evidence() ? background_similarity(base, bg_pixels) : 1.0;
  out.next.background.map = update_map(base, bg_pixels, sim, config.alpha_min, config.alpha_max);
  out.next.background.mask.clear();
  for (int i : final_bg) out.next.background.mask.push_back(samples[i].point);
  out.next.background.motion = out.egomotion;
  out.next.has_background = !final_bg.empty();
  out.next.step_index = has_prev ? prev.step_index + 1 : 1;
  out.next.last_t_start = slice.t_start;
  out.next.segments = out.segments;
  return out;
}

std::vector<RunStep> run(const Recording& recording, const Config& config) {
  std::vector<RunStep> out;
  std::optional<PipelineState> state;
  for (const Slice& slice : recording.slices) {
    RunStep rs;
    try {
      rs.output = step(StepInput{slice, recording.intrinsics, state}, config);
      state = rs.output.next;
    } catch (const std::exception& e) {
      rs.error = e.what();
      rs.output.labels.assign(slice.size(), 0);
    }
    out.push_back(std::move(rs));
  }
  return out;
}

}  // namespace nfseg
