#pragma once

#include "nfseg/background.hpp"
#include "nfseg/merging.hpp"
#include "nfseg/tracking.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace nfseg {

/// Every tunable of the engine. Loaded from a `key = value` text file; see
/// README for the key list. Unset keys keep the defaults below.
struct Config {
  std::uint64_t seed = 42;
  double slice_duration = 0.025;  // s
  int init_frames = 2;

  // over-segmentation
  int k = 30;
  double lambda = 0.5;
  double flow_feature_scale = 0.0;  // 0: use mean focal length (px/s)
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-6;

  // residual smoothing
  double smoothing_sigma = 3.0;  // px

  // background
  double warp_depth = 1.0;  // m
  double match_radius = 2.0;  // px
  double match_fraction = 0.5;
  double alpha_min = 0.05;
  double alpha_max = 0.5;
  // A matched cluster leaves the background when more than reject_fraction
  // of its events deviate from the translation estimate by over reject_sigmas
  // robust noise sigmas. 1 disables.
  double reject_fraction = 0.5;
  double reject_sigmas = 3.0;
  SvmOptions svm;

  // merging
  MergeOptions merge;
  double tikhonov = 1e-6;
  std::size_t min_segment_events = 0;  // 0: 1% of the slice
  // Segments the egomotion explains at one positive inverse depth, to this
  // relative misfit, are background. 0 disables.
  double egomotion_misfit = 0.1;

  // tracking
  TrackerOptions tracker;
};

/// Parses `key = value` lines; `#` starts a comment. Throws std::runtime_error
/// naming the line on unknown keys or malformed values.
Config parse_config(std::istream& in);
Config load_config(const std::string& path);

/// Writes every key with its current value, one per line.
void write_config(std::ostream& out, const Config& config);

}  // namespace nfseg
