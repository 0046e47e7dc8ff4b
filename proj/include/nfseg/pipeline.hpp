#pragma once

#include "nfseg/background.hpp"
#include "nfseg/config.hpp"
#include "nfseg/recording.hpp"
#include "nfseg/tracking.hpp"

#include <optional>
#include <string>

namespace nfseg {

struct SegmentMotion {
  int id = 0;  // 0 is background
  MotionParams motion;
  std::size_t event_count = 0;
  Vec2 centroid_px = Vec2::Zero();
  BBox bbox;
};

/// Everything carried from one step to the next.
struct PipelineState {
  BackgroundState background;
  bool has_background = false;
  Tracker tracker;
  int step_index = 0;
  double last_t_start = 0.0;
  std::vector<SegmentMotion> segments;
};

struct StepInput {
  const Slice& slice;
  const Intrinsics& intrinsics;
  std::optional<PipelineState> prev;
};

struct StepOutput {
  std::vector<int> labels;  // per event; 0 background, otherwise a track ID
  std::vector<SegmentMotion> segments;
  MotionParams egomotion;  // translation at unit depth, rotation from the IMU
  Vec3 translation_direction = Vec3::Zero();
  bool translation_valid = false;
  bool reinitialized = false;
  std::vector<std::string> notes;
  PipelineState next;
};

/// One recursive step: over-segmentation, planar-residual segregation,
/// temporal background matching with translation estimation, hierarchical
/// merging and tracking. Throws EmptySlice for a slice without events.
StepOutput step(const StepInput& input, const Config& config);

struct RunStep {
  StepOutput output;
  std::string error;  // non-empty when the step failed
};

/// Threads state through all slices. Failed steps are recorded and skipped.
std::vector<RunStep> run(const Recording& recording, const Config& config);

}  // namespace nfseg
