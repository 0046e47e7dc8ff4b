#pragma once

#include "nfseg/pipeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace nfseg {

/// What `run` persists for one slice.
struct OutputStep {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::string error;
  bool reinitialized = false;
  bool translation_valid = false;
  MotionParams egomotion;
  Vec3 translation_direction = Vec3::Zero();
  std::vector<int> labels;
  std::vector<SegmentMotion> segments;
};

struct RunOutputs {
  std::uint64_t seed = 0;
  std::vector<OutputStep> steps;
};

RunOutputs collect_outputs(const Recording& recording, const std::vector<RunStep>& steps, std::uint64_t seed);

/// JSON with a fixed key order; identical inputs give identical bytes.
void write_outputs(std::ostream& out, const RunOutputs& outputs);
RunOutputs read_outputs(std::istream& in);
void save_outputs(const std::string& path, const RunOutputs& outputs);
RunOutputs load_outputs(const std::string& path);

}  // namespace nfseg
