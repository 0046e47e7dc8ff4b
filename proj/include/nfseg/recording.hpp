#pragma once

#include "nfseg/se3.hpp"
#include "nfseg/types.hpp"

#include <iosfwd>
#include <string>

namespace nfseg {

/// Events of one time window with their normal flow and the IMU rotation rate.
struct Slice {
  double t_start = 0.0;
  double t_end = 0.0;
  Vec3 imu_w = Vec3::Zero();
  std::vector<Event> events;
  std::vector<double> n;    // normal-flow magnitude, calibrated units / s
  std::vector<Vec2> n0;     // unit normal-flow direction
  std::vector<int> labels;  // ground truth: 0 background, i > 0 object i; empty if absent

  std::size_t size() const { return events.size(); }
  double duration() const { return t_end - t_start; }
};

struct Recording {
  Intrinsics intrinsics;
  std::vector<Slice> slices;
  int num_objects = 0;
  // Ground-truth poses at slice boundaries: slices.size() + 1 entries each.
  std::vector<se3::Pose> camera_poses;               // T_wc
  std::vector<std::vector<se3::Pose>> object_poses;  // [boundary][object] T_wo

  bool has_labels() const;
};

inline constexpr std::uint32_t kRecordingVersion = 1;

/// Binary container, layout in docs/FORMAT.md. Throws FormatError for corrupt
/// or truncated input and VersionError for an unknown schema version.
Recording read_recording(std::istream& in);
void write_recording(std::ostream& out, const Recording& recording);

Recording load_recording(const std::string& path);
void save_recording(const std::string& path, const Recording& recording);

/// Structural checks shared by the loader and the writer.
void validate(const Recording& recording);

/// Calibrated normal-flow samples of one slice.
std::vector<NormalFlowSample> samples_of(const Slice& slice, const Intrinsics& intrinsics);

}  // namespace nfseg
