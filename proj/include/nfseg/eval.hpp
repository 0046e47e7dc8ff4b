#pragma once

#include "nfseg/outputs.hpp"
#include "nfseg/recording.hpp"
#include "nfseg/se3.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace nfseg {

/// Raised when arrays that must line up do not. The message names them.
struct LengthMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Foreground IoU over events. Each predicted segment is credited to the
/// ground-truth object it overlaps most (ties to the lower object id);
/// segments overlapping no object are false positives charged to every
/// object's union. Returns the mean over objects, or nullopt when the frame
/// has no ground-truth object. Throws LengthMismatch.
std::optional<double> iou(std::span<const int> pred, std::span<const int> gt);

/// Twists of T_co(k+1) * T_co(k)^-1 divided by dt, with T_co = T_wc^-1 T_wo.
/// Throws ValidationError on non-rigid input, LengthMismatch on ragged series.
std::vector<se3::Twist> relative_object_motion(std::span<const se3::Pose> object_poses,
                                               std::span<const se3::Pose> camera_poses, double dt);

/// Body velocity of the camera between consecutive poses.
std::vector<se3::Twist> camera_velocity(std::span<const se3::Pose> camera_poses, double dt);

/// Image-plane translation A(x) v at a calibrated point.
Vec2 image_translation(const ImagePoint& x, const Vec3& v);

/// Per-axis root mean square error. Throws LengthMismatch.
Vec3 rmse_velocity(std::span<const Vec3> est, std::span<const Vec3> gt);

struct FrameScore {
  int index = 0;
  std::optional<double> iou;
};

struct VelocitySample {
  int index = 0;
  Vec3 est = Vec3::Zero();
  Vec3 gt = Vec3::Zero();
};

struct ObjectMotionSample {
  int index = 0;
  int object = 0;
  Vec2 est = Vec2::Zero();  // NaN when no segment was credited to the object
  Vec2 gt = Vec2::Zero();
};

struct EvalReport {
  std::vector<FrameScore> frames;
  double mean_iou = 0.0;
  int scored_frames = 0;
  Vec3 velocity_rmse = Vec3::Zero();
  std::vector<VelocitySample> velocity;
  std::vector<ObjectMotionSample> object_motion;

  bool empty() const { return frames.empty(); }
};

struct EvalOptions {
  int first_frame = 0;  // frames before this are listed but not averaged
};

/// Scores a run against the recording's ground truth. Throws LengthMismatch
/// when step or label counts disagree with the recording.
EvalReport evaluate(const Recording& recording, const RunOutputs& outputs, const EvalOptions& options = {});

void write_report(std::ostream& out, const EvalReport& report);
EvalReport read_report(std::istream& in);
void save_report(const std::string& path, const EvalReport& report);
EvalReport load_report(const std::string& path);

/// Human-readable table or CSV of the per-frame scores and summary.
void print_report(std::ostream& out, const EvalReport& report, bool csv);

}  // namespace nfseg
