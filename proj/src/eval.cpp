#include "nfseg/eval.hpp"

#include "json_io.hpp"
#include "nfseg/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace nfseg {

using json_io::Json;

namespace {

constexpr int kFalsePositive = -1;

std::string count_message(const std::string& a, std::size_t na, const std::string& b, std::size_t nb) {
  return a + " has " + std::to_string(na) + " entries but " + b + " has " + std::to_string(nb);
}

// Predicted segment label -> credited ground-truth object, or kFalsePositive.
std::map<int, int> credit_segments(std::span<const int> pred, std::span<const int> gt) {
  std::map<int, std::map<int, std::size_t>> overlap;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] <= 0) continue;
    auto& row = overlap[pred[i]];
    if (gt[i] > 0) ++row[gt[i]];
  }
  std::map<int, int> credit;
  for (const auto& [segment, row] : overlap) {
    int best = kFalsePositive;
    std::size_t best_count = 0;
    for (const auto& [object, count] : row) {
      if (count > best_count) {  // ascending ids, so ties keep the lower id
        best = object;
        best_count = count;
      }
    }
    credit[segment] = best;
  }
  return credit;
}

}  // namespace

std::optional<double> iou(std::span<const int> pred, std::span<const int> gt) {
  if (pred.size() != gt.size()) throw LengthMismatch(count_message("pred labels", pred.size(), "gt labels", gt.size()));
  const auto credit = credit_segments(pred, gt);
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // object -> (intersection, union)
  for (int g : gt) {
    if (g > 0) counts[g];
  }
  if (counts.empty()) return std::nullopt;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int c = pred[i] > 0 ? credit.at(pred[i]) : 0;
    for (auto& [object, ic] : counts) {
      if (gt[i] == object && c == object) ++ic.first;
      if (gt[i] == object || c == object || c == kFalsePositive) ++ic.second;
    }
  }
  double sum = 0.0;
  for (const auto& [object, ic] : counts) sum += static_cast<double>(ic.first) / static_cast<double>(ic.second);
  return sum / static_cast<double>(counts.size());
}

std::vector<se3::Twist> relative_object_motion(std::span<const se3::Pose> object_poses,
                                               std::span<const se3::Pose> camera_poses, double dt) {
  if (object_poses.size() != camera_poses.size()) {
    throw LengthMismatch(count_message("object poses", object_poses.size(), "camera poses", camera_poses.size()));
  }
  std::vector<se3::Pose> t_co;
  t_co.reserve(object_poses.size());
  for (std::size_t k = 0; k < object_poses.size(); ++k) {
    se3::validate_rigid(object_poses[k]);
    se3::validate_rigid(camera_poses[k]);
    t_co.push_back(se3::inverse(camera_poses[k]) * object_poses[k]);
  }
  std::vector<se3::Twist> out;
  for (std::size_t k = 0; k + 1 < t_co.size(); ++k) {
    auto xi = se3::log(t_co[k + 1] * se3::inverse(t_co[k]));
    out.push_back({xi.v / dt, xi.w / dt});
  }
  return out;
}

std::vector<se3::Twist> camera_velocity(std::span<const se3::Pose> camera_poses, double dt) {
  std::vector<se3::Twist> out;
  for (std::size_t k = 0; k + 1 < camera_poses.size(); ++k) {
    auto xi = se3::log(se3::inverse(camera_poses[k]) * camera_poses[k + 1]);
    out.push_back({xi.v / dt, xi.w / dt});
  }
  return out;
}

Vec2 image_translation(const ImagePoint& x, const Vec3& v) { return geometry::matrix_A(x) * v; }

Vec3 rmse_velocity(std::span<const Vec3> est, std::span<const Vec3> gt) {
  if (est.size() != gt.size()) throw LengthMismatch(count_message("estimated velocities", est.size(), "ground-truth velocities", gt.size()));
  if (est.empty()) return Vec3::Zero();
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) sum += (est[i] - gt[i]).cwiseAbs2();
  return (sum / static_cast<double>(est.size())).cwiseSqrt();
}

EvalReport evaluate(const Recording& recording, const RunOutputs& outputs, const EvalOptions& options) {
  if (outputs.steps.size() != recording.slices.size()) {
    throw LengthMismatch(count_message("outputs.steps", outputs.steps.size(), "recording.slices", recording.slices.size()));
  }
  if (!recording.has_labels()) throw FormatError("recording carries no ground-truth labels");

  const bool have_camera = recording.camera_poses.size() == recording.slices.size() + 1;
  const bool have_objects = recording.object_poses.size() == recording.slices.size() + 1;
  const auto& K = recording.intrinsics;

  EvalReport report;
  double iou_sum = 0.0;
  std::vector<Vec3> vel_est, vel_gt;
  for (std::size_t k = 0; k < recording.slices.size(); ++k) {
    const Slice& slice = recording.slices[k];
    const OutputStep& step = outputs.steps[k];
    const int index = static_cast<int>(k);
    if (step.labels.size() != slice.labels.size()) {
      throw LengthMismatch(count_message("outputs.steps[" + std::to_string(k) + "].labels", step.labels.size(),
                                         "recording.slices[" + std::to_string(k) + "].labels", slice.labels.size()));
    }
    FrameScore frame{index, iou(step.labels, slice.labels)};
    if (frame.iou && index >= options.first_frame) {
      iou_sum += *frame.iou;
      ++report.scored_frames;
    }
    report.frames.push_back(frame);
    const double dt = slice.duration();
    if (!(dt > 0.0)) continue;

    if (have_camera && step.error.empty() && step.translation_valid) {
      const se3::Pose pair[2] = {recording.camera_poses[k], recording.camera_poses[k + 1]};
      const Vec3 gt = camera_velocity(pair, dt).front().v;
      // Only the direction is observable; the scale comes from ground truth.
      const Vec3 est = step.translation_direction * gt.norm();
      report.velocity.push_back({index, est, gt});
      vel_est.push_back(est);
      vel_gt.push_back(gt);
    }

    if (!have_objects) continue;
    const auto credit = credit_segments(step.labels, slice.labels);
    for (int o = 1; o <= recording.num_objects; ++o) {
      Vec2 centroid = Vec2::Zero();
      std::size_t count = 0;
      std::map<int, std::size_t> segment_votes;
      for (std::size_t i = 0; i < slice.size(); ++i) {
        if (slice.labels[i] != o) continue;
        centroid += K.to_calibrated(slice.events[i].x, slice.events[i].y);
        ++count;
        if (step.labels[i] > 0 && credit.at(step.labels[i]) == o) ++segment_votes[step.labels[i]];
      }
      if (count == 0) continue;
      centroid /= static_cast<double>(count);
      const se3::Pose objs[2] = {recording.object_poses[k][o - 1], recording.object_poses[k + 1][o - 1]};
      const se3::Pose cams[2] = {recording.camera_poses[k], recording.camera_poses[k + 1]};
      const Vec3 v = relative_object_motion(objs, cams, dt).front().v;

      ObjectMotionSample sample{index, o, Vec2::Constant(std::numeric_limits<double>::quiet_NaN()),
                                image_translation(centroid, v)};
      int best = 0;
      std::size_t best_votes = 0;
      for (const auto& [segment, votes] : segment_votes) {
        if (votes > best_votes) {
          best = segment;
          best_votes = votes;
        }
      }
      for (const auto& seg : step.segments) {
        // Segment translations describe the camera relative to the object at
        // unit depth; the object's motion relative to the camera is the negation.
        if (best > 0 && seg.id == best) sample.est = image_translation(centroid, -seg.motion.t);
      }
      report.object_motion.push_back(sample);
    }
  }
  report.mean_iou = report.scored_frames > 0 ? iou_sum / report.scored_frames
                                             : std::numeric_limits<double>::quiet_NaN();
  report.velocity_rmse = rmse_velocity(vel_est, vel_gt);
  return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
  Json root;
  root["format"] = "nfseg-report";
  root["version"] = 1;
  root["mean_iou"] = json_io::number_or_null(report.mean_iou);
  root["scored_frames"] = report.scored_frames;
  root["velocity_rmse"] = json_io::vec(report.velocity_rmse);
  Json frames = Json::array();
  for (const auto& f : report.frames) {
    frames.push_back({{"index", f.index}, {"iou", f.iou ? Json(*f.iou) : Json(nullptr)}});
  }
  root["frames"] = std::move(frames);
  Json vel = Json::array();
  for (const auto& v : report.velocity) {
    vel.push_back({{"index", v.index}, {"est", json_io::vec(v.est)}, {"gt", json_io::vec(v.gt)}});
  }
  root["velocity"] = std::move(vel);
  Json obj = Json::array();
  for (const auto& m : report.object_motion) {
    obj.push_back({{"index", m.index}, {"object", m.object}, {"est", json_io::vec(m.est)}, {"gt", json_io::vec(m.gt)}});
  }
  root["object_motion"] = std::move(obj);
  out << root.dump(1) << '\n';
}

EvalReport read_report(std::istream& in) {
  const Json root = json_io::parse(in, "report");
  if (root.value("format", std::string()) != "nfseg-report") throw FormatError("not a report file");
  EvalReport r;
  try {
    r.mean_iou = json_io::number(root.at("mean_iou"));
    r.scored_frames = root.at("scored_frames").get<int>();
    r.velocity_rmse = json_io::vec3(root.at("velocity_rmse"));
    for (const auto& f : root.at("frames")) {
      FrameScore s{f.at("index").get<int>(), std::nullopt};
      if (!f.at("iou").is_null()) s.iou = f.at("iou").get<double>();
      r.frames.push_back(s);
    }
    for (const auto& v : root.at("velocity")) {
      r.velocity.push_back({v.at("index").get<int>(), json_io::vec3(v.at("est")), json_io::vec3(v.at("gt"))});
    }
    for (const auto& m : root.at("object_motion")) {
      r.object_motion.push_back({m.at("index").get<int>(), m.at("object").get<int>(), json_io::vec2(m.at("est")),
                                 json_io::vec2(m.at("gt"))});
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void save_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report '" + path + "'");
  write_report(out, report);
}

EvalReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open report '" + path + "'");
  return read_report(in);
}

void print_report(std::ostream& out, const EvalReport& report, bool csv) {
  auto fmt = [](double v) {
    std::ostringstream s;
    if (std::isfinite(v)) {
      s << std::fixed << std::setprecision(4) << v;
    } else {
      s << "n/a";
    }
    return s.str();
  };
  if (csv) {
    out << "metric,frame,value\n";
    for (const auto& f : report.frames) out << "iou," << f.index << ',' << (f.iou ? fmt(*f.iou) : "") << '\n';
    out << "mean_iou,," << fmt(report.mean_iou) << '\n';
    out << "rmse_vx,," << fmt(report.velocity_rmse.x()) << '\n';
    out << "rmse_vy,," << fmt(report.velocity_rmse.y()) << '\n';
    out << "rmse_vz,," << fmt(report.velocity_rmse.z()) << '\n';
    return;
  }
  out << "frame  IoU\n";
  for (const auto& f : report.frames) {
    out << std::setw(5) << f.index << "  " << (f.iou ? fmt(*f.iou) : "-") << '\n';
  }
  out << "mean IoU: " << fmt(report.mean_iou) << " over " << report.scored_frames << " frames\n";
  out << "velocity RMSE (m/s): x " << fmt(report.velocity_rmse.x()) << "  y " << fmt(report.velocity_rmse.y())
      << "  z " << fmt(report.velocity_rmse.z()) << '\n';
}

}  // namespace nfseg
