#include "nfseg/recording.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nfseg {

static_assert(std::endian::native == std::endian::little,
              "the recording container is little-endian; big-endian hosts need byte swapping");

namespace {

constexpr char kMagic[8] = {'N', 'F', 'S', 'E', 'G', 'R', 'E', 'C'};
constexpr char kEndMagic[8] = {'N', 'F', 'S', 'E', 'G', 'E', 'N', 'D'};
constexpr std::uint32_t kFlagLabels = 1u << 0;
constexpr std::uint32_t kFlagCameraPoses = 1u << 1;
constexpr std::uint32_t kFlagObjectPoses = 1u << 2;
constexpr std::uint64_t kMaxEvents = 1ull << 32;

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("truncated recording while reading ") + what);
    }
  }
  template <typename T>
  T scalar(const char* what) {
    T v;
    bytes(&v, sizeof(T), what);
    return v;
  }
  template <typename T>
  std::vector<T> column(std::size_t n, const char* what) {
    std::vector<T> v(n);
    if (n > 0) bytes(v.data(), n * sizeof(T), what);
    return v;
  }
  se3::Pose pose(const char* what) {
    se3::Pose p = se3::Pose::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) p(r, c) = scalar<double>(what);
    }
    return p;
  }

 private:
  std::istream& in_;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* src, std::size_t n) {
    out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void scalar(T v) {
    bytes(&v, sizeof(T));
  }
  template <typename T>
  void column(const std::vector<T>& v) {
    if (!v.empty()) bytes(v.data(), v.size() * sizeof(T));
  }
  void pose(const se3::Pose& p) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) scalar<double>(p(r, c));
    }
  }

 private:
  std::ostream& out_;
};

}  // namespace

bool Recording::has_labels() const {
  return !slices.empty() && std::all_of(slices.begin(), slices.end(), [](const Slice& s) {
           return s.labels.size() == s.events.size();
         });
}

void validate(const Recording& rec) {
  const auto& k = rec.intrinsics;
  if (!(k.fx > 0.0) || !(k.fy > 0.0) || k.width <= 0 || k.height <= 0) {
    throw FormatError("intrinsics must be positive");
  }
  if (rec.num_objects < 0) throw FormatError("negative object count");
  double prev_start = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < rec.slices.size(); ++s) {
    const Slice& sl = rec.slices[s];
    const std::string where = "slice " + std::to_string(s);
    if (!(sl.t_end >= sl.t_start) || !(sl.t_start >= prev_start)) {
      throw FormatError(where + ": slice times are not monotone");
    }
    prev_start = sl.t_start;
    const std::size_t n = sl.events.size();
    if (sl.n.size() != n || sl.n0.size() != n) throw FormatError(where + ": array lengths differ");
    if (!sl.labels.empty() && sl.labels.size() != n) throw FormatError(where + ": label array length differs");
    if (!sl.imu_w.allFinite()) throw FormatError(where + ": non-finite IMU rotation");
    for (std::size_t i = 0; i < n; ++i) {
      const Event& e = sl.events[i];
      if (!std::isfinite(e.t) || !std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(sl.n[i])) {
        throw FormatError(where + ": non-finite event field");
      }
      if (e.t < sl.t_start || e.t > sl.t_end) throw FormatError(where + ": event time outside slice window");
      if (std::abs(sl.n0[i].norm() - 1.0) > 1e-6) throw FormatError(where + ": n0 is not a unit vector");
      if (!sl.labels.empty() && (sl.labels[i] < 0 || sl.labels[i] > rec.num_objects)) {
        throw FormatError(where + ": label out of range");
      }
    }
  }
  if (!rec.camera_poses.empty() && rec.camera_poses.size() != rec.slices.size() + 1) {
    throw FormatError("camera pose count must be slice count + 1");
  }
  if (!rec.object_poses.empty()) {
    if (rec.object_poses.size() != rec.slices.size() + 1) {
      throw FormatError("object pose count must be slice count + 1");
    }
    for (const auto& row : rec.object_poses) {
      if (row.size() != static_cast<std::size_t>(rec.num_objects)) {
        throw FormatError("object pose row does not match object count");
      }
    }
  }
}

Recording read_recording(std::istream& in) {
  Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("bad magic header");
  const auto version = r.scalar<std::uint32_t>("version");
  if (version != kRecordingVersion) {
    throw VersionError("unsupported recording version " + std::to_string(version));
  }
  const auto flags = r.scalar<std::uint32_t>("flags");
  if ((flags & ~(kFlagLabels | kFlagCameraPoses | kFlagObjectPoses)) != 0) {
    throw FormatError("unknown flag bits");
  }

  Recording rec;
  rec.intrinsics.fx = r.scalar<double>("fx");
  rec.intrinsics.fy = r.scalar<double>("fy");
  rec.intrinsics.cx = r.scalar<double>("cx");
  rec.intrinsics.cy = r.scalar<double>("cy");
  rec.intrinsics.width = static_cast<int>(r.scalar<std::uint32_t>("width"));
  rec.intrinsics.height = static_cast<int>(r.scalar<std::uint32_t>("height"));
  const auto num_slices = r.scalar<std::uint32_t>("slice count");
  rec.num_objects = static_cast<int>(r.scalar<std::uint32_t>("object count"));

  rec.slices.reserve(std::min<std::uint32_t>(num_slices, 1u << 16));
  for (std::uint32_t s = 0; s < num_slices; ++s) {
    Slice sl;
    sl.t_start = r.scalar<double>("slice start");
    sl.t_end = r.scalar<double>("slice end");
    for (int i = 0; i < 3; ++i) sl.imu_w[i] = r.scalar<double>("imu");
    const auto n = r.scalar<std::uint64_t>("event count");
    if (n > kMaxEvents) throw FormatError("implausible event count");
    const auto t = r.column<double>(n, "t");
    const auto x = r.column<double>(n, "x");
    const auto y = r.column<double>(n, "y");
    sl.n = r.column<double>(n, "n");
    const auto n0x = r.column<double>(n, "n0x");
    const auto n0y = r.column<double>(n, "n0y");
    sl.events.resize(n);
    sl.n0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      sl.events[i] = Event{t[i], x[i], y[i]};
      sl.n0[i] = Vec2(n0x[i], n0y[i]);
    }
    if (flags & kFlagLabels) sl.labels = r.column<std::int32_t>(n, "labels");
    rec.slices.push_back(std::move(sl));
  }
  if (flags & kFlagCameraPoses) {
    for (std::uint32_t i = 0; i <= num_slices; ++i) rec.camera_poses.push_back(r.pose("camera pose"));
  }
  if (flags & kFlagObjectPoses) {
    for (std::uint32_t i = 0; i <= num_slices; ++i) {
      std::vector<se3::Pose> row;
      for (int o = 0; o < rec.num_objects; ++o) row.push_back(r.pose("object pose"));
      rec.object_poses.push_back(std::move(row));
    }
  }
  char end[8];
  r.bytes(end, sizeof end, "end marker");
  if (std::memcmp(end, kEndMagic, sizeof end) != 0) throw FormatError("bad end marker");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after end marker");

  validate(rec);
  return rec;
}

void write_recording(std::ostream& out, const Recording& rec) {
  validate(rec);
  const bool labels = rec.has_labels();
  std::uint32_t flags = 0;
  if (labels) flags |= kFlagLabels;
  if (!rec.camera_poses.empty()) flags |= kFlagCameraPoses;
  if (!rec.object_poses.empty()) flags |= kFlagObjectPoses;

  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.scalar<std::uint32_t>(kRecordingVersion);
  w.scalar<std::uint32_t>(flags);
  w.scalar<double>(rec.intrinsics.fx);
  w.scalar<double>(rec.intrinsics.fy);
  w.scalar<double>(rec.intrinsics.cx);
  w.scalar<double>(rec.intrinsics.cy);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(rec.intrinsics.width));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(rec.intrinsics.height));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(rec.slices.size()));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(rec.num_objects));

  for (const Slice& sl : rec.slices) {
    w.scalar<double>(sl.t_start);
    w.scalar<double>(sl.t_end);
    for (int i = 0; i < 3; ++i) w.scalar<double>(sl.imu_w[i]);
    const std::size_t n = sl.events.size();
    w.scalar<std::uint64_t>(n);
    std::vector<double> col(n);
    auto emit = [&](auto get) {
      for (std::size_t i = 0; i < n; ++i) col[i] = get(i);
      w.column(col);
    };
    emit([&](std::size_t i) { return sl.events[i].t; });
    emit([&](std::size_t i) { return sl.events[i].x; });
    emit([&](std::size_t i) { return sl.events[i].y; });
    emit([&](std::size_t i) { return sl.n[i]; });
    emit([&](std::size_t i) { return sl.n0[i].x(); });
    emit([&](std::size_t i) { return sl.n0[i].y(); });
    if (labels) {
      std::vector<std::int32_t> lab(sl.labels.begin(), sl.labels.end());
      w.column(lab);
    }
  }
  for (const auto& p : rec.camera_poses) w.pose(p);
  for (const auto& row : rec.object_poses) {
    for (const auto& p : row) w.pose(p);
  }
  w.bytes(kEndMagic, sizeof kEndMagic);
}

Recording load_recording(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open recording '" + path + "'");
  return read_recording(in);
}

void save_recording(const std::string& path, const Recording& recording) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write recording '" + path + "'");
  write_recording(out, recording);
  if (!out) throw std::runtime_error("failed writing recording '" + path + "'");
}

std::vector<NormalFlowSample> samples_of(const Slice& slice, const Intrinsics& intrinsics) {
  std::vector<NormalFlowSample> out;
  out.reserve(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) {
    out.push_back({intrinsics.to_calibrated(slice.events[i].x, slice.events[i].y), slice.n0[i], slice.n[i]});
  }
  return out;
}

}  // namespace nfseg
