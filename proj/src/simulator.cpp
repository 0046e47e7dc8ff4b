#include "nfseg/simulator.hpp"

#include "nfseg/geometry.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace nfseg {

namespace {

// Platform-independent draws; std:: distributions are implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Smooth random edge-orientation field: random orientations on a lattice of
// spacing `scale` px, interpolated bilinearly in doubled-angle space.
class OrientationField {
 public:
  OrientationField(std::uint64_t seed, double scale) : seed_(seed), scale_(scale) {}

  double angle_at(const Vec2& px) const {
    const double gx = px.x() / scale_, gy = px.y() / scale_;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const double ax = gx - fx, ay = gy - fy;
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const Vec2 v = (1 - ax) * (1 - ay) * node(ix, iy) + ax * (1 - ay) * node(ix + 1, iy) +
                   (1 - ax) * ay * node(ix, iy + 1) + ax * ay * node(ix + 1, iy + 1);
    return 0.5 * std::atan2(v.y(), v.x());
  }

 private:
  Vec2 node(std::int64_t i, std::int64_t j) const {
    const std::uint64_t h = mix(seed_ ^ mix(static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL ^
                                            static_cast<std::uint64_t>(j)));
    const double a = 2.0 * std::numbers::pi * (static_cast<double>(h >> 11) * 0x1.0p-53);
    return {std::cos(a), std::sin(a)};
  }

  std::uint64_t seed_;
  double scale_;
};

struct TexturePoint {
  ImagePoint p;  // calibrated
  double theta;
};

struct ObjectState {
  std::vector<TexturePoint> points;
  ImagePoint center;  // calibrated
  se3::Pose camera_in_object = se3::Pose::Identity();
};

constexpr int kBlock = 8;

bool in_frame(const Vec2& px, const Intrinsics& k) {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < k.width && px.y() < k.height;
}

bool inside_ellipse(const Vec2& px, const Vec2& center_px, const Vec2& radii) {
  const double dx = (px.x() - center_px.x()) / radii.x();
  const double dy = (px.y() - center_px.y()) / radii.y();
  return dx * dx + dy * dy <= 1.0;
}

bool visible(const ObjectSpec& o, int step) {
  return step >= o.appear_step && (o.vanish_step < 0 || step < o.vanish_step);
}

ImagePoint advect(const ImagePoint& p, const MotionParams& m, const Plane& plane, double dt) {
  const ImagePoint mid = p + 0.5 * dt * geometry::flow_at(p, m, plane.inverse_depth(p));
  return p + dt * geometry::flow_at(mid, m, plane.inverse_depth(mid));
}

void fill_background(std::vector<TexturePoint>& pts, const SceneSpec& spec,
                     const OrientationField& field, Rng& rng, bool initial) {
  const auto& k = spec.intrinsics;
  const int bw = (k.width + kBlock - 1) / kBlock, bh = (k.height + kBlock - 1) / kBlock;
  std::vector<int> counts(static_cast<std::size_t>(bw) * bh, 0);
  for (const auto& t : pts) {
    const Vec2 px = k.to_pixel(t.p);
    if (!in_frame(px, k)) continue;
    ++counts[static_cast<std::size_t>(px.y() / kBlock) * bw + static_cast<std::size_t>(px.x() / kBlock)];
  }
  const double target = spec.edge_density * kBlock * kBlock;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const int have = counts[static_cast<std::size_t>(by) * bw + bx];
      if (!initial && have >= 0.5 * target) continue;
      const double want = target - have;
      int spawn = static_cast<int>(std::floor(want));
      if (rng.uniform() < want - spawn) ++spawn;
      for (int s = 0; s < spawn; ++s) {
        const Vec2 px(std::min(bx * kBlock + rng.uniform() * kBlock, k.width - 1e-6),
                      std::min(by * kBlock + rng.uniform() * kBlock, k.height - 1e-6));
        pts.push_back({k.to_calibrated(px.x(), px.y()), field.angle_at(px)});
      }
    }
  }
}

}  // namespace

Recording simulate(const SceneSpec& spec, int steps, std::uint64_t seed) {
  const Intrinsics& K = spec.intrinsics;
  Rng rng(seed);
  const double dt = spec.slice_duration;

  Recording rec;
  rec.intrinsics = K;
  rec.num_objects = static_cast<int>(spec.objects.size());

  const OrientationField bg_field(mix(seed ^ 0x5151), spec.orientation_scale);
  std::vector<TexturePoint> background;
  fill_background(background, spec, bg_field, rng, true);

  std::vector<ObjectState> objects;
  for (std::size_t o = 0; o < spec.objects.size(); ++o) {
    const ObjectSpec& os = spec.objects[o];
    const OrientationField field(mix(seed ^ (0xab00 + o)), spec.orientation_scale);
    ObjectState st;
    st.center = K.to_calibrated(os.center_px.x(), os.center_px.y());
    const double area = std::numbers::pi * os.radii_px.x() * os.radii_px.y();
    const int count = static_cast<int>(std::round(spec.edge_density * area));
    for (int i = 0; i < count; ++i) {
      Vec2 px;
      do {
        px = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      } while (px.squaredNorm() > 1.0);
      px = os.center_px + px.cwiseProduct(os.radii_px);
      st.points.push_back({K.to_calibrated(px.x(), px.y()), field.angle_at(px)});
    }
    const double depth = 1.0 / os.plane.inverse_depth(st.center);
    se3::Pose object_in_camera = se3::Pose::Identity();
    object_in_camera.topRightCorner<3, 1>() = Vec3(st.center.x() * depth, st.center.y() * depth, depth);
    st.camera_in_object = se3::inverse(object_in_camera);
    objects.push_back(std::move(st));
  }

  se3::Pose camera_pose = se3::Pose::Identity();
  auto record_poses = [&] {
    rec.camera_poses.push_back(camera_pose);
    std::vector<se3::Pose> row;
    for (const auto& st : objects) row.push_back(camera_pose * se3::inverse(st.camera_in_object));
    if (!objects.empty()) rec.object_poses.push_back(std::move(row));
  };
  record_poses();

  for (int step = 0; step < steps; ++step) {
    const MotionParams cam = step < static_cast<int>(spec.camera_trajectory.size())
                                 ? spec.camera_trajectory[step]
                                 : spec.camera;
    const double t0 = step * dt;

    struct Raw {
      double t;
      Vec2 px;
      double n;
      Vec2 n0;
      int label;
    };
    std::vector<Raw> raw;

    auto emit = [&](const TexturePoint& tp, const MotionParams& m, const Plane& plane, int label) {
      if (rng.uniform() >= spec.fire_probability) return;
      const double te = t0 + rng.uniform() * dt;
      const ImagePoint pe = tp.p + (te - t0) * geometry::flow_at(tp.p, m, plane.inverse_depth(tp.p));
      const Vec2 px = K.to_pixel(pe);
      if (!in_frame(px, K)) return;
      // The stored event is in pixels; evaluate the flow at the position the
      // loader will reconstruct so noiseless data is exactly model-consistent.
      const ImagePoint q = K.to_calibrated(px.x(), px.y());
      const Vec2 n0(std::cos(tp.theta), std::sin(tp.theta));
      const double n = geometry::normal_flow_at(q, n0, m, plane.inverse_depth(q));
      raw.push_back({te, px, n, n0, label});
    };

    std::vector<Vec2> centers_px;
    for (const auto& st : objects) centers_px.push_back(K.to_pixel(st.center));

    for (const auto& tp : background) {
      const Vec2 px = K.to_pixel(tp.p);
      if (!in_frame(px, K)) continue;
      bool occluded = false;
      for (std::size_t o = 0; o < objects.size(); ++o) {
        if (visible(spec.objects[o], step) && inside_ellipse(px, centers_px[o], spec.objects[o].radii_px)) {
          occluded = true;
          break;
        }
      }
      if (!occluded) emit(tp, cam, spec.background, 0);
    }
    for (std::size_t o = 0; o < objects.size(); ++o) {
      if (!visible(spec.objects[o], step)) continue;
      for (const auto& tp : objects[o].points) {
        emit(tp, spec.objects[o].motion, spec.objects[o].plane, static_cast<int>(o) + 1);
      }
    }

    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a].t < raw[b].t; });

    double rms = 0.0;
    for (const auto& r : raw) rms += r.n * r.n;
    rms = raw.empty() ? 0.0 : std::sqrt(rms / static_cast<double>(raw.size()));

    Slice slice;
    slice.t_start = t0;
    slice.t_end = t0 + dt;
    slice.imu_w = cam.w;
    if (spec.imu_noise > 0.0) {
      for (int i = 0; i < 3; ++i) slice.imu_w[i] += spec.imu_noise * rng.normal();
    }
    for (std::size_t idx : order) {
      const Raw& r = raw[idx];
      double n = r.n;
      if (spec.outlier_fraction > 0.0 && rng.uniform() < spec.outlier_fraction) {
        n = rms * rng.normal();
      } else if (spec.flow_noise > 0.0) {
        n += spec.flow_noise * rng.normal();
      }
      slice.events.push_back({r.t, r.px.x(), r.px.y()});
      slice.n.push_back(n);
      slice.n0.push_back(r.n0);
      slice.labels.push_back(r.label);
    }
    rec.slices.push_back(std::move(slice));

    // Advance the scene to the next slice boundary.
    for (auto& tp : background) tp.p = advect(tp.p, cam, spec.background, dt);
    std::erase_if(background, [&](const TexturePoint& tp) {
      const Vec2 px = K.to_pixel(tp.p);
      return px.x() < -kBlock || px.y() < -kBlock || px.x() >= K.width + kBlock || px.y() >= K.height + kBlock;
    });
    fill_background(background, spec, bg_field, rng, false);
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const ObjectSpec& os = spec.objects[o];
      for (auto& tp : objects[o].points) tp.p = advect(tp.p, os.motion, os.plane, dt);
      objects[o].center = advect(objects[o].center, os.motion, os.plane, dt);
      objects[o].camera_in_object = objects[o].camera_in_object * se3::exp({os.motion.t * dt, os.motion.w * dt});
    }
    camera_pose = camera_pose * se3::exp({cam.t * dt, cam.w * dt});
    record_poses();
  }
  return rec;
}

namespace {

using nlohmann::json;

Vec3 vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Vec2 vec2(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

MotionParams motion(const json& j) {
  MotionParams m;
  if (j.contains("t")) m.t = vec3(j["t"]);
  if (j.contains("w")) m.w = vec3(j["w"]);
  return m;
}

Plane plane(const json& j) {
  Plane p;
  p.alpha = j.value("alpha", 0.0);
  p.beta = j.value("beta", 0.0);
  p.gamma = j.value("gamma", 1.0);
  p.d = j.value("d", 1.0);
  if (!(p.d > 0.0)) throw std::runtime_error("scene: plane distance d must be positive");
  return p;
}

}  // namespace

SceneSpec parse_scene(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scene: invalid JSON: ") + e.what());
  }
  SceneSpec s;
  try {
    if (j.contains("intrinsics")) {
      const auto& k = j["intrinsics"];
      s.intrinsics.fx = k.value("fx", s.intrinsics.fx);
      s.intrinsics.fy = k.value("fy", s.intrinsics.fy);
      s.intrinsics.cx = k.value("cx", s.intrinsics.cx);
      s.intrinsics.cy = k.value("cy", s.intrinsics.cy);
      s.intrinsics.width = k.value("width", s.intrinsics.width);
      s.intrinsics.height = k.value("height", s.intrinsics.height);
    }
    if (j.contains("background")) s.background = plane(j["background"]);
    if (j.contains("camera")) s.camera = motion(j["camera"]);
    if (j.contains("camera_trajectory")) {
      for (const auto& m : j["camera_trajectory"]) s.camera_trajectory.push_back(motion(m));
    }
    if (j.contains("objects")) {
      for (const auto& o : j["objects"]) {
        ObjectSpec os;
        if (o.contains("plane")) os.plane = plane(o["plane"]);
        if (o.contains("motion")) os.motion = motion(o["motion"]);
        os.center_px = vec2(o.at("center_px"));
        if (o.contains("radii_px")) os.radii_px = vec2(o["radii_px"]);
        os.appear_step = o.value("appear_step", 0);
        os.vanish_step = o.value("vanish_step", -1);
        const auto& k = s.intrinsics;
        if (os.center_px.x() < 0 || os.center_px.y() < 0 || os.center_px.x() >= k.width ||
            os.center_px.y() >= k.height) {
          throw std::runtime_error("scene: object center outside the frame");
        }
        s.objects.push_back(os);
      }
    }
    s.slice_duration = j.value("slice_duration", s.slice_duration);
    s.edge_density = j.value("edge_density", s.edge_density);
    s.fire_probability = j.value("fire_probability", s.fire_probability);
    s.orientation_scale = j.value("orientation_scale", s.orientation_scale);
    s.flow_noise = j.value("flow_noise", s.flow_noise);
    s.outlier_fraction = j.value("outlier_fraction", s.outlier_fraction);
    s.imu_noise = j.value("imu_noise", s.imu_noise);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scene: ") + e.what());
  }
  if (!(s.slice_duration > 0.0)) throw std::runtime_error("scene: slice_duration must be positive");
  return s;
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file '" + path + "'");
  return parse_scene(in);
}

}  // namespace nfseg
