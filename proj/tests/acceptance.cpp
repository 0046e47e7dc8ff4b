// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "nfseg/background.hpp"
#include "nfseg/clustering.hpp"
#include "nfseg/eval.hpp"
#include "nfseg/geometry.hpp"
#include "nfseg/kmeans.hpp"
#include "nfseg/merging.hpp"
#include "nfseg/outputs.hpp"
#include "nfseg/pipeline.hpp"
#include "nfseg/planar_fit.hpp"
#include "nfseg/se3.hpp"
#include "nfseg/simulator.hpp"

#include "support.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace nfseg;
using testing::Draw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Simulated background-only slice trimmed to `count` events.
std::vector<NormalFlowSample> background_samples(const MotionParams& camera, std::size_t count, double noise,
                                                 std::uint64_t seed) {
  SceneSpec scene;
  scene.background = Plane{0.1, -0.15, 1.0, 1.5};
  scene.camera = camera;
  scene.fire_probability = 1.0;
  scene.edge_density = 0.08;
  scene.flow_noise = noise;
  const auto rec = simulate(scene, 1, seed);
  auto samples = samples_of(rec.slices[0], rec.intrinsics);
  if (samples.size() > count) samples.resize(count);
  return samples;
}

double rms_normal_flow(const Recording& rec) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& slice : rec.slices)
    for (double v : slice.n) {
      sum += v * v;
      ++n;
    }
  return std::sqrt(sum / static_cast<double>(n));
}

double sign_agreement_direct(const std::vector<NormalFlowSample>& samples, const Vec3& t) {
  int agree = 0, used = 0;
  for (const auto& s : samples) {
    if (s.n == 0.0) continue;
    const double pred = (-t.x() + s.point.x() * t.z()) * s.n0.x() + (-t.y() + s.point.y() * t.z()) * s.n0.y();
    agree += (pred > 0) == (s.n > 0);
    ++used;
  }
  return static_cast<double>(agree) / used;
}

// Direction of best sign agreement on a sphere grid of the given resolution.
Vec3 sphere_grid_oracle(const std::vector<NormalFlowSample>& samples, double step_deg) {
  const double step = step_deg * std::numbers::pi / 180.0;
  Vec3 best = Vec3::UnitZ();
  double best_score = -1.0;
  for (double el = -std::numbers::pi / 2; el <= std::numbers::pi / 2 + 1e-9; el += step) {
    const int n_az = std::max(1, static_cast<int>(std::ceil(2 * std::numbers::pi * std::cos(el) / step)));
    for (int k = 0; k < n_az; ++k) {
      const double az = 2 * std::numbers::pi * k / n_az;
      const Vec3 t(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const double score = sign_agreement_direct(samples, t);
      if (score > best_score) {
        best_score = score;
        best = t;
      }
    }
  }
  return best;
}

std::vector<double> brute_force_convolve(const std::vector<double>& v, int w, int h, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k1;
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k1.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += k1.back();
  }
  std::vector<double> out(v.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          out[y * w + x] += k1[dx + radius] / sum * k1[dy + radius] / sum * v[yy * w + xx];
        }
  return out;
}

std::vector<RunStep> run_scene(const SceneSpec& scene, int steps, std::uint64_t seed, const Config& config,
                               Recording& rec) {
  rec = simulate(scene, steps, seed);
  return run(rec, config);
}

EvalReport score(const Recording& rec, const std::vector<RunStep>& steps, int first_frame) {
  EvalOptions opts;
  opts.first_frame = first_frame;
  return evaluate(rec, collect_outputs(rec, steps, 0), opts);
}

// Dominant nonzero predicted ID among an object's events, or 0.
int dominant_id(const Slice& slice, const std::vector<int>& labels, int object) {
  std::map<int, int> votes;
  for (std::size_t i = 0; i < slice.size(); ++i)
    if (slice.labels[i] == object && labels[i] > 0) ++votes[labels[i]];
  int best = 0, best_votes = 0;
  for (const auto& [id, v] : votes)
    if (v > best_votes) {
      best = id;
      best_votes = v;
    }
  return best;
}

// --- criteria ---------------------------------------------------------------

Outcome geometry_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Draw draw(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 t = draw.vec3(2.0), w = draw.vec3(1.0);
    const Plane plane = draw.plane();
    const ImagePoint p = draw.point();
    const Vec2 got = geometry::matrix_C(p) * geometry::assemble_a({t, w}, plane);
    worst = std::max(worst, (got - testing::motion_field(p, t, w, testing::inverse_depth(plane, p))).norm());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 1.0, fmt("max error %.2e over 1000 draws, %.3f s", worst, secs)};
}

Outcome plane_fit_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const MotionParams camera{Vec3(0.4, -0.2, 0.3), Vec3(0.05, -0.1, 0.02)};
  const auto clean = background_samples(camera, 5000, 0.0, 102);
  const auto fit = fit_plane(clean);
  double worst = 0.0, sq = 0.0;
  for (double r : fit.residuals) worst = std::max(worst, std::abs(r));
  for (const auto& s : clean) sq += s.n * s.n;
  const double sigma = 0.01 * std::sqrt(sq / clean.size());

  const auto noisy = background_samples(camera, 5000, sigma, 102);
  const auto noisy_fit = fit_plane(noisy);
  double mean = 0.0;
  for (double r : noisy_fit.residuals) mean += std::abs(r);
  mean /= noisy_fit.residuals.size();
  const double secs = seconds_since(t0);
  const bool pass = clean.size() == 5000 && noisy.size() == 5000 && worst < 1e-9 && mean < 2 * sigma && secs < 1.0;
  return {pass, fmt("max |r| %.2e noiseless; mean |r| %.3e vs sigma %.3e; %.3f s", worst, mean, sigma, secs)};
}

Outcome translation_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  const Vec3 truth(1, 0, 0);
  const MotionParams camera{0.3 * truth, Vec3::Zero()};
  auto samples = background_samples(camera, 5000, 0.0, 103);
  const auto clean = estimate_translation_svm(samples, Vec3::Zero());
  const double err_clean = testing::angle_deg(clean.direction, truth);

  Draw draw(103);
  for (auto& s : samples)
    if (draw.chance(0.1)) s.n = -s.n;
  const auto noisy = estimate_translation_svm(samples, Vec3::Zero());
  const double err_noisy = testing::angle_deg(noisy.direction, truth);

  const Vec3 oracle = sphere_grid_oracle(samples, 2.0);
  const double oracle_err = testing::angle_deg(oracle, truth);
  const double gap = sign_agreement_direct(samples, oracle) - sign_agreement_direct(samples, noisy.direction);
  const double secs = seconds_since(t0);
  const bool pass = samples.size() == 5000 && err_clean < 1.0 && err_noisy < 5.0 && oracle_err < 5.0 &&
                    gap <= 0.005 && secs < 10.0;
  return {pass, fmt("noiseless %.3f deg; 10%% sign noise %.3f deg; grid oracle %.2f deg from truth, "
                    "agreement gap %.4f; %.2f s",
                    err_clean, err_noisy, oracle_err, gap, secs)};
}

Outcome segmentation_quality() {
  std::ostringstream detail;
  bool pass = true;
  const std::pair<const char*, SceneSpec> scenes[] = {{"one object", testing::one_object_scene()},
                                                       {"two objects", testing::two_object_scene()}};
  for (const auto& [name, scene] : scenes) {
    const auto t0 = std::chrono::steady_clock::now();
    Recording rec;
    const auto steps = run_scene(scene, 10, 1, Config{}, rec);
    const double secs = seconds_since(t0);
    const auto report = score(rec, steps, 2);
    pass &= report.mean_iou >= 0.75 && secs < 30.0;
    detail << (detail.tellp() > 0 ? "; " : "") << fmt("%s mean IoU %.4f, %.1f s", name, report.mean_iou, secs);
  }
  return {pass, detail.str()};
}

Outcome egomotion_rmse() {
  auto scene = testing::two_object_scene();
  const double rms = rms_normal_flow(simulate(scene, 10, 31));
  scene.flow_noise = 0.05 * rms;
  Recording rec;
  const auto steps = run_scene(scene, 10, 31, Config{}, rec);
  const auto report = score(rec, steps, 0);
  const Vec3 e = report.velocity_rmse;
  const bool pass = !report.velocity.empty() && e.x() <= 0.05 && e.y() <= 0.05;
  return {pass, fmt("RMSE x %.4f y %.4f z %.4f m/s over %zu frames, noise sigma %.4f", e.x(), e.y(), e.z(),
                    report.velocity.size(), scene.flow_noise)};
}

Outcome smoothing_equivalence() {
  Draw draw(106);
  double worst = 0.0;
  for (auto [w, h] : {std::pair{5, 5}, std::pair{16, 12}, std::pair{32, 32}}) {
    for (double sigma : {0.6, 1.0, 2.5, 3.0}) {
      std::vector<double> v(static_cast<std::size_t>(w * h));
      for (auto& x : v) x = draw.uniform(-1, 1);
      const auto fast = gaussian_convolve(v, w, h, sigma);
      const auto slow = brute_force_convolve(v, w, h, sigma);
      for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));

      // Count-normalized event smoothing against the same oracle.
      std::vector<Vec2> px;
      std::vector<double> r;
      std::vector<double> mass(v.size(), 0.0), count(v.size(), 0.0);
      for (int e = 0; e < w * h; ++e) {
        px.push_back({draw.uniform(0, w), draw.uniform(0, h)});
        r.push_back(draw.uniform(-1, 1));
        const int c = static_cast<int>(px.back().y()) * w + static_cast<int>(px.back().x());
        mass[c] += std::abs(r.back());
        count[c] += 1.0;
      }
      const auto sm = smooth_residuals(px, r, sigma, w, h);
      const auto m = brute_force_convolve(mass, w, h, sigma), n = brute_force_convolve(count, w, h, sigma);
      for (std::size_t c = 0; c < v.size(); ++c)
        if (n[c] > 1e-12) worst = std::max(worst, std::abs(sm.grid.values[c] - m[c] / n[c]));
    }
  }
  return {worst < 1e-10, fmt("max deviation %.2e on 5x5, 16x12 and 32x32 grids", worst)};
}

Outcome merge_correctness() {
  Draw draw(107);
  const auto spec = testing::two_object_scene();
  const Intrinsics K;
  std::vector<NormalFlowSample> samples;
  std::vector<double> derotated;
  std::vector<Vec2> pixels;
  std::vector<int> labels;
  for (int y = 0; y < K.height; y += 2)
    for (int x = 0; x < K.width; x += 2) {
      if (!draw.chance(0.5)) continue;
      const Vec2 px(x + draw.uniform(0, 2), y + draw.uniform(0, 2));
      int label = 0;
      for (std::size_t o = 0; o < spec.objects.size(); ++o)
        if ((px - spec.objects[o].center_px).cwiseQuotient(spec.objects[o].radii_px).squaredNorm() < 1.0)
          label = static_cast<int>(o) + 1;
      const MotionParams& m = label == 0 ? spec.camera : spec.objects[label - 1].motion;
      const Plane& plane = label == 0 ? spec.background : spec.objects[label - 1].plane;
      NormalFlowSample s;
      s.point = K.to_calibrated(px.x(), px.y());
      s.n0 = draw.unit2();
      s.n = testing::motion_field(s.point, m.t, m.w, testing::inverse_depth(plane, s.point)).dot(s.n0);
      samples.push_back(s);
      derotated.push_back(geometry::derotate(s, spec.camera.w));
      pixels.push_back(px);
      labels.push_back(label);
    }
  const MergeContext ctx{samples, derotated, {}, pixels};

  // 20 background tiles and 5 per object, compact in the image.
  std::vector<SegmentCandidate> cands;
  const int pieces[3] = {20, 5, 5};
  for (int label = 0; label < 3; ++label) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) idx.push_back(static_cast<int>(i));
    FeatureMatrix f(static_cast<int>(idx.size()), 2);
    for (std::size_t r = 0; r < idx.size(); ++r) f.row(static_cast<int>(r)) = pixels[idx[r]].transpose();
    KMeansOptions opts;
    opts.k = pieces[label];
    const auto km = kmeans(f, opts);
    std::vector<std::vector<int>> tiles(opts.k);
    for (std::size_t r = 0; r < idx.size(); ++r) tiles[km.labels[r]].push_back(idx[r]);
    for (auto& tile : tiles) {
      if (tile.empty()) continue;
      cands.push_back(make_candidate(tile, ctx));
      cands.back().is_bg_like = label == 0;
    }
  }
  const auto merged = hierarchical_merge(cands, MergeOptions{});
  std::set<std::set<int>> got, want;
  for (const auto& m : merged) got.insert(std::set<int>(m.event_indices.begin(), m.event_indices.end()));
  for (int label = 0; label < 3; ++label) {
    std::set<int> region;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) region.insert(static_cast<int>(i));
    want.insert(region);
  }
  const bool partition_ok = cands.size() == 30 && merged.size() == 3 && got == want;

  // Identical motion, disjoint boxes, no threshold at all.
  SegmentCandidate a = cands.front(), b = a;
  b.bbox.min_x = a.bbox.max_x + 3 * MergeOptions{}.bbox_dilation;
  b.bbox.max_x = b.bbox.min_x + 10;
  MergeOptions open;
  open.threshold = -std::numeric_limits<double>::infinity();
  const bool disjoint_ok = hierarchical_merge({a, b}, open).size() == 2;
  return {partition_ok && disjoint_ok,
          fmt("%zu candidates -> %zu segments, partition %s; disjoint identical pair %s", cands.size(), merged.size(),
              got == want ? "matches ground truth" : "differs", disjoint_ok ? "kept apart" : "merged")};
}

Outcome tracking() {
  Config config;
  config.tracker.gate = 60.0;
  Recording rec;
  const auto steps = run_scene(testing::emerging_object_scene(), 30, 8, config, rec);

  int switches = 0;
  bool background_zero = true;
  std::set<int> seen_before_10;
  int emerging_id = -1;
  for (int o = 1; o <= rec.num_objects; ++o) {
    int last = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const int id = dominant_id(rec.slices[k], steps[k].output.labels, o);
      if (id != 0 && last != 0 && id != last) ++switches;
      if (id != 0) last = id;
    }
  }
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& out = steps[k].output;
    background_zero &= steps[k].error.empty() && !out.segments.empty() && out.segments.front().id == 0;
    for (std::size_t s = 1; s < out.segments.size(); ++s) background_zero &= out.segments[s].id > 0;
    if (k < 10)
      for (int l : out.labels) seen_before_10.insert(l);
  }
  emerging_id = dominant_id(rec.slices[10], steps[10].output.labels, 2);
  const bool fresh = emerging_id > 0 && seen_before_10.count(emerging_id) == 0;
  return {switches == 0 && background_zero && fresh,
          fmt("%d ID switches over 30 steps; background ID 0 %s; object entering at step 10 got ID %d (%s)", switches,
              background_zero ? "throughout" : "violated", emerging_id, fresh ? "fresh" : "not fresh")};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string capture(const std::string& cmd, int& status) {
  std::string out;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  status = pclose(pipe);
  return out;
}

Outcome determinism() {
  const fs::path root = fs::current_path() / "acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path scene = root / "scene.json";
  std::ofstream(scene) << R"({"camera": {"t": [0.3, -0.1, 0.2], "w": [-0.05, 0.1, 0.05]},)"
                       << R"( "objects": [{"plane": {"d": 1.0}, "motion": {"t": [-2.3, 1.1, -0.2], "w": [-0.05, 0.1, 0.05]},)"
                       << R"( "center_px": [95, 85], "radii_px": [60, 51]}], "flow_noise": 0.02})";
  const std::string cli = NFSEG_CLI;
  std::string stdout_text[2];
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = root / std::to_string(r);
    fs::create_directories(dir);
    int s1 = 0, s2 = 0, s3 = 0;
    capture(cli + " simulate " + scene.string() + " --steps 6 --seed 5 --out " + (dir / "rec.nfrec").string(), s1);
    capture(cli + " run " + (dir / "rec.nfrec").string() + " --seed 5 --out " + (dir / "out.json").string(), s2);
    stdout_text[r] = capture(cli + " eval " + (dir / "rec.nfrec").string() + " " + (dir / "out.json").string() +
                                 " --out " + (dir / "report.json").string(),
                             s3);
    if (s1 || s2 || s3) return {false, fmt("run %d: a CLI step failed", r)};
  }
  bool same = stdout_text[0] == stdout_text[1];
  std::size_t bytes = 0;
  for (const char* name : {"rec.nfrec", "out.json", "report.json"}) {
    const auto a = read_file(root / "0" / name), b = read_file(root / "1" / name);
    same &= !a.empty() && a == b;
    bytes += a.size();
  }
  return {same, fmt("recording, outputs, report and eval table %s across two executions (%zu bytes compared)",
                    same ? "identical" : "differ", bytes)};
}

Outcome se3_and_iou() {
  Draw draw(110);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    se3::Pose p = se3::Pose::Identity();
    p.topLeftCorner<3, 3>() = Eigen::AngleAxisd(draw.uniform(0, 3.0), draw.unit3()).toRotationMatrix();
    p.topRightCorner<3, 1>() = draw.vec3(2.0);
    worst = std::max(worst, (se3::exp(se3::log(p)) - p).cwiseAbs().maxCoeff());
  }
  // Hand-counted fixtures: 80 of 100 in the union; two objects at 1 and 1/2.
  std::vector<int> gt(200, 0), pred(200, 0);
  for (int i = 0; i < 90; ++i) gt[i] = 1;
  for (int i = 10; i < 100; ++i) pred[i] = 3;
  const std::vector<int> gt2{1, 1, 1, 1, 2, 2, 2, 2, 0, 0}, pred2{7, 7, 7, 7, 9, 9, 0, 0, 0, 0};
  const bool iou_ok = iou(pred, gt) == 0.8 && iou(gt, gt) == 1.0 && iou(pred2, gt2) == 0.75;
  return {worst < 1e-10 && iou_ok,
          fmt("max round-trip error %.2e over 1000 motions; IoU fixtures %s", worst, iou_ok ? "exact" : "wrong")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"geometry oracle", geometry_oracle},
      {"plane-fit exactness", plane_fit_exactness},
      {"translation direction", translation_direction},
      {"segmentation quality", segmentation_quality},
      {"egomotion RMSE", egomotion_rmse},
      {"smoothing equivalence", smoothing_equivalence},
      {"merge correctness", merge_correctness},
      {"tracking", tracking},
      {"determinism", determinism},
      {"SE(3) metrics and IoU", se3_and_iou},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << index << ". " << name << ": " << o.detail << std::endl;
  }
  std::cout << (10 - failed) << "/10 criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
