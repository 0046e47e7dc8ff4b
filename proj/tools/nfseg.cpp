// Command-line front end: simulate, run, eval, plot, inspect.

#include "nfseg/config.hpp"
#include "nfseg/eval.hpp"
#include "nfseg/outputs.hpp"
#include "nfseg/pipeline.hpp"
#include "nfseg/recording.hpp"
#include "nfseg/simulator.hpp"

#include "plot.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace {

using namespace nfseg;

Config config_from(const std::string& path, std::optional<std::uint64_t> seed) {
  Config cfg = path.empty() ? Config{} : load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

void inspect(const Recording& rec, std::ostream& out) {
  const auto& k = rec.intrinsics;
  std::size_t events = 0;
  for (const auto& s : rec.slices) events += s.size();
  out << "intrinsics: fx " << k.fx << " fy " << k.fy << " cx " << k.cx << " cy " << k.cy << " size " << k.width
      << "x" << k.height << '\n';
  out << "slices: " << rec.slices.size() << "  events: " << events << "  objects: " << rec.num_objects << '\n';
  out << "labels: " << (rec.has_labels() ? "yes" : "no") << "  camera poses: " << rec.camera_poses.size()
      << "  object pose rows: " << rec.object_poses.size() << '\n';
  if (!rec.slices.empty()) {
    out << "time: " << rec.slices.front().t_start << " .. " << rec.slices.back().t_end << " s\n";
  }
  for (std::size_t i = 0; i < rec.slices.size(); ++i) {
    const auto& s = rec.slices[i];
    out << "  slice " << std::setw(3) << i << "  [" << s.t_start << ", " << s.t_end << ")  events " << s.size();
    if (!s.labels.empty()) {
      std::size_t fg = 0;
      for (int l : s.labels) fg += l > 0;
      out << "  foreground " << fg;
    }
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-based motion segmentation from normal flow"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string format = "text";

  auto* sim = app.add_subcommand("simulate", "Render a scene file into a recording with ground truth");
  std::string scene_path;
  int steps = 10;
  std::uint64_t sim_seed = 42;
  sim->add_option("scene", scene_path, "Scene JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--steps", steps, "Number of slices")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", out_path, "Recording file")->required();

  auto* run_cmd = app.add_subcommand("run", "Segment a recording");
  std::string rec_path;
  run_cmd->add_option("recording", rec_path, "Recording file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--config", config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--out", out_path, "Outputs file (JSON)")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Score outputs against the recording's ground truth");
  std::string outputs_path;
  int first_frame = 2;
  eval_cmd->add_option("recording", rec_path, "Recording with ground truth")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("outputs", outputs_path, "Outputs from run")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out_path, "Report file (JSON)");
  eval_cmd->add_option("--format", format, "Table format")->check(CLI::IsMember({"text", "csv"}));
  eval_cmd->add_option("--first-frame", first_frame, "First frame included in the mean IoU");

  auto* plot_cmd = app.add_subcommand("plot", "Draw report series and segmentation overlays as PNG");
  std::string report_path;
  std::string plot_rec, plot_outputs;
  plot_cmd->add_option("report", report_path, "Report from eval")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", out_path, "Output directory")->required();
  plot_cmd->add_option("--recording", plot_rec, "Recording, for overlays")->check(CLI::ExistingFile);
  plot_cmd->add_option("--outputs", plot_outputs, "Outputs, for overlays")->check(CLI::ExistingFile);

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a recording");
  inspect_cmd->add_option("recording", rec_path, "Recording file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      save_recording(out_path, simulate(load_scene(scene_path), steps, sim_seed));
    } else if (*run_cmd) {
      const Config cfg = config_from(config_path, seed);
      const Recording rec = load_recording(rec_path);
      const auto result = run(rec, cfg);
      save_outputs(out_path, collect_outputs(rec, result, cfg.seed));
      for (std::size_t i = 0; i < result.size(); ++i) {
        if (!result[i].error.empty()) std::cerr << "step " << i << ": " << result[i].error << '\n';
      }
    } else if (*eval_cmd) {
      const Recording rec = load_recording(rec_path);
      const RunOutputs outputs = load_outputs(outputs_path);
      const EvalReport report = evaluate(rec, outputs, EvalOptions{first_frame});
      if (!out_path.empty()) save_report(out_path, report);
      print_report(std::cout, report, format == "csv");
    } else if (*plot_cmd) {
      const EvalReport report = load_report(report_path);
      if (report.empty()) {
        std::cerr << "plot: report has no frames\n";
        return 1;
      }
      std::filesystem::create_directories(out_path);
      tools::plot_series(report, out_path);
      if (!plot_rec.empty() && !plot_outputs.empty()) {
        tools::plot_overlays(load_recording(plot_rec), load_outputs(plot_outputs), out_path);
      }
    } else if (*inspect_cmd) {
      inspect(load_recording(rec_path), std::cout);
    }
  } catch (const LengthMismatch& e) {
    std::cerr << "length mismatch: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
