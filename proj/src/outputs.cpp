#include "nfseg/outputs.hpp"

#include "json_io.hpp"

#include <fstream>

namespace nfseg {

using json_io::Json;

RunOutputs collect_outputs(const Recording& recording, const std::vector<RunStep>& steps, std::uint64_t seed) {
  RunOutputs out;
  out.seed = seed;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    OutputStep o;
    o.index = static_cast<int>(i);
    if (i < recording.slices.size()) {
      o.t_start = recording.slices[i].t_start;
      o.t_end = recording.slices[i].t_end;
    }
    o.error = s.error;
    o.reinitialized = s.output.reinitialized;
    o.translation_valid = s.output.translation_valid;
    o.egomotion = s.output.egomotion;
    o.translation_direction = s.output.translation_direction;
    o.labels = s.output.labels;
    o.segments = s.output.segments;
    out.steps.push_back(std::move(o));
  }
  return out;
}

void write_outputs(std::ostream& out, const RunOutputs& outputs) {
  Json root;
  root["format"] = "nfseg-outputs";
  root["version"] = 1;
  root["seed"] = outputs.seed;
  Json steps = Json::array();
  for (const auto& s : outputs.steps) {
    Json j;
    j["index"] = s.index;
    j["t_start"] = s.t_start;
    j["t_end"] = s.t_end;
    j["error"] = s.error;
    j["reinitialized"] = s.reinitialized;
    j["translation_valid"] = s.translation_valid;
    j["egomotion"] = {{"t", json_io::vec(s.egomotion.t)}, {"w", json_io::vec(s.egomotion.w)}};
    j["translation_direction"] = json_io::vec(s.translation_direction);
    Json segs = Json::array();
    for (const auto& seg : s.segments) {
      Json js;
      js["id"] = seg.id;
      js["t"] = json_io::vec(seg.motion.t);
      js["w"] = json_io::vec(seg.motion.w);
      js["event_count"] = seg.event_count;
      js["centroid_px"] = json_io::vec(seg.centroid_px);
      js["bbox"] = {seg.bbox.min_x, seg.bbox.min_y, seg.bbox.max_x, seg.bbox.max_y};
      segs.push_back(std::move(js));
    }
    j["segments"] = std::move(segs);
    j["labels"] = s.labels;
    steps.push_back(std::move(j));
  }
  root["steps"] = std::move(steps);
  out << root.dump(1) << '\n';
}

RunOutputs read_outputs(std::istream& in) {
  const Json root = json_io::parse(in, "outputs");
  if (root.value("format", std::string()) != "nfseg-outputs") {
    throw FormatError("not an outputs file");
  }
  RunOutputs out;
  try {
    out.seed = root.at("seed").get<std::uint64_t>();
    for (const auto& j : root.at("steps")) {
      OutputStep s;
      s.index = j.at("index").get<int>();
      s.t_start = json_io::number(j.at("t_start"));
      s.t_end = json_io::number(j.at("t_end"));
      s.error = j.at("error").get<std::string>();
      s.reinitialized = j.at("reinitialized").get<bool>();
      s.translation_valid = j.at("translation_valid").get<bool>();
      s.egomotion.t = json_io::vec3(j.at("egomotion").at("t"));
      s.egomotion.w = json_io::vec3(j.at("egomotion").at("w"));
      s.translation_direction = json_io::vec3(j.at("translation_direction"));
      s.labels = j.at("labels").get<std::vector<int>>();
      for (const auto& js : j.at("segments")) {
        SegmentMotion seg;
        seg.id = js.at("id").get<int>();
        seg.motion.t = json_io::vec3(js.at("t"));
        seg.motion.w = json_io::vec3(js.at("w"));
        seg.event_count = js.at("event_count").get<std::size_t>();
        seg.centroid_px = json_io::vec2(js.at("centroid_px"));
        const auto& b = js.at("bbox");
        seg.bbox = BBox{json_io::number(b.at(0)), json_io::number(b.at(1)), json_io::number(b.at(2)),
                        json_io::number(b.at(3))};
        s.segments.push_back(seg);
      }
      out.steps.push_back(std::move(s));
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed outputs: ") + e.what());
  }
  return out;
}

void save_outputs(const std::string& path, const RunOutputs& outputs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write outputs '" + path + "'");
  write_outputs(out, outputs);
}

RunOutputs load_outputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open outputs '" + path + "'");
  return read_outputs(in);
}

}  // namespace nfseg
