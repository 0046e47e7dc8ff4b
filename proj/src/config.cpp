#include "nfseg/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace nfseg {

namespace {

using Field = std::variant<double Config::*, int Config::*, std::uint64_t Config::*,
                           std::function<double&(Config&)>,
                           std::function<int&(Config&)>, std::function<std::size_t&(Config&)>>;

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"seed", &Config::seed},
      {"slice_duration", &Config::slice_duration},
      {"init_frames", &Config::init_frames},
      {"oversegment.k", &Config::k},
      {"oversegment.lambda", &Config::lambda},
      {"oversegment.flow_feature_scale", &Config::flow_feature_scale},
      {"kmeans.max_iter", &Config::kmeans_max_iter},
      {"kmeans.tol", &Config::kmeans_tol},
      {"smoothing.sigma", &Config::smoothing_sigma},
      {"background.warp_depth", &Config::warp_depth},
      {"background.match_radius", &Config::match_radius},
      {"background.match_fraction", &Config::match_fraction},
      {"background.alpha_min", &Config::alpha_min},
      {"background.alpha_max", &Config::alpha_max},
      {"background.reject_fraction", &Config::reject_fraction},
      {"background.reject_sigmas", &Config::reject_sigmas},
      {"svm.c", std::function<double&(Config&)>([](Config& c) -> double& { return c.svm.c; })},
      {"svm.iterations", std::function<int&(Config&)>([](Config& c) -> int& { return c.svm.iterations; })},
      {"svm.min_samples", std::function<std::size_t&(Config&)>([](Config& c) -> std::size_t& { return c.svm.min_samples; })},
      {"svm.min_agreement", std::function<double&(Config&)>([](Config& c) -> double& { return c.svm.min_agreement; })},
      {"merge.threshold", std::function<double&(Config&)>([](Config& c) -> double& { return c.merge.threshold; })},
      {"merge.lambda_r", std::function<double&(Config&)>([](Config& c) -> double& { return c.merge.lambda_r; })},
      {"merge.bg_penalty", std::function<double&(Config&)>([](Config& c) -> double& { return c.merge.bg_penalty; })},
      {"merge.bbox_dilation", std::function<double&(Config&)>([](Config& c) -> double& { return c.merge.bbox_dilation; })},
      {"merge.bg_like_threshold", std::function<double&(Config&)>([](Config& c) -> double& { return c.merge.bg_like_threshold; })},
      {"merge.tikhonov", &Config::tikhonov},
      {"merge.min_segment_events", std::function<std::size_t&(Config&)>([](Config& c) -> std::size_t& { return c.min_segment_events; })},
      {"merge.egomotion_misfit", &Config::egomotion_misfit},
      {"tracker.process_noise", std::function<double&(Config&)>([](Config& c) -> double& { return c.tracker.process_noise; })},
      {"tracker.measurement_noise", std::function<double&(Config&)>([](Config& c) -> double& { return c.tracker.measurement_noise; })},
      {"tracker.gate", std::function<double&(Config&)>([](Config& c) -> double& { return c.tracker.gate; })},
      {"tracker.max_misses", std::function<int&(Config&)>([](Config& c) -> int& { return c.tracker.max_misses; })},
      {"tracker.initial_velocity_var", std::function<double&(Config&)>([](Config& c) -> double& { return c.tracker.initial_velocity_var; })},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  std::istringstream is(text);
  T value{};
  is >> value;
  if (is.fail() || !(is >> std::ws).eof()) {
    throw std::runtime_error(where + ": cannot parse value '" + text + "'");
  }
  return value;
}

}  // namespace

Config parse_config(std::istream& in) {
  Config config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw std::runtime_error(where + ": unknown key '" + key + "'");

    std::visit(
        [&](auto&& field) {
          using F = std::decay_t<decltype(field)>;
          if constexpr (std::is_same_v<F, double Config::*>) {
            config.*field = parse_number<double>(value, where);
          } else if constexpr (std::is_same_v<F, int Config::*>) {
            config.*field = parse_number<int>(value, where);
          } else if constexpr (std::is_same_v<F, std::uint64_t Config::*>) {
            config.*field = parse_number<std::uint64_t>(value, where);
          } else if constexpr (std::is_same_v<F, std::function<double&(Config&)>>) {
            field(config) = parse_number<double>(value, where);
          } else if constexpr (std::is_same_v<F, std::function<int&(Config&)>>) {
            field(config) = parse_number<int>(value, where);
          } else {
            field(config) = parse_number<std::size_t>(value, where);
          }
        },
        it->second);
  }
  return config;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const Config& config) {
  Config copy = config;
  out << std::setprecision(17);
  for (const auto& [key, field] : fields()) {
    out << key << " = ";
    std::visit(
        [&](auto&& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_member_object_pointer_v<F>) {
            out << copy.*f;
          } else {
            out << f(copy);
          }
        },
        field);
    out << '\n';
  }
}

}  // namespace nfseg
