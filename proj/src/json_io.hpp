#pragma once

// Small helpers shared by the JSON writers and readers. Non-finite numbers
// are written as null and read back as NaN.

#include "nfseg/types.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <string>

namespace nfseg::json_io {

using Json = nlohmann::ordered_json;

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename Derived>
Json vec(const Eigen::MatrixBase<Derived>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

inline double number(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline Vec3 vec3(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return Vec3(number(j[0]), number(j[1]), number(j[2]));
}

inline Vec2 vec2(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("expected a 2-vector");
  return Vec2(number(j[0]), number(j[1]));
}

inline Json parse(std::istream& in, const char* what) {
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("cannot parse ") + what + ": " + e.what());
  }
}

}  // namespace nfseg::json_io
