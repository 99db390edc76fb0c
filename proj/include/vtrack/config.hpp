#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vtrack/error.hpp"

namespace vtrack {

enum class MotionKind { cv, ctrv };
enum class AssignmentStrategy { greedy, hungarian };

inline std::string_view to_string(MotionKind k) { return k == MotionKind::cv ? "cv" : "ctrv"; }
inline std::string_view to_string(AssignmentStrategy s) {
  return s == AssignmentStrategy::greedy ? "greedy" : "hungarian";
}

struct RunConfig {
  // association
  double gate_iou = 0.3;
  double conf_high = 0.5;
  double conf_low = 0.1;
  double merge_iou = 0.7;
  AssignmentStrategy assignment = AssignmentStrategy::hungarian;
  // lifecycle
  int t_confirm = 3;
  int t_max = 30;
  // filter
  MotionKind kalman_model = MotionKind::cv;
  double q_scale = 0.05;
  double r_scale = 4.0;
  // spline
  double epsilon_deg = 30.0;
  int horizon = 30;
  int knots = 5;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline void require(bool ok, std::string_view key, std::string_view bound) {
  if (!ok) throw ConfigError("config key '" + std::string(key) + "' out of range: expected " +
                             std::string(bound));
}

}  // namespace detail

// Throws ConfigError naming the offending key.
inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.gate_iou > 0.0 && c.gate_iou <= 1.0, "gate_iou", "0 < gate_iou <= 1");
  require(c.conf_high >= 0.0 && c.conf_high <= 1.0, "conf_high", "0 <= conf_high <= 1");
  require(c.conf_low >= 0.0 && c.conf_low <= c.conf_high, "conf_low", "0 <= conf_low <= conf_high");
  require(c.merge_iou > 0.0 && c.merge_iou <= 1.0, "merge_iou", "0 < merge_iou <= 1");
  require(c.t_confirm >= 1, "t_confirm", "t_confirm >= 1");
  require(c.t_max >= 0, "t_max", "t_max >= 0");
  require(c.q_scale >= 0.0, "q_scale", "q_scale >= 0");
  require(c.r_scale > 0.0, "r_scale", "r_scale > 0");
  require(c.epsilon_deg > 0.0 && c.epsilon_deg <= 180.0, "epsilon_deg", "0 < epsilon_deg <= 180");
  require(c.horizon >= 1, "horizon", "horizon >= 1");
  require(c.knots >= 2, "knots", "knots >= 2");
}

inline nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{
      {"gate_iou", c.gate_iou},       {"conf_high", c.conf_high},
      {"conf_low", c.conf_low},       {"t_confirm", c.t_confirm},
      {"t_max", c.t_max},             {"kalman_model", to_string(c.kalman_model)},
      {"q_scale", c.q_scale},         {"r_scale", c.r_scale},
      {"epsilon_deg", c.epsilon_deg}, {"horizon", c.horizon},
      {"knots", c.knots},             {"merge_iou", c.merge_iou},
      {"assignment", to_string(c.assignment)},
  };
}

// Parses a JSON config. Absent keys keep their defaults; unknown keys are
// rejected when strict is set.
inline RunConfig load_config(std::string_view text, bool strict = true) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  for (const auto& [key, value] : doc.items()) {
    auto number = [&]() -> double {
      if (!value.is_number()) throw ConfigError("config key '" + key + "' must be a number");
      return value.get<double>();
    };
    auto integer = [&]() -> int {
      if (!value.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
      const auto v = value.get<std::int64_t>();
      if (v < -1'000'000'000 || v > 1'000'000'000) {
        throw ConfigError("config key '" + key + "' out of range");
      }
      return static_cast<int>(v);
    };
    auto text_value = [&]() -> std::string {
      if (!value.is_string()) throw ConfigError("config key '" + key + "' must be a string");
      return value.get<std::string>();
    };

    if (key == "gate_iou") c.gate_iou = number();
    else if (key == "conf_high") c.conf_high = number();
    else if (key == "conf_low") c.conf_low = number();
    else if (key == "merge_iou") c.merge_iou = number();
    else if (key == "t_confirm") c.t_confirm = integer();
    else if (key == "t_max") c.t_max = integer();
    else if (key == "q_scale") c.q_scale = number();
    else if (key == "r_scale") c.r_scale = number();
    else if (key == "epsilon_deg") c.epsilon_deg = number();
    else if (key == "horizon") c.horizon = integer();
    else if (key == "knots") c.knots = integer();
    else if (key == "kalman_model") {
      const auto s = text_value();
      if (s == "cv") c.kalman_model = MotionKind::cv;
      else if (s == "ctrv") c.kalman_model = MotionKind::ctrv;
      else throw ConfigError("config key 'kalman_model' must be \"cv\" or \"ctrv\"");
    } else if (key == "assignment") {
      const auto s = text_value();
      if (s == "greedy") c.assignment = AssignmentStrategy::greedy;
      else if (s == "hungarian") c.assignment = AssignmentStrategy::hungarian;
      else throw ConfigError("config key 'assignment' must be \"greedy\" or \"hungarian\"");
    } else if (strict) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

}  // namespace vtrack
