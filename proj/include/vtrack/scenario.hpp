#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtrack/core.hpp"
#include "vtrack/error.hpp"
#include "vtrack/ingest.hpp"
#include "vtrack/random.hpp"
#include "vtrack/spline.hpp"

namespace vtrack {

enum class PathKind { line, arc, spline };

// Trajectory of one box center plus its extent schedule
// (width + growth.x * (frame - first_frame), same for height).
struct PathSpec {
  PathKind kind = PathKind::line;
  // line
  Vec2 start = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();  // px / frame
  // arc: center + radius * (cos a, sin a), a = phase + angular_rate * frame
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double angular_rate = 0.0;  // rad / frame
  double phase = 0.0;
  // spline: Catmull-Rom style Hermite curve through (frame, x, y) waypoints
  std::vector<AnchorPoint> waypoints;

  double width = 60.0;
  double height = 24.0;
  Vec2 growth = Vec2::Zero();
  FrameIndex first_frame = 0;
  std::optional<FrameIndex> last_frame;
};

struct CorruptionSpec {
  double position_sigma = 0.0;
  double extent_sigma = 0.0;
  double dropout = 0.0;
  double false_positives_per_frame = 0.0;
  double shake_amplitude = 0.0;
  double shake_period = 60.0;  // frames
  double shake_jitter = 0.0;
  // Share of true detections reported in the weak band [conf_low, conf_high).
  double low_confidence_fraction = 0.0;
  // Confident true detections draw from [1 - spread * (1 - conf_high), 1].
  double confidence_spread = 0.0;
  double conf_low = 0.1;
  double conf_high = 0.5;
};

struct Occlusion {
  std::int64_t vessel = 0;
  FrameIndex first = 0;
  FrameIndex length = 0;
};

struct Scenario {
  std::string name = "scenario";
  std::string category = "synthetic";
  FrameSize frame_size;
  FrameIndex frames = 100;
  std::vector<PathSpec> vessels;
  CorruptionSpec corruption;
  std::vector<Occlusion> occlusions;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::optional<Vec2> path_position(const PathSpec& p, FrameIndex f) {
  if (f < p.first_frame || (p.last_frame && f > *p.last_frame)) return std::nullopt;
  const double t = static_cast<double>(f);
  switch (p.kind) {
    case PathKind::line:
      return Vec2(p.start + p.velocity * static_cast<double>(f - p.first_frame));
    case PathKind::arc: {
      const double a = p.phase + p.angular_rate * t;
      return Vec2(p.center + p.radius * Vec2(std::cos(a), std::sin(a)));
    }
    case PathKind::spline: {
      const auto& w = p.waypoints;
      if (f < w.front().frame || f > w.back().frame) return std::nullopt;
      const auto vel = estimate_velocities(w);
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        if (f > w[i + 1].frame) continue;
        const double len = static_cast<double>(w[i + 1].frame - w[i].frame);
        const auto cubic = HermiteCubic::fit(w[i].p, w[i + 1].p, vel[i] * len, vel[i + 1] * len);
        return cubic(static_cast<double>(f - w[i].frame) / len);
      }
      return w.back().p;
    }
  }
  return std::nullopt;
}

inline void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid scenario: " + what);
}

}  // namespace detail

inline void validate(const CorruptionSpec& c) {
  using detail::check;
  check(c.position_sigma >= 0.0 && c.extent_sigma >= 0.0 && c.shake_jitter >= 0.0,
        "noise sigmas must be >= 0");
  check(c.dropout >= 0.0 && c.dropout <= 1.0, "dropout must lie in [0, 1]");
  check(c.low_confidence_fraction >= 0.0 && c.low_confidence_fraction <= 1.0,
        "low_confidence_fraction must lie in [0, 1]");
  check(c.confidence_spread >= 0.0 && c.confidence_spread <= 1.0,
        "confidence_spread must lie in [0, 1]");
  check(c.false_positives_per_frame >= 0.0, "false_positives_per_frame must be >= 0");
  check(c.shake_amplitude >= 0.0, "shake_amplitude must be >= 0");
  check(c.shake_period > 0.0, "shake_period must be > 0");
  check(0.0 <= c.conf_low && c.conf_low <= c.conf_high && c.conf_high <= 1.0,
        "0 <= conf_low <= conf_high <= 1 required");
}

// Every vessel center must stay inside the frame rectangle scaled by 2 about
// its center, and every extent must stay positive.
inline void validate(const Scenario& s) {
  using detail::check;
  check(s.frames >= 1, "frames must be >= 1");
  check(s.frame_size.width > 0 && s.frame_size.height > 0, "frame size must be positive");
  validate(s.corruption);
  const double w = s.frame_size.width, h = s.frame_size.height;
  for (std::size_t v = 0; v < s.vessels.size(); ++v) {
    const auto& p = s.vessels[v];
    const std::string tag = "vessel " + std::to_string(v);
    if (p.kind == PathKind::spline) {
      check(p.waypoints.size() >= 2, tag + ": spline needs >= 2 waypoints");
      for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
        check(p.waypoints[i].frame > p.waypoints[i - 1].frame,
              tag + ": waypoint frames must increase");
      }
    }
    check(p.width > 0.0 && p.height > 0.0, tag + ": extent must be positive");
    for (FrameIndex f = 0; f < s.frames; ++f) {
      const auto c = detail::path_position(p, f);
      if (!c) continue;
      check(c->allFinite(), tag + ": non-finite position");
      check(c->x() >= -w / 2 && c->x() <= 1.5 * w && c->y() >= -h / 2 && c->y() <= 1.5 * h,
            tag + ": path leaves twice the frame bounds at frame " + std::to_string(f));
      const double age = static_cast<double>(f - p.first_frame);
      check(p.width + p.growth.x() * age > 0.0 && p.height + p.growth.y() * age > 0.0,
            tag + ": extent shrinks to zero at frame " + std::to_string(f));
    }
  }
  for (const auto& o : s.occlusions) {
    check(o.vessel >= 0 && o.vessel < static_cast<std::int64_t>(s.vessels.size()),
          "occlusion names an unknown vessel");
  }
}

// Noise-free boxes keyed by vessel index.
inline GroundTruth generate_truth(const Scenario& s) {
  validate(s);
  GroundTruth gt;
  for (std::size_t v = 0; v < s.vessels.size(); ++v) {
    const auto& p = s.vessels[v];
    std::vector<std::pair<FrameIndex, BoundingBox>> seq;
    for (FrameIndex f = 0; f < s.frames; ++f) {
      const auto c = detail::path_position(p, f);
      if (!c) continue;
      const double age = static_cast<double>(f - p.first_frame);
      seq.emplace_back(f, BoundingBox(*c, p.width + p.growth.x() * age,
                                      p.height + p.growth.y() * age));
    }
    if (!seq.empty()) gt[static_cast<std::int64_t>(v)] = std::move(seq);
  }
  return gt;
}

// Removes `identity` on frames [first, first + length). An identity left
// with no boxes disappears from the map.
inline GroundTruth occlusion_window(GroundTruth truth, std::int64_t identity, FrameIndex first,
                                    FrameIndex length, FrameIndex frame_count) {
  if (length < 0 || first < 0 || first + length > frame_count) {
    throw std::invalid_argument("occlusion window lies outside the scenario frame range");
  }
  const auto it = truth.find(identity);
  if (it == truth.end()) throw std::invalid_argument("occlusion names an unknown identity");
  std::erase_if(it->second, [&](const auto& e) { return e.first >= first && e.first < first + length; });
  if (it->second.empty()) truth.erase(it);
  return truth;
}

// Camera shake offset for a frame before jitter: a sinusoid on x and half
// amplitude at double frequency on y.
inline Vec2 shake_offset(const CorruptionSpec& c, FrameIndex f) {
  if (c.shake_amplitude == 0.0) return Vec2::Zero();
  const double phi = 2.0 * M_PI * static_cast<double>(f) / c.shake_period;
  return c.shake_amplitude * Vec2(std::sin(phi), 0.5 * std::sin(2.0 * phi));
}

// Turns truth into a detection stream over frames [0, frame_count).
//
// Random draws, in order, per frame f:
//   jitter_x, jitter_y                                   normal
//   for each identity with a box at f, ascending id:
//     drop, noise_x, noise_y, noise_w, noise_h, tier, conf
//   false-positive count fraction                        uniform
//   for each false positive: x, y, w, h, conf            uniform
// The draw count never depends on a dropout decision.
inline DetectionStream corrupt(const GroundTruth& truth, const CorruptionSpec& c, FrameSize size,
                               FrameIndex frame_count, std::uint64_t seed) {
  validate(c);
  Pcg32 rng(seed);
  std::map<FrameIndex, std::vector<std::pair<std::int64_t, const BoundingBox*>>> by_frame;
  for (const auto& [id, seq] : truth) {
    for (const auto& [k, b] : seq) by_frame[k].emplace_back(id, &b);
  }

  DetectionStream out;
  out.frame_size = size;
  for (FrameIndex f = 0; f < frame_count; ++f) {
    auto& fd = out.frames[f];
    fd.frame = f;
    const double jx = rng.normal() * c.shake_jitter;
    const double jy = rng.normal() * c.shake_jitter;
    const Vec2 offset = shake_offset(c, f) + Vec2(jx, jy);

    if (const auto it = by_frame.find(f); it != by_frame.end()) {
      for (const auto& [id, box] : it->second) {
        const double drop = rng.uniform();
        const double nx = rng.normal() * c.position_sigma;
        const double ny = rng.normal() * c.position_sigma;
        const double nw = rng.normal() * c.extent_sigma;
        const double nh = rng.normal() * c.extent_sigma;
        const double tier = rng.uniform();
        const double u = rng.uniform();
        if (drop < c.dropout) continue;
        const double conf = tier < c.low_confidence_fraction
                                ? c.conf_low + u * (c.conf_high - c.conf_low)
                                : 1.0 - c.confidence_spread * u * (1.0 - c.conf_high);
        const BoundingBox b(box->center() + offset + Vec2(nx, ny),
                            std::max(1.0, box->width() + nw), std::max(1.0, box->height() + nh));
        if (!within_expanded_frame(b, size)) continue;
        fd.detections.push_back(Detection{b, "boat", conf, f});
      }
    }

    const double whole = std::floor(c.false_positives_per_frame);
    const double extra = rng.uniform() < c.false_positives_per_frame - whole ? 1.0 : 0.0;
    const auto n_fp = static_cast<int>(whole + extra);
    for (int i = 0; i < n_fp; ++i) {
      const double x = rng.uniform(0.0, size.width);
      const double y = rng.uniform(0.0, size.height);
      const double w = rng.uniform(20.0, 120.0);
      const double h = rng.uniform(10.0, 60.0);
      const double conf = rng.uniform(c.conf_low, c.conf_high);
      fd.detections.push_back(Detection{BoundingBox(Vec2(x, y), w, h), "boat", conf, f});
    }
  }
  return out;
}

// Truth used for detections: every configured occlusion applied.
inline GroundTruth visible_truth(const Scenario& s, GroundTruth truth) {
  for (const auto& o : s.occlusions) {
    if (truth.count(o.vessel) == 0) continue;
    truth = occlusion_window(std::move(truth), o.vessel, o.first, o.length, s.frames);
  }
  return truth;
}

inline DetectionStream synthesize(const Scenario& s) {
  return corrupt(visible_truth(s, generate_truth(s)), s.corruption, s.frame_size, s.frames, s.seed);
}

// ---- scenario.json --------------------------------------------------------

namespace detail {

inline Vec2 vec2_from(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(std::string("scenario key '") + key + "' must be [x, y]");
  }
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

inline void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> keys,
                               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

inline nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }

inline std::string_view to_string(PathKind k) {
  switch (k) {
    case PathKind::line: return "line";
    case PathKind::arc: return "arc";
    case PathKind::spline: return "spline";
  }
  return "?";
}

}  // namespace detail

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json vessels = nlohmann::json::array();
  for (const auto& p : s.vessels) {
    nlohmann::json v{{"kind", detail::to_string(p.kind)},
                     {"width", p.width},
                     {"height", p.height},
                     {"growth", detail::vec2_json(p.growth)},
                     {"first_frame", p.first_frame}};
    if (p.last_frame) v["last_frame"] = *p.last_frame;
    switch (p.kind) {
      case PathKind::line:
        v["start"] = detail::vec2_json(p.start);
        v["velocity"] = detail::vec2_json(p.velocity);
        break;
      case PathKind::arc:
        v["center"] = detail::vec2_json(p.center);
        v["radius"] = p.radius;
        v["angular_rate"] = p.angular_rate;
        v["phase"] = p.phase;
        break;
      case PathKind::spline: {
        nlohmann::json wps = nlohmann::json::array();
        for (const auto& w : p.waypoints) wps.push_back({w.frame, w.p.x(), w.p.y()});
        v["waypoints"] = wps;
        break;
      }
    }
    vessels.push_back(v);
  }
  const auto& c = s.corruption;
  nlohmann::json occ = nlohmann::json::array();
  for (const auto& o : s.occlusions) {
    occ.push_back({{"vessel", o.vessel}, {"first", o.first}, {"length", o.length}});
  }
  return nlohmann::json{
      {"name", s.name},
      {"category", s.category},
      {"frame_width", s.frame_size.width},
      {"frame_height", s.frame_size.height},
      {"frames", s.frames},
      {"seed", s.seed},
      {"vessels", vessels},
      {"corruption",
       {{"position_sigma", c.position_sigma},
        {"extent_sigma", c.extent_sigma},
        {"dropout", c.dropout},
        {"false_positives_per_frame", c.false_positives_per_frame},
        {"shake_amplitude", c.shake_amplitude},
        {"shake_period", c.shake_period},
        {"shake_jitter", c.shake_jitter},
        {"low_confidence_fraction", c.low_confidence_fraction},
        {"confidence_spread", c.confidence_spread},
        {"conf_low", c.conf_low},
        {"conf_high", c.conf_high}}},
      {"occlusions", occ},
  };
}

// Parses scenario JSON; absent keys keep defaults, unknown keys are rejected. Throws ConfigError on
// malformed documents and std::invalid_argument on invalid scenarios.
inline Scenario load_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario s;
  try {
    detail::require_known_keys(doc, {"name", "category", "frame_width", "frame_height", "frames", "seed",
                                     "vessels", "corruption", "occlusions"},
                               "scenario");
    s.name = doc.value("name", s.name);
    s.category = doc.value("category", s.category);
    s.frame_size.width = doc.value("frame_width", s.frame_size.width);
    s.frame_size.height = doc.value("frame_height", s.frame_size.height);
    s.frames = doc.value("frames", s.frames);
    s.seed = doc.value("seed", s.seed);
    for (const auto& v : doc.value("vessels", nlohmann::json::array())) {
      detail::require_known_keys(v, {"kind", "start", "velocity", "center", "radius", "angular_rate",
                                     "phase", "waypoints", "width", "height", "growth", "first_frame",
                                     "last_frame"},
                                 "vessel");
      PathSpec p;
      const auto kind = v.value("kind", std::string("line"));
      if (kind == "line") {
        p.kind = PathKind::line;
        if (v.contains("start")) p.start = detail::vec2_from(v["start"], "start");
        if (v.contains("velocity")) p.velocity = detail::vec2_from(v["velocity"], "velocity");
      } else if (kind == "arc") {
        p.kind = PathKind::arc;
        if (v.contains("center")) p.center = detail::vec2_from(v["center"], "center");
        p.radius = v.value("radius", p.radius);
        p.angular_rate = v.value("angular_rate", p.angular_rate);
        p.phase = v.value("phase", p.phase);
      } else if (kind == "spline") {
        p.kind = PathKind::spline;
        for (const auto& w : v.at("waypoints")) {
          if (!w.is_array() || w.size() != 3) throw ConfigError("waypoints must be [frame, x, y]");
          p.waypoints.push_back({Vec2(w[1].get<double>(), w[2].get<double>()),
                                 w[0].get<FrameIndex>()});
        }
        if (!p.waypoints.empty()) p.first_frame = p.waypoints.front().frame;
      } else {
        throw ConfigError("unknown vessel kind '" + kind + "'");
      }
      p.width = v.value("width", p.width);
      p.height = v.value("height", p.height);
      if (v.contains("growth")) p.growth = detail::vec2_from(v["growth"], "growth");
      p.first_frame = v.value("first_frame", p.first_frame);
      if (v.contains("last_frame")) p.last_frame = v["last_frame"].get<FrameIndex>();
      s.vessels.push_back(std::move(p));
    }
    if (doc.contains("corruption")) {
      const auto& j = doc["corruption"];
      detail::require_known_keys(j, {"position_sigma", "extent_sigma", "dropout", "false_positives_per_frame",
                                     "shake_amplitude", "shake_period", "shake_jitter",
                                     "low_confidence_fraction", "confidence_spread", "conf_low", "conf_high"},
                                 "corruption");
      auto& c = s.corruption;
      c.position_sigma = j.value("position_sigma", c.position_sigma);
      c.extent_sigma = j.value("extent_sigma", c.extent_sigma);
      c.dropout = j.value("dropout", c.dropout);
      c.false_positives_per_frame = j.value("false_positives_per_frame", c.false_positives_per_frame);
      c.shake_amplitude = j.value("shake_amplitude", c.shake_amplitude);
      c.shake_period = j.value("shake_period", c.shake_period);
      c.shake_jitter = j.value("shake_jitter", c.shake_jitter);
      c.low_confidence_fraction = j.value("low_confidence_fraction", c.low_confidence_fraction);
      c.confidence_spread = j.value("confidence_spread", c.confidence_spread);
      c.conf_low = j.value("conf_low", c.conf_low);
      c.conf_high = j.value("conf_high", c.conf_high);
    }
    for (const auto& o : doc.value("occlusions", nlohmann::json::array())) {
      detail::require_known_keys(o, {"vessel", "first", "length"}, "occlusion");
      s.occlusions.push_back({o.at("vessel").get<std::int64_t>(), o.at("first").get<FrameIndex>(),
                              o.at("length").get<FrameIndex>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  validate(s);
  return s;
}

}  // namespace vtrack
