#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrack/config.hpp"
#include "vtrack/ingest.hpp"
#include "vtrack/metrics.hpp"
#include "vtrack/spline.hpp"
#include "vtrack/tracker.hpp"

namespace vtrack {

inline constexpr std::string_view kVersion = "0.3.0";

inline std::map<std::int64_t, std::vector<AnchorPoint>> anchors_by_track(
    const std::map<std::int64_t, std::vector<TrackRecord>>& tracks) {
  std::map<std::int64_t, std::vector<AnchorPoint>> out;
  for (const auto& [id, recs] : tracks) {
    auto& seq = out[id];
    for (const auto& r : recs) seq.push_back(r.anchor);
  }
  return out;
}

inline std::map<std::int64_t, std::vector<AnchorPoint>> anchors_by_track(const std::vector<Track>& tracks) {
  std::map<std::int64_t, std::vector<AnchorPoint>> out;
  for (const auto& t : tracks) out[t.id] = t.anchors();
  return out;
}

inline GroundTruth boxes_by_track(const std::map<std::int64_t, std::vector<TrackRecord>>& tracks) {
  GroundTruth out;
  for (const auto& [id, recs] : tracks) {
    auto& seq = out[id];
    for (const auto& r : recs) seq.emplace_back(r.frame, r.box);
  }
  return out;
}

inline GroundTruth boxes_by_track(const std::vector<Track>& tracks) {
  GroundTruth out;
  for (const auto& t : tracks) {
    auto& seq = out[t.id];
    for (const auto& h : t.history) seq.emplace_back(h.frame, h.box);
  }
  return out;
}

struct PredictionRun {
  std::vector<PredictionRow> rows;
  std::size_t skipped_tracks = 0;  // fewer than 2 points
};

// Emits a forecast at every frame of every track that has at least two
// points so far, using only the history up to that frame.
inline PredictionRun predict_tracks(const std::map<std::int64_t, std::vector<AnchorPoint>>& tracks,
                                    const RunConfig& cfg, int horizon) {
  if (horizon < 1) throw ConfigError("config key 'horizon' out of range: expected horizon >= 1");
  const auto params = SplineParams::from_config(cfg);
  const auto model = MotionModel::from_config(cfg);
  PredictionRun out;
  for (const auto& [id, history] : tracks) {
    if (history.size() < 2) {
      ++out.skipped_tracks;
      continue;
    }
    for (std::size_t n = 2; n <= history.size(); ++n) {
      const auto pred =
          predict(std::span(history.data(), n), horizon, params, std::nullopt, model);
      for (const auto& p : pred.points) out.rows.push_back({pred.origin_frame, id, p.frame, p.p});
    }
  }
  return out;
}

// Scores predictions against ground truth. With track boxes available, track
// ids are mapped to identities first and identity metrics are filled in.
inline EvalReport evaluate_run(std::span<const PredictionRow> preds, const GroundTruth& gt,
                               const GroundTruth* track_boxes = nullptr) {
  const auto truth = anchors_of(gt);
  if (!track_boxes) return evaluate(preds, truth);
  const auto ident = match_identities(*track_boxes, gt);
  auto report = evaluate(preds, truth, &ident.track_to_gt);
  report.id_switches = ident.id_switches;
  report.track_coverage = ident.coverage();
  return report;
}

// FNV-1a, 64 bit; used for config digests in run manifests.
inline std::string digest(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace vtrack
