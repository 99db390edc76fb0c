#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vtrack/assignment.hpp"
#include "vtrack/config.hpp"
#include "vtrack/core.hpp"
#include "vtrack/error.hpp"
#include "vtrack/ingest.hpp"
#include "vtrack/kalman.hpp"
#include "vtrack/text.hpp"

namespace vtrack {

enum class TrackStatus { tentative, confirmed, lost };

inline std::string_view to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::tentative: return "tentative";
    case TrackStatus::confirmed: return "confirmed";
    case TrackStatus::lost: return "lost";
  }
  return "?";
}

inline std::optional<TrackStatus> parse_track_status(std::string_view s) {
  if (s == "tentative") return TrackStatus::tentative;
  if (s == "confirmed") return TrackStatus::confirmed;
  if (s == "lost") return TrackStatus::lost;
  return std::nullopt;
}

struct TrackPoint {
  FrameIndex frame;
  BoundingBox box;      // merged detection
  AnchorPoint anchor;   // filtered contact point after the update
  TrackStatus status;  // status right after this point was merged
};

struct Track {
  std::int64_t id = 0;
  std::vector<TrackPoint> history;
  KalmanState kalman;
  TrackStatus status = TrackStatus::tentative;
  int frames_since_update = 0;
  int hits = 0;
  bool ever_confirmed = false;

  const TrackPoint& last() const { return history.back(); }

  // Box at the filter's current position with the last observed extent.
  BoundingBox predicted_box() const {
    return box_from_anchor(kalman.position(), last().box.width(), last().box.height());
  }

  std::vector<AnchorPoint> anchors() const {
    std::vector<AnchorPoint> out;
    out.reserve(history.size());
    for (const auto& h : history) out.push_back(h.anchor);
    return out;
  }
};

struct TrackerState {
  std::vector<Track> tracks;  // ascending id
  std::int64_t next_id = 0;
  std::optional<FrameIndex> current_frame;
};

// Plausibility that a detection belongs to a track; <= 0 means never merge.
using Plausibility = std::function<double(const Detection&, const Track&)>;

// IoU against the track's predicted box, zeroed below the gate.
inline double plausibility(const Detection& d, const Track& t, double gate_iou) {
  const double s = iou(d.box, t.predicted_box());
  return s < gate_iou ? 0.0 : s;
}

inline bool deletion_filter(const Track& t, const RunConfig& cfg) {
  if (t.frames_since_update > cfg.t_max) return true;
  return t.status == TrackStatus::tentative && t.frames_since_update > 0;
}

namespace detail {

inline Track spawn_track(std::int64_t id, const Detection& d, FrameIndex frame,
                         const RunConfig& cfg) {
  Track t;
  t.id = id;
  t.hits = 1;
  t.status = t.hits >= cfg.t_confirm ? TrackStatus::confirmed : TrackStatus::tentative;
  t.ever_confirmed = t.status == TrackStatus::confirmed;
  const auto anchor = anchor_point(d.box, frame);
  t.kalman = initial_state(MotionModel::from_config(cfg), anchor.p);
  t.history.push_back({frame, d.box, anchor, t.status});
  return t;
}

inline void merge_into(Track& t, const Detection& d, FrameIndex frame, const RunConfig& cfg) {
  t.kalman = ekf_update(t.kalman, anchor_of(d.box));
  const AnchorPoint anchor{t.kalman.position(), frame};
  t.frames_since_update = 0;
  ++t.hits;
  if (t.status == TrackStatus::lost ||
      (t.status == TrackStatus::tentative && t.hits >= cfg.t_confirm)) {
    t.status = TrackStatus::confirmed;
  }
  t.ever_confirmed = t.ever_confirmed || t.status == TrackStatus::confirmed;
  t.history.push_back({frame, d.box, anchor, t.status});
}

inline Matching associate(const std::vector<Detection>& dets, std::span<const std::size_t> det_idx,
                          const std::vector<Track>& tracks, std::span<const std::size_t> track_idx,
                          const Plausibility& score, AssignmentStrategy strategy) {
  ScoreMatrix s(static_cast<Eigen::Index>(det_idx.size()),
                static_cast<Eigen::Index>(track_idx.size()));
  std::vector<std::int64_t> ids;
  ids.reserve(track_idx.size());
  for (auto k : track_idx) ids.push_back(tracks[k].id);
  for (std::size_t i = 0; i < det_idx.size(); ++i) {
    for (std::size_t j = 0; j < track_idx.size(); ++j) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          score(dets[det_idx[i]], tracks[track_idx[j]]);
    }
  }
  return assign(s, ids, strategy);
}

}  // namespace detail

// One frame of tracking-by-detection:
//   1. advance every track's filter to the new frame
//   2. merge heavily overlapping detections
//   3. match confident detections (e >= conf_high) to all tracks
//   4. match the tracks left over to weak detections (conf_low <= e < conf_high)
//   5. update matched tracks; unmatched confident detections start tentative tracks
//   6. unmatched tracks coast; tracks failing deletion_filter are dropped
// Dropped tracks are appended to `removed` when it is non-null.
inline TrackerState step(TrackerState state, const FrameDetections& frame, const RunConfig& cfg,
                         std::vector<Track>* removed = nullptr,
                         const Plausibility& score = {}) {
  if (state.current_frame && frame.frame <= *state.current_frame) {
    throw std::invalid_argument("frame " + std::to_string(frame.frame) +
                                " does not follow current frame " +
                                std::to_string(*state.current_frame));
  }
  const FrameIndex k = frame.frame;
  const int gap = state.current_frame ? static_cast<int>(k - *state.current_frame) : 1;
  const Plausibility h = score ? score : Plausibility([gate = cfg.gate_iou](const Detection& d, const Track& t) {
    return plausibility(d, t, gate);
  });

  for (auto& t : state.tracks) {
    for (int g = 0; g < gap; ++g) t.kalman = coast(t.kalman);
  }

  const auto dets = merge_detections(frame.detections, cfg.merge_iou);
  std::vector<std::size_t> high, low;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].confidence >= cfg.conf_high) high.push_back(i);
    else if (dets[i].confidence >= cfg.conf_low) low.push_back(i);
  }

  std::vector<std::size_t> all_tracks(state.tracks.size());
  std::iota(all_tracks.begin(), all_tracks.end(), std::size_t{0});
  std::vector<bool> track_matched(state.tracks.size(), false);
  std::vector<bool> high_matched(high.size(), false);

  const auto first = detail::associate(dets, high, state.tracks, all_tracks, h, cfg.assignment);
  for (const auto& [i, j] : first.pairs) {
    detail::merge_into(state.tracks[j], dets[high[i]], k, cfg);
    track_matched[j] = true;
    high_matched[i] = true;
  }

  std::vector<std::size_t> remaining;
  for (auto j : first.unmatched_tracks) remaining.push_back(j);
  const auto second = detail::associate(dets, low, state.tracks, remaining, h, cfg.assignment);
  for (const auto& [i, j] : second.pairs) {
    detail::merge_into(state.tracks[remaining[j]], dets[low[i]], k, cfg);
    track_matched[remaining[j]] = true;
  }

  for (std::size_t j = 0; j < state.tracks.size(); ++j) {
    if (track_matched[j]) continue;
    auto& t = state.tracks[j];
    t.frames_since_update += gap;
    if (t.status == TrackStatus::confirmed) t.status = TrackStatus::lost;
  }

  for (std::size_t i = 0; i < high.size(); ++i) {
    if (high_matched[i]) continue;
    state.tracks.push_back(detail::spawn_track(state.next_id++, dets[high[i]], k, cfg));
  }

  std::vector<Track> kept;
  kept.reserve(state.tracks.size());
  for (auto& t : state.tracks) {
    if (deletion_filter(t, cfg)) {
      if (removed) removed->push_back(std::move(t));
    } else {
      kept.push_back(std::move(t));
    }
  }
  state.tracks = std::move(kept);
  state.current_frame = k;
  return state;
}

// Runs the whole stream and returns every track that was ever confirmed,
// ordered by id, each with its full matched history.
inline std::vector<Track> run(const DetectionStream& stream, const RunConfig& cfg,
                              const Plausibility& score = {}) {
  TrackerState state;
  std::vector<Track> done;
  for (const auto& [k, fd] : stream.frames) {
    FrameDetections frame = fd;
    frame.frame = k;
    state = step(std::move(state), frame, cfg, &done, score);
  }
  for (auto& t : state.tracks) done.push_back(std::move(t));
  std::erase_if(done, [](const Track& t) { return !t.ever_confirmed; });
  std::sort(done.begin(), done.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return done;
}

// ---- tracks.csv -----------------------------------------------------------

inline constexpr std::string_view kTracksHeader =
    "frame,track_id,cx,cy,w,h,anchor_x,anchor_y,status";

// One row per merged detection, ordered by frame then track id.
inline std::string tracks_to_csv(const std::vector<Track>& tracks) {
  struct Row {
    FrameIndex frame;
    std::int64_t id;
    const TrackPoint* point;
  };
  std::vector<Row> rows;
  for (const auto& t : tracks) {
    for (const auto& h : t.history) rows.push_back({h.frame, t.id, &h});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
  std::string out(kTracksHeader);
  out += '\n';
  for (const auto& r : rows) {
    const auto& b = r.point->box;
    out += text::format(r.frame) + ',' + text::format(r.id);
    for (double v : {b.center().x(), b.center().y(), b.width(), b.height(), r.point->anchor.p.x(),
                     r.point->anchor.p.y()}) {
      out += ',' + text::format(v);
    }
    out += ',';
    out += to_string(r.point->status);
    out += '\n';
  }
  return out;
}

struct TrackRecord {
  FrameIndex frame;
  BoundingBox box;
  AnchorPoint anchor;
  TrackStatus status;
};

// Reads tracks.csv back into per-id, frame-sorted records.
inline std::map<std::int64_t, std::vector<TrackRecord>> parse_tracks_csv(std::string_view csv) {
  std::map<std::int64_t, std::map<FrameIndex, TrackRecord>> by_id;
  const auto all = text::lines(csv);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty()) continue;
    if (line == kTracksHeader) continue;
    const auto cols = text::split(line, ',');
    if (cols.size() != 9) throw ParseError(i + 1, "expected 9 columns in tracks file");
    const auto frame = text::to_int(cols[0]);
    const auto id = text::to_int(cols[1]);
    if (!frame || !id) throw ParseError(i + 1, "frame and track_id must be integers");
    double v[6];
    for (int c = 0; c < 6; ++c) {
      const auto d = text::to_double(cols[2 + c]);
      if (!d) throw ParseError(i + 1, "column " + std::to_string(3 + c) + " is not a number");
      v[c] = *d;
    }
    const auto status = parse_track_status(cols[8]);
    if (!status) throw ParseError(i + 1, "unknown track status");
    if (!(v[2] > 0.0) || !(v[3] > 0.0)) throw ParseError(i + 1, "box extent must be positive");
    TrackRecord rec{*frame, BoundingBox(Vec2(v[0], v[1]), v[2], v[3]),
                    AnchorPoint{Vec2(v[4], v[5]), *frame}, *status};
    if (!by_id[*id].emplace(*frame, rec).second) {
      throw ParseError(i + 1, "duplicate row for track " + std::to_string(*id));
    }
  }
  std::map<std::int64_t, std::vector<TrackRecord>> out;
  for (auto& [id, rows] : by_id) {
    auto& seq = out[id];
    for (auto& [f, rec] : rows) seq.push_back(rec);
  }
  return out;
}

}  // namespace vtrack
