#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtrack/core.hpp"
#include "vtrack/error.hpp"
#include "vtrack/ingest.hpp"
#include "vtrack/text.hpp"

namespace vtrack {

// One forecast position: emitted at origin_frame for track_id, about future_frame.
struct PredictionRow {
  FrameIndex origin_frame = 0;
  std::int64_t track_id = 0;
  FrameIndex future_frame = 0;
  Vec2 p = Vec2::Zero();
};

// Ground-truth anchor points by identity and frame.
using AnchorTruth = std::map<std::int64_t, std::map<FrameIndex, Vec2>>;

inline AnchorTruth anchors_of(const GroundTruth& gt) {
  AnchorTruth out;
  for (const auto& [id, seq] : gt) {
    auto& m = out[id];
    for (const auto& [k, box] : seq) m.emplace(k, anchor_of(box));
  }
  return out;
}

// Predictions joined with the truth at (track, future frame), in input order.
struct Pairing {
  std::vector<Vec2> residuals;  // prediction - truth
  std::vector<std::int64_t> track_of;
  std::vector<bool> final_step;  // last horizon step of its emission
  std::size_t unmatched = 0;
  std::size_t emissions = 0;
};

// `id_map`, when given, translates track ids to ground-truth identities;
// tracks absent from it stay unpaired.
inline Pairing pair_predictions(std::span<const PredictionRow> preds, const AnchorTruth& truth,
                                const std::map<std::int64_t, std::int64_t>* id_map = nullptr) {
  std::map<std::pair<std::int64_t, FrameIndex>, FrameIndex> last_future;
  for (const auto& r : preds) {
    auto [it, inserted] = last_future.emplace(std::pair{r.track_id, r.origin_frame}, r.future_frame);
    if (!inserted) it->second = std::max(it->second, r.future_frame);
  }
  Pairing out;
  out.emissions = last_future.size();
  for (const auto& r : preds) {
    auto id_it = truth.end();
    if (!id_map) {
      id_it = truth.find(r.track_id);
    } else if (const auto m = id_map->find(r.track_id); m != id_map->end()) {
      id_it = truth.find(m->second);
    }
    if (id_it == truth.end()) {
      ++out.unmatched;
      continue;
    }
    const auto f_it = id_it->second.find(r.future_frame);
    if (f_it == id_it->second.end()) {
      ++out.unmatched;
      continue;
    }
    out.residuals.push_back(r.p - f_it->second);
    out.track_of.push_back(r.track_id);
    out.final_step.push_back(last_future.at({r.track_id, r.origin_frame}) == r.future_frame);
  }
  return out;
}

// Mean Euclidean distance over all pairs; nullopt when nothing was paired.
inline std::optional<double> ade(const Pairing& p) {
  if (p.residuals.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : p.residuals) sum += r.norm();
  return sum / static_cast<double>(p.residuals.size());
}

// Mean Euclidean distance over the final horizon step of each emission.
inline std::optional<double> fde(const Pairing& p) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.residuals.size(); ++i) {
    if (!p.final_step[i]) continue;
    sum += p.residuals[i].norm();
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

// MAE and RMSE pool the x and y residuals into one set.
inline std::optional<double> mae(const Pairing& p) {
  if (p.residuals.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : p.residuals) sum += std::abs(r.x()) + std::abs(r.y());
  return sum / static_cast<double>(2 * p.residuals.size());
}

inline std::optional<double> rmse(const Pairing& p) {
  if (p.residuals.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : p.residuals) sum += r.x() * r.x() + r.y() * r.y();
  return std::sqrt(sum / static_cast<double>(2 * p.residuals.size()));
}

inline std::optional<double> ade(std::span<const PredictionRow> preds, const AnchorTruth& gts) {
  return ade(pair_predictions(preds, gts));
}
inline std::optional<double> fde(std::span<const PredictionRow> preds, const AnchorTruth& gts) {
  return fde(pair_predictions(preds, gts));
}
inline std::optional<double> mae(std::span<const PredictionRow> preds, const AnchorTruth& gts) {
  return mae(pair_predictions(preds, gts));
}
inline std::optional<double> rmse(std::span<const PredictionRow> preds, const AnchorTruth& gts) {
  return rmse(pair_predictions(preds, gts));
}

inline constexpr double kIdentityMatchIou = 0.5;

struct IdentityMatch {
  int id_switches = 0;
  std::size_t gt_boxes = 0;
  std::size_t matched_boxes = 0;
  std::map<std::int64_t, std::int64_t> track_to_gt;  // majority vote over matched frames

  std::optional<double> coverage() const {
    if (gt_boxes == 0) return std::nullopt;
    return static_cast<double>(matched_boxes) / static_cast<double>(gt_boxes);
  }
};

// Per frame, pairs ground-truth boxes with track boxes one-to-one (only
// IoU > 0.5). An identity stays with the track it was last matched to while
// that pair clears the threshold; the remaining boxes are paired by
// descending IoU. An id
// switch is counted whenever an identity's matched track differs from the
// one it was last matched to.
inline IdentityMatch match_identities(const GroundTruth& tracks, const GroundTruth& gt) {
  std::map<FrameIndex, std::vector<std::pair<std::int64_t, const BoundingBox*>>> gt_at, tr_at;
  for (const auto& [id, seq] : gt) {
    for (const auto& [k, b] : seq) gt_at[k].emplace_back(id, &b);
  }
  for (const auto& [id, seq] : tracks) {
    for (const auto& [k, b] : seq) tr_at[k].emplace_back(id, &b);
  }

  IdentityMatch out;
  std::map<std::int64_t, std::int64_t> last;  // identity -> track it was last matched to
  std::map<std::int64_t, std::map<std::int64_t, std::size_t>> votes;
  for (const auto& [k, gts] : gt_at) {
    out.gt_boxes += gts.size();
    const auto tr_it = tr_at.find(k);
    if (tr_it == tr_at.end()) continue;
    const auto& trs = tr_it->second;
    struct Cand {
      double iou;
      std::size_t g, t;
    };
    std::vector<Cand> cands;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      for (std::size_t t = 0; t < trs.size(); ++t) {
        const double v = iou(*gts[g].second, *trs[t].second);
        if (v > kIdentityMatchIou) cands.push_back({v, g, t});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      return std::tie(b.iou, a.g, a.t) < std::tie(a.iou, b.g, b.t);
    });
    std::vector<bool> g_used(gts.size(), false), t_used(trs.size(), false);
    std::vector<Cand> chosen;
    for (const auto& c : cands) {  // standing correspondences first
      const auto prev = last.find(gts[c.g].first);
      if (prev == last.end() || prev->second != trs[c.t].first) continue;
      g_used[c.g] = t_used[c.t] = true;
      chosen.push_back(c);
    }
    for (const auto& c : cands) {
      if (g_used[c.g] || t_used[c.t]) continue;
      g_used[c.g] = t_used[c.t] = true;
      chosen.push_back(c);
    }
    for (const auto& c : chosen) {
      const auto gid = gts[c.g].first;
      const auto tid = trs[c.t].first;
      ++out.matched_boxes;
      ++votes[tid][gid];
      const auto prev = last.find(gid);
      if (prev != last.end() && prev->second != tid) ++out.id_switches;
      last[gid] = tid;
    }
  }
  for (const auto& [tid, counts] : votes) {
    const auto best = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;  // first maximum wins, i.e. the smallest gt id on ties
    });
    out.track_to_gt[tid] = best->first;
  }
  return out;
}

inline int id_switches(const GroundTruth& tracks, const GroundTruth& gt) {
  return match_identities(tracks, gt).id_switches;
}

struct TrackError {
  std::optional<double> ade, fde;
  std::size_t pairs = 0;
};

struct EvalReport {
  std::optional<double> ade, fde, mae, rmse;
  std::size_t pairs = 0;
  std::size_t unmatched_predictions = 0;
  std::size_t emissions = 0;
  std::optional<int> id_switches;
  std::optional<double> track_coverage;
  std::map<std::int64_t, TrackError> per_track;
};

inline constexpr std::string_view kMetricDefinitions =
    "ADE: mean Euclidean distance over all paired (prediction, truth) points; "
    "FDE: mean Euclidean distance over the last horizon step of each emission; "
    "MAE / RMSE: mean absolute / root mean square over pooled x and y residuals; "
    "units: pixels; unpaired predictions are counted, not penalized";

inline EvalReport evaluate(std::span<const PredictionRow> preds, const AnchorTruth& truth,
                           const std::map<std::int64_t, std::int64_t>* id_map = nullptr) {
  const auto p = pair_predictions(preds, truth, id_map);
  EvalReport r;
  r.ade = ade(p);
  r.fde = fde(p);
  r.mae = mae(p);
  r.rmse = rmse(p);
  r.pairs = p.residuals.size();
  r.unmatched_predictions = p.unmatched;
  r.emissions = p.emissions;

  std::map<std::int64_t, Pairing> split;
  for (std::size_t i = 0; i < p.residuals.size(); ++i) {
    auto& s = split[p.track_of[i]];
    s.residuals.push_back(p.residuals[i]);
    s.track_of.push_back(p.track_of[i]);
    s.final_step.push_back(p.final_step[i]);
  }
  for (const auto& [id, s] : split) r.per_track[id] = {ade(s), fde(s), s.residuals.size()};
  return r;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::string opt_csv(const std::optional<double>& v) { return v ? text::format(*v) : ""; }

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_track = nlohmann::json::array();
  for (const auto& [id, e] : r.per_track) {
    per_track.push_back({{"track_id", id},
                         {"ade", detail::opt_json(e.ade)},
                         {"fde", detail::opt_json(e.fde)},
                         {"pairs", e.pairs}});
  }
  return nlohmann::json{
      {"definitions", kMetricDefinitions},
      {"ade", detail::opt_json(r.ade)},
      {"fde", detail::opt_json(r.fde)},
      {"mae", detail::opt_json(r.mae)},
      {"rmse", detail::opt_json(r.rmse)},
      {"pairs", r.pairs},
      {"unmatched_predictions", r.unmatched_predictions},
      {"emissions", r.emissions},
      {"id_switches", r.id_switches ? nlohmann::json(*r.id_switches) : nlohmann::json(nullptr)},
      {"track_coverage", detail::opt_json(r.track_coverage)},
      {"per_track", per_track},
  };
}

inline constexpr std::string_view kReportCsvHeader =
    "video,tracker,config,category,ade,fde,mae,rmse,pairs,unmatched_predictions,id_switches,"
    "track_coverage";

struct ReportLabels {
  std::string video = "video";
  std::string tracker = "vtrack";
  std::string config = "default";
  std::string category = "uncategorized";
};

// Undefined metrics are written as empty fields.
inline std::string to_csv_row(const EvalReport& r, const ReportLabels& l) {
  std::string s = l.video + ',' + l.tracker + ',' + l.config + ',' + l.category;
  for (const auto& v : {r.ade, r.fde, r.mae, r.rmse}) s += ',' + detail::opt_csv(v);
  s += ',' + std::to_string(r.pairs) + ',' + std::to_string(r.unmatched_predictions) + ',';
  if (r.id_switches) s += std::to_string(*r.id_switches);
  s += ',' + detail::opt_csv(r.track_coverage);
  return s;
}

// ---- predictions.csv ------------------------------------------------------

inline constexpr std::string_view kPredictionsHeader =
    "origin_frame,track_id,future_frame,pred_x,pred_y";

inline std::string predictions_to_csv(std::span<const PredictionRow> rows) {
  std::string out(kPredictionsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += text::format(r.origin_frame) + ',' + text::format(r.track_id) + ',' +
           text::format(r.future_frame) + ',' + text::format(r.p.x()) + ',' +
           text::format(r.p.y()) + '\n';
  }
  return out;
}

inline std::vector<PredictionRow> parse_predictions_csv(std::string_view csv) {
  std::vector<PredictionRow> out;
  const auto all = text::lines(csv);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty() || line == kPredictionsHeader) continue;
    const auto cols = text::split(line, ',');
    if (cols.size() != 5) throw ParseError(i + 1, "expected 5 columns in predictions file");
    const auto origin = text::to_int(cols[0]);
    const auto id = text::to_int(cols[1]);
    const auto future = text::to_int(cols[2]);
    const auto x = text::to_double(cols[3]);
    const auto y = text::to_double(cols[4]);
    if (!origin || !id || !future || !x || !y) throw ParseError(i + 1, "malformed prediction row");
    out.push_back({*origin, *id, *future, Vec2(*x, *y)});
  }
  return out;
}

}  // namespace vtrack
