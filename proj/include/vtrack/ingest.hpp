#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vtrack/core.hpp"
#include "vtrack/error.hpp"
#include "vtrack/text.hpp"

namespace vtrack {

struct FrameSize {
  int width = 1280;
  int height = 720;

  friend bool operator==(const FrameSize&, const FrameSize&) = default;
};

// Per-frame detections over a contiguous frame range. Frames with no
// detections are present with an empty list.
struct DetectionStream {
  FrameSize frame_size;
  std::map<FrameIndex, FrameDetections> frames;

  bool empty() const { return frames.empty(); }

  friend bool operator==(const DetectionStream&, const DetectionStream&) = default;
};

// Boxes may overhang each frame edge by at most one full extent.
inline bool within_expanded_frame(const BoundingBox& b, const FrameSize& fs) {
  return b.left() >= -b.width() && b.right() <= fs.width + b.width() &&
         b.top() >= -b.height() && b.bottom() <= fs.height + b.height();
}

namespace detail {

struct MotRow {
  FrameIndex frame;
  std::int64_t id;
  BoundingBox box;
  double confidence;
};

// Returns nullopt for blank lines and '#' comments.
inline std::optional<MotRow> parse_mot_row(std::string_view line, std::size_t line_no) {
  const auto body = text::trim(line);
  if (body.empty() || body.front() == '#') return std::nullopt;
  const auto cols = text::split(body, ',');
  if (cols.size() != 10) {
    throw ParseError(line_no, "expected 10 comma-separated columns, got " +
                                  std::to_string(cols.size()));
  }
  const auto frame = text::to_int(cols[0]);
  const auto id = text::to_int(cols[1]);
  if (!frame || !id) throw ParseError(line_no, "frame and id must be integers");
  if (*frame < 0) throw ParseError(line_no, "frame index must be non-negative");
  double v[5];
  for (int i = 0; i < 5; ++i) {
    const auto d = text::to_double(cols[2 + i]);
    if (!d || !std::isfinite(*d)) {
      throw ParseError(line_no, "column " + std::to_string(3 + i) + " is not a finite number");
    }
    v[i] = *d;
  }
  if (!(v[2] > 0.0) || !(v[3] > 0.0)) {
    throw ParseError(line_no, "box width and height must be positive");
  }
  return MotRow{*frame, *id, BoundingBox::from_corner(v[0], v[1], v[2], v[3]), v[4]};
}

}  // namespace detail

// Parses MOT text `frame,id,bb_left,bb_top,w,h,conf,x,y,z` with id = -1.
// Frame numbering starts wherever the file starts.
inline DetectionStream parse_mot_detections(std::string_view text, FrameSize frame_size = {}) {
  DetectionStream stream;
  stream.frame_size = frame_size;
  const auto all = text::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto row = detail::parse_mot_row(all[i], i + 1);
    if (!row) continue;
    if (row->id != -1) throw ParseError(i + 1, "detection rows must carry id -1");
    if (row->confidence < 0.0 || row->confidence > 1.0) {
      throw ParseError(i + 1, "confidence must lie in [0, 1]");
    }
    if (!within_expanded_frame(row->box, frame_size)) {
      throw ParseError(i + 1, "box lies outside the frame by more than its own extent");
    }
    auto& fd = stream.frames[row->frame];
    fd.frame = row->frame;
    fd.detections.push_back(Detection{row->box, "boat", row->confidence, row->frame});
  }
  if (!stream.frames.empty()) {
    const auto first = stream.frames.begin()->first;
    const auto last = stream.frames.rbegin()->first;
    for (auto k = first; k <= last; ++k) stream.frames[k].frame = k;
  }
  return stream;
}

using GroundTruth = std::map<std::int64_t, std::vector<std::pair<FrameIndex, BoundingBox>>>;

// Per-identity box sequences sorted by frame. Duplicate (frame, id) pairs and
// id -1 are rejected.
inline GroundTruth parse_ground_truth(std::string_view text) {
  std::map<std::int64_t, std::map<FrameIndex, BoundingBox>> by_id;
  const auto all = text::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto row = detail::parse_mot_row(all[i], i + 1);
    if (!row) continue;
    if (row->id < 0) throw ParseError(i + 1, "ground-truth id must be non-negative");
    auto [it, inserted] = by_id[row->id].emplace(row->frame, row->box);
    if (!inserted) {
      throw ParseError(i + 1, "duplicate ground-truth entry for frame " +
                                  std::to_string(row->frame) + ", id " + std::to_string(row->id));
    }
  }
  GroundTruth gt;
  for (auto& [id, frames] : by_id) {
    auto& seq = gt[id];
    for (auto& [k, box] : frames) seq.emplace_back(k, box);
  }
  return gt;
}

inline std::string mot_line(FrameIndex frame, std::int64_t id, const BoundingBox& b,
                            double confidence) {
  std::string s;
  s += text::format(frame);
  s += ',';
  s += text::format(id);
  for (double v : {b.left(), b.top(), b.width(), b.height(), confidence}) {
    s += ',';
    s += text::format(v);
  }
  s += ",-1,-1,-1\n";
  return s;
}

inline std::string to_mot_text(const DetectionStream& stream) {
  std::string out;
  for (const auto& [k, fd] : stream.frames) {
    for (const auto& d : fd.detections) out += mot_line(k, -1, d.box, d.confidence);
  }
  return out;
}

// Rows are frame-major, then ascending id.
inline std::string to_mot_text(const GroundTruth& gt) {
  std::map<FrameIndex, std::vector<std::pair<std::int64_t, const BoundingBox*>>> rows;
  for (const auto& [id, seq] : gt) {
    for (const auto& [k, box] : seq) rows[k].emplace_back(id, &box);
  }
  std::string out;
  for (const auto& [k, entries] : rows) {
    for (const auto& [id, box] : entries) out += mot_line(k, id, *box, 1.0);
  }
  return out;
}

}  // namespace vtrack
