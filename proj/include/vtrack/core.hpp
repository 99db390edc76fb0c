#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vtrack {

using Vec2 = Eigen::Vector2d;
using FrameIndex = std::int64_t;

// Axis-aligned box stored as center + extent, in pixels.
//
// Image coordinates: origin top-left, x to the right, y downward.
class BoundingBox {
 public:
  BoundingBox(Vec2 center, double width, double height)
      : center_(center), width_(width), height_(height) {
    if (!(width > 0.0) || !(height > 0.0)) {
      throw std::invalid_argument("bounding box extent must be positive");
    }
    if (!std::isfinite(center.x()) || !std::isfinite(center.y()) ||
        !std::isfinite(width) || !std::isfinite(height)) {
      throw std::invalid_argument("bounding box coordinates must be finite");
    }
  }

  static BoundingBox from_corner(double left, double top, double width, double height) {
    return BoundingBox(Vec2(left + width / 2.0, top + height / 2.0), width, height);
  }

  const Vec2& center() const noexcept { return center_; }
  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }
  double left() const noexcept { return center_.x() - width_ / 2.0; }
  double top() const noexcept { return center_.y() - height_ / 2.0; }
  double right() const noexcept { return center_.x() + width_ / 2.0; }
  double bottom() const noexcept { return center_.y() + height_ / 2.0; }
  double area() const noexcept { return width_ * height_; }

  BoundingBox translated(const Vec2& offset) const {
    return BoundingBox(center_ + offset, width_, height_);
  }

  friend bool operator==(const BoundingBox& a, const BoundingBox& b) {
    return a.center_ == b.center_ && a.width_ == b.width_ && a.height_ == b.height_;
  }

 private:
  Vec2 center_;
  double width_;
  double height_;
};

struct Detection {
  BoundingBox box;
  std::string category = "boat";
  double confidence = 1.0;
  FrameIndex frame = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Center of the contact line between hull and water.
struct AnchorPoint {
  Vec2 p = Vec2::Zero();
  FrameIndex frame = 0;

  friend bool operator==(const AnchorPoint&, const AnchorPoint&) = default;
};

struct FrameDetections {
  FrameIndex frame = 0;
  std::vector<Detection> detections;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

// Bottom-center of the box. With y pointing down the waterline sits at q_y + h/2.
inline Vec2 anchor_of(const BoundingBox& b) {
  return Vec2(b.center().x(), b.center().y() + b.height() / 2.0);
}

inline AnchorPoint anchor_point(const BoundingBox& b, FrameIndex frame = 0) {
  return AnchorPoint{anchor_of(b), frame};
}

// Inverse of anchor_of for a known extent.
inline BoundingBox box_from_anchor(const Vec2& anchor, double width, double height) {
  return BoundingBox(Vec2(anchor.x(), anchor.y() - height / 2.0), width, height);
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace detail {

inline std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace detail

// Combines detections whose boxes overlap with IoU >= iou_threshold. Overlap is
// taken transitively: every connected component of the overlap graph becomes
// one detection holding the mean center, extent, and confidence. The category
// and frame of the component's first member are kept. Output order follows the
// first member of each component; the result is re-merged until stable so no
// pair in the output reaches the threshold.
inline std::vector<Detection> merge_detections(std::span<const Detection> dets,
                                               double iou_threshold) {
  std::vector<Detection> current(dets.begin(), dets.end());
  for (;;) {
    const std::size_t n = current.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (iou(current[i].box, current[j].box) >= iou_threshold) {
          const auto ri = detail::find_root(parent, i);
          const auto rj = detail::find_root(parent, j);
          if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
          any = true;
        }
      }
    }
    if (!any) return current;

    std::vector<Detection> merged;
    for (std::size_t root = 0; root < n; ++root) {
      if (detail::find_root(parent, root) != root) continue;
      Vec2 c = Vec2::Zero();
      double w = 0.0, h = 0.0, e = 0.0;
      double count = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (detail::find_root(parent, i) != root) continue;
        c += current[i].box.center();
        w += current[i].box.width();
        h += current[i].box.height();
        e += current[i].confidence;
        count += 1.0;
      }
      if (count == 1.0) {
        merged.push_back(current[root]);
        continue;
      }
      Detection d = current[root];
      d.box = BoundingBox(c / count, w / count, h / count);
      d.confidence = std::clamp(e / count, 0.0, 1.0);
      merged.push_back(std::move(d));
    }
    current = std::move(merged);
  }
}

}  // namespace vtrack
