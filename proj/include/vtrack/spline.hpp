#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vtrack/config.hpp"
#include "vtrack/core.hpp"
#include "vtrack/kalman.hpp"

namespace vtrack {

// f(t) = a t^3 + b t^2 + c t + d on the unit parameter interval, with
// f(0) = p_l, f(1) = p_r, f'(0) = t_l, f'(1) = t_r.
struct HermiteCubic {
  Vec2 a, b, c, d;

  static HermiteCubic fit(const Vec2& p_l, const Vec2& p_r, const Vec2& t_l, const Vec2& t_r) {
    return HermiteCubic{2.0 * p_l - 2.0 * p_r + t_l + t_r,
                        -3.0 * p_l + 3.0 * p_r - 2.0 * t_l - t_r, t_l, p_l};
  }

  Vec2 operator()(double t) const { return ((a * t + b) * t + c) * t + d; }
  Vec2 derivative(double t) const { return (3.0 * a * t + 2.0 * b) * t + c; }
};

inline Vec2 hermite_eval(const Vec2& p_l, const Vec2& p_r, const Vec2& t_l, const Vec2& t_r,
                         double t) {
  return HermiteCubic::fit(p_l, p_r, t_l, t_r)(t);
}

// Direction vectors from adjacent points in index units: central differences
// inside, one-sided at both ends.
inline std::vector<Vec2> estimate_tangents(std::span<const Vec2> points) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("tangent estimation needs at least 2 points");
  std::vector<Vec2> out(n);
  out.front() = points[1] - points[0];
  out.back() = points[n - 1] - points[n - 2];
  for (std::size_t m = 1; m + 1 < n; ++m) out[m] = (points[m + 1] - points[m - 1]) / 2.0;
  return out;
}

// Pixels per frame for points with uneven frame spacing: derivative of the
// quadratic through each point and its neighbours (one-sided at the ends).
// Interior values equal estimate_tangents when frames are consecutive.
inline std::vector<Vec2> estimate_velocities(std::span<const AnchorPoint> points) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("tangent estimation needs at least 2 points");
  std::vector<Vec2> out(n);
  if (n == 2) {
    out[0] = out[1] = (points[1].p - points[0].p) / static_cast<double>(points[1].frame - points[0].frame);
    return out;
  }
  // derivative at frame of point m of the quadratic through points i, j, k
  auto quad = [&](std::size_t i, std::size_t j, std::size_t k, std::size_t m) -> Vec2 {
    const double ti = static_cast<double>(points[i].frame), tj = static_cast<double>(points[j].frame),
                 tk = static_cast<double>(points[k].frame), t = static_cast<double>(points[m].frame);
    const double wi = ((t - tj) + (t - tk)) / ((ti - tj) * (ti - tk));
    const double wk = ((t - ti) + (t - tj)) / ((tk - ti) * (tk - tj));
    // weights sum to zero; differences keep constant input exactly still
    return wi * (points[i].p - points[j].p) + wk * (points[k].p - points[j].p);
  };
  out.front() = quad(0, 1, 2, 0);
  out.back() = quad(n - 3, n - 2, n - 1, n - 1);
  for (std::size_t m = 1; m + 1 < n; ++m) out[m] = quad(m - 1, m, m + 1, m);
  return out;
}

// Chebyshev-Lobatto nodes cos(i pi / (n_knots - 1)) mapped onto
// [0, n_points - 1] and rounded. Both endpoints are always present.
inline std::vector<std::size_t> chebyshev_knots(std::size_t n_points, std::size_t n_knots) {
  if (n_knots < 2 || n_knots > n_points) {
    throw std::invalid_argument("chebyshev_knots requires 2 <= n_knots <= n_points");
  }
  std::vector<std::size_t> idx;
  if (n_knots == n_points) {
    for (std::size_t i = 0; i < n_points; ++i) idx.push_back(i);
    return idx;
  }
  const double span = static_cast<double>(n_points - 1);
  idx.reserve(n_knots);
  for (std::size_t i = 0; i < n_knots; ++i) {
    const double node = std::cos(static_cast<double>(i) * M_PI / static_cast<double>(n_knots - 1));
    const auto k = static_cast<std::size_t>(std::lround((1.0 - node) / 2.0 * span));
    if (idx.empty() || k != idx.back()) idx.push_back(k);
  }
  idx.front() = 0;
  idx.back() = n_points - 1;
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

// Angle between two direction vectors in degrees, 0 if either is zero.
inline double angle_between_deg(const Vec2& u, const Vec2& v) {
  const double cross = u.x() * v.y() - u.y() * v.x();
  const double dot = u.dot(v);
  if (u.isZero(0.0) || v.isZero(0.0)) return 0.0;
  return std::atan2(std::abs(cross), dot) * 180.0 / M_PI;
}

struct TrajectorySegment {
  std::vector<AnchorPoint> knots;
  std::vector<Vec2> tangents;  // pixels per frame, one per knot
  FrameIndex first_frame = 0;
  FrameIndex last_frame = 0;
};

// Splits where the travel direction turns by more than epsilon_deg: the
// chord into point m and the chord out of it are compared, and m becomes the
// shared boundary of two segments. Tangents are estimated inside each segment,
// so a corner gets one-sided tangents on both sides.
inline std::vector<TrajectorySegment> segment_trajectory(std::span<const AnchorPoint> points,
                                                         double epsilon_deg) {
  if (points.size() < 2) throw std::invalid_argument("segmentation needs at least 2 points");
  std::vector<std::size_t> bounds{0};
  for (std::size_t m = 1; m + 1 < points.size(); ++m) {
    const Vec2 in = points[m].p - points[m - 1].p;
    const Vec2 out = points[m + 1].p - points[m].p;
    if (angle_between_deg(in, out) > epsilon_deg) bounds.push_back(m);
  }
  bounds.push_back(points.size() - 1);

  std::vector<TrajectorySegment> segs;
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    TrajectorySegment seg;
    seg.knots.assign(points.begin() + static_cast<std::ptrdiff_t>(bounds[s]),
                     points.begin() + static_cast<std::ptrdiff_t>(bounds[s + 1]) + 1);
    seg.tangents = estimate_velocities(seg.knots);
    seg.first_frame = seg.knots.front().frame;
    seg.last_frame = seg.knots.back().frame;
    segs.push_back(std::move(seg));
  }
  return segs;
}

// Shortest last knot interval, in frames, used for forecasting. Endpoint
// clustering of the knots would otherwise extrapolate from a frame or two.
inline constexpr double kMinForecastInterval = 10.0;

struct SplineParams {
  std::size_t knots = 5;
  double epsilon_deg = 30.0;
  double min_forecast_interval = kMinForecastInterval;

  static SplineParams from_config(const RunConfig& c) {
    return SplineParams{static_cast<std::size_t>(c.knots), c.epsilon_deg, kMinForecastInterval};
  }
};

namespace detail {

inline void require_history(std::span<const AnchorPoint> history, std::size_t min_size) {
  if (history.size() < min_size) {
    throw std::invalid_argument("trajectory needs at least " + std::to_string(min_size) +
                                " points");
  }
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].frame <= history[i - 1].frame) {
      throw std::invalid_argument("trajectory frames must be strictly increasing");
    }
  }
}

inline std::vector<AnchorPoint> select_knots(std::span<const AnchorPoint> history,
                                             std::size_t n_knots) {
  const auto idx = chebyshev_knots(history.size(), std::min(n_knots, history.size()));
  std::vector<AnchorPoint> knots;
  knots.reserve(idx.size());
  for (auto i : idx) knots.push_back(history[i]);
  return knots;
}

// Cubic on the knot interval [i, i+1] of a segment, parameterized by
// t = (frame - frame_i) / (frame_{i+1} - frame_i).
inline HermiteCubic interval_cubic(const TrajectorySegment& seg, std::size_t i) {
  const double len = static_cast<double>(seg.knots[i + 1].frame - seg.knots[i].frame);
  return HermiteCubic::fit(seg.knots[i].p, seg.knots[i + 1].p, seg.tangents[i] * len,
                           seg.tangents[i + 1] * len);
}

// Knots for forecasting from `window`: as many as configured while the last
// knot interval still spans min_forecast_interval frames.
inline std::vector<AnchorPoint> forecast_knots(std::span<const AnchorPoint> window,
                                               const SplineParams& params) {
  const std::size_t most = std::min(params.knots, window.size());
  for (std::size_t k = most; k > 2; --k) {
    const auto idx = chebyshev_knots(window.size(), k);
    const auto last = static_cast<double>(window[idx.back()].frame - window[idx[idx.size() - 2]].frame);
    if (last >= params.min_forecast_interval) {
      std::vector<AnchorPoint> knots;
      for (auto i : idx) knots.push_back(window[i]);
      return knots;
    }
  }
  return {window.front(), window.back()};
}

// Last smooth subsegment of the history. The window shrinks to the last
// epsilon segment and its knots are re-sampled until one segment remains.
inline TrajectorySegment forecast_segment(std::span<const AnchorPoint> history,
                                          const SplineParams& params) {
  auto window = history;
  for (;;) {
    const auto segs = segment_trajectory(forecast_knots(window, params), params.epsilon_deg);
    if (segs.size() == 1) return segs.front();
    const FrameIndex start = segs.back().first_frame;
    const auto it = std::find_if(window.begin(), window.end(),
                                 [&](const AnchorPoint& a) { return a.frame == start; });
    window = window.subspan(static_cast<std::size_t>(it - window.begin()));
  }
}

}  // namespace detail

// Smooths a trajectory with the piecewise Hermite spline through its
// Chebyshev-selected knots and resamples it at every input frame. Knot frames
// keep their input positions.
inline std::vector<AnchorPoint> regularize(std::span<const AnchorPoint> history,
                                           const SplineParams& params = {}) {
  detail::require_history(history, 2);
  const auto knots = detail::select_knots(history, params.knots);
  const auto segs = segment_trajectory(knots, params.epsilon_deg);

  std::vector<AnchorPoint> out(history.begin(), history.end());
  std::size_t next = 0;
  for (const auto& seg : segs) {
    for (std::size_t i = 0; i + 1 < seg.knots.size(); ++i) {
      const auto& lo = seg.knots[i];
      const auto& hi = seg.knots[i + 1];
      const auto cubic = detail::interval_cubic(seg, i);
      const double len = static_cast<double>(hi.frame - lo.frame);
      for (; next < out.size() && out[next].frame < hi.frame; ++next) {
        if (out[next].frame == lo.frame) {
          out[next].p = lo.p;
        } else {
          out[next].p = cubic(static_cast<double>(out[next].frame - lo.frame) / len);
        }
      }
    }
  }
  out.back().p = history.back().p;
  return out;
}

struct PredictedTrajectory {
  FrameIndex origin_frame = 0;
  std::vector<AnchorPoint> points;  // frames origin+1 ... origin+horizon
};

inline PredictedTrajectory constant_velocity_forecast(const AnchorPoint& last, const Vec2& velocity,
                                                      int horizon) {
  PredictedTrajectory out{last.frame, {}};
  out.points.reserve(static_cast<std::size_t>(horizon));
  for (int j = 1; j <= horizon; ++j) {
    out.points.push_back({last.p + velocity * static_cast<double>(j), last.frame + j});
  }
  return out;
}

// Velocity of a CV filter replayed over a stored trajectory. The filter is
// seeded from the first two points (position and finite-difference velocity)
// and then updated with every later point, coasting over frame gaps.
inline Vec2 replay_velocity(std::span<const AnchorPoint> history, const MotionModel& model) {
  detail::require_history(history, 2);
  MotionModel cv = model;
  cv.kind = MotionKind::cv;
  const double gap = static_cast<double>(history[1].frame - history[0].frame);
  KalmanState s = initial_state(cv, history[1].p);
  const Vec2 v0 = (history[1].p - history[0].p) / gap;
  s.x(2) = v0.x();
  s.x(3) = v0.y();
  s.P(2, 2) = s.P(3, 3) = 2.0 * cv.r_scale / (gap * gap);
  for (std::size_t i = 2; i < history.size(); ++i) {
    for (auto k = history[i - 1].frame; k < history[i].frame; ++k) s = ekf_predict(s);
    s = ekf_update(s, history[i].p);
  }
  return s.velocity();
}

// Cubic extrapolation is used up to this parameter value on the last knot
// interval; beyond it the prediction continues at the velocity reached there.
inline constexpr double kMaxExtrapolationParam = 3.0;

// Forecast positions for frames last+1 ... last+horizon. Histories of at
// least 4 points extrapolate the last knot interval of the last smooth
// subsegment (see forecast_segment);
// shorter ones continue at constant velocity, taken from fallback_velocity
// when given and otherwise from replay_velocity.
inline PredictedTrajectory predict(std::span<const AnchorPoint> history, int horizon,
                                   const SplineParams& params = {},
                                   std::optional<Vec2> fallback_velocity = std::nullopt,
                                   const MotionModel& model = {}) {
  detail::require_history(history, 2);
  if (horizon < 1) throw std::invalid_argument("prediction horizon must be >= 1");
  const AnchorPoint& last = history.back();
  if (history.size() < 4) {
    const Vec2 v = fallback_velocity ? *fallback_velocity : replay_velocity(history, model);
    return constant_velocity_forecast(last, v, horizon);
  }

  const auto seg = detail::forecast_segment(history, params);
  const std::size_t i = seg.knots.size() - 2;
  const auto cubic = detail::interval_cubic(seg, i);
  const double len = static_cast<double>(seg.knots[i + 1].frame - seg.knots[i].frame);

  const double cap = kMaxExtrapolationParam;
  const Vec2 cap_point = cubic(cap);
  const Vec2 cap_velocity = cubic.derivative(cap) / len;

  PredictedTrajectory out{last.frame, {}};
  out.points.reserve(static_cast<std::size_t>(horizon));
  for (int j = 1; j <= horizon; ++j) {
    const double t = 1.0 + static_cast<double>(j) / len;
    const Vec2 p = t <= cap ? cubic(t) : Vec2(cap_point + cap_velocity * ((t - cap) * len));
    out.points.push_back({p, last.frame + j});
  }
  return out;
}

}  // namespace vtrack
