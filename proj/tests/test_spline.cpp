#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vtrack/random.hpp"
#include "vtrack/spline.hpp"

namespace vtrack {
namespace {

std::vector<AnchorPoint> track(std::initializer_list<std::pair<double, double>> pts, FrameIndex first = 0) {
  std::vector<AnchorPoint> out;
  FrameIndex k = first;
  for (const auto& [x, y] : pts) out.push_back({Vec2(x, y), k++});
  return out;
}

std::vector<AnchorPoint> linear(std::size_t n, Vec2 start, Vec2 step, FrameIndex first = 0) {
  std::vector<AnchorPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({start + step * static_cast<double>(i), first + static_cast<FrameIndex>(i)});
  }
  return out;
}

TEST(HermiteEval, Endpoints) {
  const Vec2 pl(1, 2), pr(5, -3), tl(2, 2), tr(-1, 4);
  EXPECT_EQ(hermite_eval(pl, pr, tl, tr, 0.0), pl);
  EXPECT_LT((hermite_eval(pl, pr, tl, tr, 1.0) - pr).norm(), 1e-12);
}

TEST(HermiteEval, ZeroTangentMidpoint) {
  EXPECT_LT((hermite_eval(Vec2(0, 0), Vec2(2, 4), Vec2::Zero(), Vec2::Zero(), 0.5) - Vec2(1, 2)).norm(),
            1e-15);
}

TEST(HermiteEval, LinearReproductionOutsideUnitInterval) {
  const auto c = HermiteCubic::fit(Vec2(0, 0), Vec2(1, 0), Vec2(1, 0), Vec2(1, 0));
  EXPECT_EQ(c.a, Vec2(0, 0));
  EXPECT_EQ(c.b, Vec2(0, 0));
  EXPECT_EQ(c.c, Vec2(1, 0));
  EXPECT_EQ(c.d, Vec2(0, 0));
  EXPECT_EQ(hermite_eval(Vec2(0, 0), Vec2(1, 0), Vec2(1, 0), Vec2(1, 0), 1.5), Vec2(1.5, 0));
}

TEST(HermiteEval, RandomEndpointAndTangentConstraints) {
  Pcg32 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 pl(rng.uniform(-1000, 1000), rng.uniform(-1000, 1000));
    const Vec2 pr(rng.uniform(-1000, 1000), rng.uniform(-1000, 1000));
    const Vec2 tl(rng.uniform(-100, 100), rng.uniform(-100, 100));
    const Vec2 tr(rng.uniform(-100, 100), rng.uniform(-100, 100));
    const auto f = HermiteCubic::fit(pl, pr, tl, tr);
    EXPECT_LT((f(0.0) - pl).norm(), 1e-9);
    EXPECT_LT((f(1.0) - pr).norm(), 1e-9);
    const double h = 1e-5;
    EXPECT_LT(((f(h) - f(-h)) / (2 * h) - tl).norm(), 1e-6);
    EXPECT_LT(((f(1 + h) - f(1 - h)) / (2 * h) - tr).norm(), 1e-6);
  }
}

TEST(HermiteEval, AffineInputsReproducedOnWideRange) {
  Pcg32 rng(5);
  for (int i = 0; i < 500; ++i) {
    const Vec2 p0(rng.uniform(-500, 500), rng.uniform(-500, 500));
    const Vec2 d(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const auto f = HermiteCubic::fit(p0, p0 + d, d, d);
    for (double t = -2.0; t <= 3.0; t += 0.25) EXPECT_LT((f(t) - (p0 + d * t)).norm(), 1e-9);
  }
}

TEST(EstimateTangents, CollinearEqualSteps) {
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 0), Vec2(2, 0), Vec2(3, 0)};
  for (const auto& t : estimate_tangents(pts)) EXPECT_EQ(t, Vec2(1, 0));
}

TEST(EstimateTangents, CentralDifferenceAtCorner) {
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)};
  const auto t = estimate_tangents(pts);
  EXPECT_EQ(t[1], Vec2(0.5, 0.5));
  EXPECT_EQ(t[0], Vec2(1, 0));
  EXPECT_EQ(t[2], Vec2(0, 1));
}

TEST(EstimateTangents, TwoPointsAndErrors) {
  const std::vector<Vec2> pts{Vec2(1, 1), Vec2(4, 5)};
  const auto t = estimate_tangents(pts);
  EXPECT_EQ(t[0], Vec2(3, 4));
  EXPECT_EQ(t[1], Vec2(3, 4));
  EXPECT_THROW(estimate_tangents(std::vector<Vec2>{Vec2(0, 0)}), std::invalid_argument);
}

TEST(EstimateVelocities, UnevenSpacingStillLinear) {
  const std::vector<AnchorPoint> pts{{Vec2(0, 0), 0}, {Vec2(6, 3), 3}, {Vec2(8, 4), 4}, {Vec2(20, 10), 10}};
  for (const auto& v : estimate_velocities(pts)) EXPECT_LT((v - Vec2(2, 1)).norm(), 1e-15);
}

TEST(ChebyshevKnots, Examples) {
  EXPECT_EQ(chebyshev_knots(11, 3), (std::vector<std::size_t>{0, 5, 10}));
  EXPECT_EQ(chebyshev_knots(2, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(chebyshev_knots(6, 6), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_THROW(chebyshev_knots(5, 1), std::invalid_argument);
  EXPECT_THROW(chebyshev_knots(3, 4), std::invalid_argument);
}

TEST(ChebyshevKnots, MatchesNodeFormula) {
  for (std::size_t n = 2; n < 80; ++n) {
    for (std::size_t k = 2; k <= std::min<std::size_t>(n, 9); ++k) {
      const auto idx = chebyshev_knots(n, k);
      EXPECT_EQ(idx.front(), 0u);
      EXPECT_EQ(idx.back(), n - 1);
      EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
      EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
      if (k < n / 2) {
        ASSERT_EQ(idx.size(), k);
        for (std::size_t i = 0; i < k; ++i) {
          const double mapped = (1.0 - std::cos(static_cast<double>(i) * M_PI / static_cast<double>(k - 1))) /
                                2.0 * static_cast<double>(n - 1);
          EXPECT_LE(std::abs(static_cast<double>(idx[i]) - mapped), 0.5 + 1e-9);
        }
      }
    }
  }
}

TEST(SegmentTrajectory, StraightLineIsOneSegment) {
  const auto pts = linear(20, Vec2(0, 0), Vec2(1, 0.5));
  EXPECT_EQ(segment_trajectory(pts, 1.0).size(), 1u);
}

TEST(SegmentTrajectory, SplitsAtRightAngle) {
  const auto pts = track({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}});
  // direction-change oracle: chord angles into/out of each interior point
  std::vector<double> turn;
  for (std::size_t m = 1; m + 1 < pts.size(); ++m) {
    turn.push_back(angle_between_deg(pts[m].p - pts[m - 1].p, pts[m + 1].p - pts[m].p));
  }
  EXPECT_NEAR(turn[0], 0.0, 1e-12);
  EXPECT_NEAR(turn[1], 90.0, 1e-12);
  EXPECT_NEAR(turn[2], 0.0, 1e-12);

  const auto segs = segment_trajectory(pts, 30.0);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].knots.size(), 3u);
  EXPECT_EQ(segs[0].last_frame, 2);
  EXPECT_EQ(segs[1].first_frame, 2);
  EXPECT_EQ(segs[1].knots.front().p, Vec2(2, 0));
  // tangents are one-sided at the corner on both sides
  EXPECT_EQ(segs[0].tangents.back(), Vec2(1, 0));
  EXPECT_EQ(segs[1].tangents.front(), Vec2(0, 1));
}

TEST(SegmentTrajectory, FullAngleNeverSplits) {
  const auto pts = track({{0, 0}, {1, 0}, {0, 0}, {1, 0}, {0, 1}});
  EXPECT_EQ(segment_trajectory(pts, 180.0).size(), 1u);
}

TEST(SegmentTrajectory, CountMonotoneInEpsilon) {
  Pcg32 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AnchorPoint> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({Vec2(rng.uniform(0, 50), rng.uniform(0, 50)), i});
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double eps = 1; eps <= 180; eps += 7) {
      const auto n = segment_trajectory(pts, eps).size();
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(Regularize, LinearMotionUnchanged) {
  const auto pts = linear(40, Vec2(10, 300), Vec2(2.5, -0.5));
  const auto out = regularize(pts);
  ASSERT_EQ(out.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(out[i].frame, pts[i].frame);
    EXPECT_LT((out[i].p - pts[i].p).norm(), 1e-9);
  }
}

TEST(Regularize, PerturbationAtNonKnotIsRemoved) {
  auto pts = linear(41, Vec2(0, 100), Vec2(2, 1));
  const auto knots = chebyshev_knots(pts.size(), 5);
  ASSERT_EQ(std::count(knots.begin(), knots.end(), std::size_t{20}), 1);  // 20 is a knot
  const std::size_t victim = 13;
  ASSERT_EQ(std::count(knots.begin(), knots.end(), victim), 0);
  const Vec2 truth = pts[victim].p;
  pts[victim].p += Vec2(2, -2);
  const auto out = regularize(pts);
  EXPECT_LT((out[victim].p - truth).norm(), 1e-6);
  for (auto k : knots) EXPECT_EQ(out[k].p, pts[k].p);
}

TEST(Regularize, TwoPointsUnchangedAndIdempotent) {
  const auto two = track({{3, 4}, {7, 9}});
  const auto out = regularize(two);
  EXPECT_EQ(out, two);

  Pcg32 rng(12);
  std::vector<AnchorPoint> noisy;
  for (int i = 0; i < 60; ++i) {
    noisy.push_back({Vec2(i * 3.0 + rng.normal(0, 2), 200 + 0.02 * i * i + rng.normal(0, 2)), i * 2});
  }
  const auto once = regularize(noisy);
  const auto twice = regularize(once);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_LT((once[i].p - twice[i].p).norm(), 1e-9);
}

TEST(Predict, LinearHistoryExtrapolatesExactly) {
  const auto pts = linear(10, Vec2(100, 50), Vec2(2, 0));
  const auto pred = predict(pts, 3);
  ASSERT_EQ(pred.points.size(), 3u);
  EXPECT_EQ(pred.origin_frame, 9);
  for (int j = 1; j <= 3; ++j) {
    EXPECT_LT((pred.points[j - 1].p - (pts.back().p + Vec2(2.0 * j, 0))).norm(), 1e-9);
    EXPECT_EQ(pred.points[j - 1].frame, 9 + j);
  }
}

TEST(Predict, LongHorizonPastCapStaysLinear) {
  const auto pts = linear(6, Vec2(0, 0), Vec2(1.5, -0.5));
  const auto pred = predict(pts, 30);
  for (int j = 1; j <= 30; ++j) {
    EXPECT_LT((pred.points[j - 1].p - (pts.back().p + Vec2(1.5, -0.5) * j)).norm(), 1e-9);
  }
}

TEST(Predict, StationaryHistoryRepeatsLastPoint) {
  const auto pts = linear(12, Vec2(640, 400), Vec2(0, 0));
  for (const auto& p : predict(pts, 5).points) EXPECT_EQ(p.p, Vec2(640, 400));
}

TEST(Predict, ShortHistoryFallsBackToConstantVelocity) {
  const auto pts = linear(3, Vec2(0, 0), Vec2(4, 1));
  const auto pred = predict(pts, 4);
  for (int j = 1; j <= 4; ++j) {
    EXPECT_LT((pred.points[j - 1].p - (pts.back().p + Vec2(4, 1) * j)).norm(), 1e-9);
  }
  const auto given = predict(pts, 2, {}, Vec2(1, 1));
  EXPECT_EQ(given.points[1].p, pts.back().p + Vec2(2, 2));
}

TEST(Predict, RejectsDegenerateInput) {
  EXPECT_THROW(predict(std::vector<AnchorPoint>{}, 3), std::invalid_argument);
  EXPECT_THROW(predict(track({{1, 1}}), 3), std::invalid_argument);
  EXPECT_THROW(predict(track({{1, 1}, {2, 2}}), 0), std::invalid_argument);
  const std::vector<AnchorPoint> unordered{{Vec2(0, 0), 3}, {Vec2(1, 0), 2}};
  EXPECT_THROW(predict(unordered, 3), std::invalid_argument);
}

TEST(Predict, ArcBeatsStraightLineExtrapolation) {
  // circle oracle: radius 200, 0.01 rad per frame
  const Vec2 center(640, 360);
  const double r = 200.0, w = 0.01;
  auto on_arc = [&](int f) { return Vec2(center + r * Vec2(std::cos(w * f), std::sin(w * f))); };
  std::vector<AnchorPoint> pts;
  for (int f = 0; f < 60; ++f) pts.push_back({on_arc(f), f});
  const auto pred = predict(pts, 10);
  const Vec2 truth = on_arc(69);
  const Vec2 chord_velocity = pts[59].p - pts[58].p;
  const Vec2 straight = pts[59].p + chord_velocity * 10.0;
  EXPECT_LT((pred.points.back().p - truth).norm(), (straight - truth).norm());
}

TEST(ForecastKnots, LastIntervalSpansMinimumFrames) {
  const SplineParams params;
  for (std::size_t n : {4u, 8u, 12u, 20u, 40u, 69u, 70u, 200u}) {
    const auto pts = linear(n, Vec2(0, 0), Vec2(1, 0));
    const auto knots = detail::forecast_knots(pts, params);
    ASSERT_GE(knots.size(), 2u);
    EXPECT_LE(knots.size(), params.knots);
    EXPECT_EQ(knots.front().frame, 0);
    EXPECT_EQ(knots.back().frame, static_cast<FrameIndex>(n - 1));
    const auto last = knots.back().frame - knots[knots.size() - 2].frame;
    if (knots.size() > 2) {
      EXPECT_GE(static_cast<double>(last), params.min_forecast_interval) << n;
    }
    // one more knot would have broken the minimum
    if (knots.size() < params.knots && knots.size() < n) {
      const auto idx = chebyshev_knots(n, knots.size() + 1);
      EXPECT_LT(static_cast<double>(idx.back() - idx[idx.size() - 2]), params.min_forecast_interval) << n;
    }
  }
  EXPECT_EQ(detail::forecast_knots(linear(200, Vec2(0, 0), Vec2(1, 0)), params).size(), 5u);
}

TEST(ForecastSegment, WindowShrinksToLastSmoothPiece) {
  // one and a half turns: whole-history knots turn far beyond epsilon
  std::vector<AnchorPoint> pts;
  for (int f = 0; f < 300; ++f) pts.push_back({Vec2(640 + 100 * std::cos(0.03 * f), 360 + 100 * std::sin(0.03 * f)), f});
  const SplineParams params;
  const auto seg = detail::forecast_segment(pts, params);
  EXPECT_EQ(seg.last_frame, 299);
  EXPECT_GT(seg.first_frame, 0);
  std::vector<AnchorPoint> tail(pts.begin() + seg.first_frame, pts.end());
  EXPECT_EQ(segment_trajectory(detail::forecast_knots(tail, params), params.epsilon_deg).size(), 1u);

  const auto pred = predict(pts, 20);
  const Vec2 truth(640 + 100 * std::cos(0.03 * 319), 360 + 100 * std::sin(0.03 * 319));
  const Vec2 straight = pts[299].p + (pts[299].p - pts[298].p) * 20.0;
  EXPECT_LT((pred.points.back().p - truth).norm(), (straight - truth).norm());
}

TEST(Predict, FirstPointStaysNearLastAnchor) {
  Pcg32 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AnchorPoint> pts;
    Vec2 p(rng.uniform(0, 1000), rng.uniform(0, 700));
    const Vec2 v(rng.uniform(-3, 3), rng.uniform(-3, 3));
    for (int f = 0; f < 30; ++f) {
      pts.push_back({p + Vec2(rng.normal(0, 1), rng.normal(0, 1)), f});
      p += v;
    }
    const auto pred = predict(pts, 10);
    const auto vel = estimate_velocities(std::span(pts).last(2));
    const double step = std::max(vel[0].norm(), (pred.points[1].p - pred.points[0].p).norm());
    EXPECT_LE((pred.points[0].p - pts.back().p).norm(), 3.0 * step + 1e-9);
  }
}

}  // namespace
}  // namespace vtrack
