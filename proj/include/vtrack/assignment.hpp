#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vtrack/config.hpp"

namespace vtrack {

// Rows are detections, columns are tracks; larger is more plausible and a
// score <= 0 forbids the pair.
using ScoreMatrix = Eigen::MatrixXd;

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, track), sorted
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::size_t> unmatched_tracks;

  double total(const ScoreMatrix& s) const {
    double t = 0.0;
    for (const auto& [d, k] : pairs) t += s(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    return t;
  }
};

namespace detail {

inline Matching finish(std::vector<std::pair<std::size_t, std::size_t>> pairs, std::size_t rows,
                       std::size_t cols) {
  Matching m;
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> row_used(rows, false), col_used(cols, false);
  for (const auto& [r, c] : pairs) {
    row_used[r] = true;
    col_used[c] = true;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_used[r]) m.unmatched_detections.push_back(r);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_used[c]) m.unmatched_tracks.push_back(c);
  }
  m.pairs = std::move(pairs);
  return m;
}

}  // namespace detail

// Repeatedly takes the largest remaining positive score. Ties go to the older
// track (smaller id), then to the lower detection index.
inline Matching assign_greedy(const ScoreMatrix& scores, std::span<const std::int64_t> track_ids) {
  const auto rows = static_cast<std::size_t>(scores.rows());
  const auto cols = static_cast<std::size_t>(scores.cols());
  struct Candidate {
    double score;
    std::int64_t track_id;
    std::size_t det;
    std::size_t track;
  };
  std::vector<Candidate> cands;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double s = scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (s > 0.0) cands.push_back({s, track_ids.empty() ? std::int64_t(c) : track_ids[c], r, c});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.score, a.track_id, a.det) < std::tie(a.score, b.track_id, b.det);
  });
  std::vector<bool> row_used(rows, false), col_used(cols, false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& c : cands) {
    if (row_used[c.det] || col_used[c.track]) continue;
    row_used[c.det] = true;
    col_used[c.track] = true;
    pairs.emplace_back(c.det, c.track);
  }
  return detail::finish(std::move(pairs), rows, cols);
}

// Maximum-total-score one-to-one matching (Kuhn-Munkres with row/column
// potentials on the square zero-padded cost matrix, O(n^3)). Pairs with
// non-positive score are dropped afterwards, which leaves the optimum over
// positive-score matchings unchanged.
inline Matching assign_hungarian(const ScoreMatrix& scores) {
  const auto rows = static_cast<std::size_t>(scores.rows());
  const auto cols = static_cast<std::size_t>(scores.cols());
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};

  double top = 0.0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    for (Eigen::Index c = 0; c < scores.cols(); ++c) top = std::max(top, scores(r, c));
  }
  auto cost = [&](std::size_t r, std::size_t c) {
    if (r >= rows || c >= cols) return top;
    return top - std::max(0.0, scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  };

  // 1-based arrays: u/v potentials, p[col] = row assigned to col, way = back pointers.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = p[j] - 1, c = j - 1;
    if (r < rows && c < cols &&
        scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) > 0.0) {
      pairs.emplace_back(r, c);
    }
  }
  return detail::finish(std::move(pairs), rows, cols);
}

inline Matching assign(const ScoreMatrix& scores, std::span<const std::int64_t> track_ids,
                       AssignmentStrategy strategy) {
  return strategy == AssignmentStrategy::greedy ? assign_greedy(scores, track_ids)
                                                : assign_hungarian(scores);
}

}  // namespace vtrack
