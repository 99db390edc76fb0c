#pragma once

// Independent reference implementations used only by tests.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace vtrack::oracle {

struct BestMatching {
  double total = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted (row, col)
};

// Exhaustive search over every partial one-to-one matching restricted to
// positive entries.
inline BestMatching brute_force_matching(const Eigen::MatrixXd& s) {
  const auto rows = static_cast<std::size_t>(s.rows());
  const auto cols = static_cast<std::size_t>(s.cols());
  BestMatching best;
  std::vector<bool> used(cols, false);
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  std::function<void(std::size_t, double)> dfs = [&](std::size_t r, double total) {
    if (r == rows) {
      if (total > best.total) {
        best.total = total;
        best.pairs = cur;
      }
      return;
    }
    dfs(r + 1, total);
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (used[c] || v <= 0.0) continue;
      used[c] = true;
      cur.emplace_back(r, c);
      dfs(r + 1, total + v);
      cur.pop_back();
      used[c] = false;
    }
  };
  dfs(0, 0.0);
  return best;
}

}  // namespace vtrack::oracle
