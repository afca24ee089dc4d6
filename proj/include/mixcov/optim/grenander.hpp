#pragma once

#include "../types.hpp"
#include "isotonic.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace mixcov {

//! Weighted Grenander estimator of a nonincreasing density on (0,1].
//! Observations are sorted; tied values are merged into one order statistic
//! carrying the summed weight. Level i is the antitonic LS fit of
//! w_i / (W * (Y_(i) - Y_(i-1))) with interval lengths as weights, Y_(0) = 0.
inline SignalDensity grenander_weighted(const VectorXd& y, const VectorXd& w)
{
  const Index n = y.size();
  require(n >= 1 && w.size() == n, ErrorCode::invalid_argument, "grenander: size mismatch");
  for (Index i = 0; i < n; ++i) {
    require(y(i) > 0.0 && y(i) <= 1.0, ErrorCode::invalid_argument,
            "grenander: observations must lie in (0,1]");
    require(w(i) >= 0.0 && std::isfinite(w(i)), ErrorCode::invalid_argument,
            "grenander: weights must be nonnegative");
  }
  const double total = w.sum();
  require(total > 0.0, ErrorCode::weights_all_zero, "grenander: all weights are zero");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{ 0 });
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return y(a) < y(b); });

  std::vector<double> knots;
  std::vector<double> mass;
  for (Index k : order) {
    if (!knots.empty() && y(k) == knots.back())
      mass.back() += w(k);
    else {
      knots.push_back(y(k));
      mass.push_back(w(k));
    }
  }

  const Index m = static_cast<Index>(knots.size());
  VectorXd target(m), len(m);
  double left = 0.0;
  for (Index i = 0; i < m; ++i) {
    len(i) = knots[i] - left;
    target(i) = mass[i] / (total * len(i));
    left = knots[i];
  }
  VectorXd level = weighted_antitonic_ls(target, len).cwiseMax(0.0);

  // absorb the tiny normalisation drift of the pooled means
  const double integral = level.dot(len);
  level /= integral;
  return SignalDensity::decreasing(std::move(knots), to_std(level));
}

} // namespace mixcov
