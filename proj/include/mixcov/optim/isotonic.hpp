#pragma once

#include "../error.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

namespace mixcov {

struct Bounds
{
  double lo;
  double hi;
};

//! Weighted least squares under a nondecreasing constraint (pool adjacent
//! violators), optionally clipped to [lo, hi]. Clipping the unconstrained
//! solution is exact for box bounds.
inline Eigen::VectorXd weighted_isotonic_ls(const Eigen::VectorXd& targets,
                                            const Eigen::VectorXd& weights,
                                            std::optional<Bounds> bounds = std::nullopt)
{
  const Eigen::Index n = targets.size();
  require(weights.size() == n, ErrorCode::invalid_argument, "isotonic: size mismatch");
  require(n >= 1, ErrorCode::invalid_argument, "isotonic: empty input");
  require((weights.array() > 0.0).all() && weights.allFinite(), ErrorCode::invalid_argument,
          "isotonic: weights must be positive");
  require(targets.allFinite(), ErrorCode::invalid_argument, "isotonic: targets must be finite");
  if (bounds)
    require(bounds->lo <= bounds->hi, ErrorCode::invalid_argument, "isotonic: lo > hi");

  // blocks: (weighted mean, total weight, count)
  std::vector<double> mean;
  std::vector<double> wsum;
  std::vector<Eigen::Index> count;
  mean.reserve(n);
  wsum.reserve(n);
  count.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mean.push_back(targets(i));
    wsum.push_back(weights(i));
    count.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
      const std::size_t k = mean.size() - 1;
      const double w = wsum[k - 1] + wsum[k];
      mean[k - 1] = (wsum[k - 1] * mean[k - 1] + wsum[k] * mean[k]) / w;
      wsum[k - 1] = w;
      count[k - 1] += count[k];
      mean.pop_back();
      wsum.pop_back();
      count.pop_back();
    }
  }

  Eigen::VectorXd out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < mean.size(); ++b) {
    double v = mean[b];
    if (bounds)
      v = std::clamp(v, bounds->lo, bounds->hi);
    out.segment(pos, count[b]).setConstant(v);
    pos += count[b];
  }
  return out;
}

//! Same problem under a nonincreasing constraint.
inline Eigen::VectorXd weighted_antitonic_ls(const Eigen::VectorXd& targets,
                                             const Eigen::VectorXd& weights,
                                             std::optional<Bounds> bounds = std::nullopt)
{
  std::optional<Bounds> neg;
  if (bounds)
    neg = Bounds{ -bounds->hi, -bounds->lo };
  return -weighted_isotonic_ls(-targets, weights, neg);
}

} // namespace mixcov
