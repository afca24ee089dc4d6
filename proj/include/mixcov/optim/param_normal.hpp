#pragma once

#include "../types.hpp"

namespace mixcov {

inline constexpr double kVarianceFloor = 1e-8;

//! Weighted Gaussian MLE: weighted mean and weighted variance (divisor sum w).
inline SignalDensity fit_param_normal_weighted(const VectorXd& w, const VectorXd& y)
{
  require(w.size() == y.size() && y.size() >= 1, ErrorCode::invalid_argument,
          "param normal: size mismatch");
  require((w.array() >= 0.0).all(), ErrorCode::invalid_argument,
          "param normal: weights must be nonnegative");
  const double total = w.sum();
  require(total > 0.0, ErrorCode::weights_all_zero, "param normal: all weights are zero");
  const double mu = w.dot(y) / total;
  const double s2 = w.dot((y.array() - mu).square().matrix()) / total;
  require(s2 > kVarianceFloor, ErrorCode::degenerate_variance,
          "param normal: weighted variance below the floor");
  return SignalDensity::param_normal(mu, s2);
}

} // namespace mixcov
