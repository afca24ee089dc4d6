#pragma once

#include "../error.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

namespace mixcov {

//! Euclidean projection onto the probability simplex {p >= 0, sum p = 1}.
//! Sort-based, O(m log m).
inline Eigen::VectorXd simplex_project(const Eigen::VectorXd& v)
{
  const Eigen::Index m = v.size();
  require(m >= 1, ErrorCode::invalid_argument, "simplex_project needs m >= 1");
  require(v.allFinite(), ErrorCode::invalid_argument, "simplex_project needs finite input");

  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0)
      tau = t;
  }
  Eigen::VectorXd p = (v.array() - tau).max(0.0);
  // remove rounding drift so that sum(p) == 1 to machine precision
  const double s = p.sum();
  if (s > 0.0)
    p /= s;
  return p;
}

} // namespace mixcov
