#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace mixcov {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461; // 1/sqrt(2 pi)
inline constexpr double kLogSqrt2Pi = 0.9189385332046727417803297; // log sqrt(2 pi)
inline constexpr double kDensityFloor = 1e-300;

inline double norm_pdf(double x)
{
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double norm_log_pdf(double x)
{
  return -kLogSqrt2Pi - 0.5 * x * x;
}

inline double norm_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

//! log Phi(x), accurate in the far left tail.
inline double norm_log_cdf(double x)
{
  if (x > -30.0)
    return std::log(norm_cdf(x));
  // asymptotic Mills-ratio expansion
  const double z2 = 1.0 / (x * x);
  return norm_log_pdf(x) - std::log(-x) +
         std::log1p(-z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2);
}

//! log(1 + exp(x)) without overflow.
inline double log1p_exp(double x)
{
  if (x > 35.0)
    return x;
  if (x < -35.0)
    return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double logistic(double x)
{
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

//! Pairwise (cascade) summation; result does not depend on thread layout.
inline double pairwise_sum(std::span<const double> v)
{
  constexpr std::size_t block = 16;
  if (v.size() <= block) {
    double s = 0.0;
    for (double x : v)
      s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const Eigen::VectorXd& v)
{
  return pairwise_sum(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count)
{
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v)
{
  return { v.data(), v.data() + v.size() };
}

} // namespace mixcov
