#pragma once

#include "error.hpp"
#include "numeric.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace mixcov {

//! Link functions g: R -> [0,1] for the parametric prior class pi(x) = g(b0 + b'x).
enum class Link
{
  logistic,
  probit,
  cloglog
};

inline std::string_view to_string(Link link)
{
  switch (link) {
    case Link::logistic:
      return "logistic";
    case Link::probit:
      return "probit";
    case Link::cloglog:
      return "cloglog";
  }
  return "logistic";
}

inline Link link_from_string(std::string_view name)
{
  if (name == "logistic" || name == "logit")
    return Link::logistic;
  if (name == "probit")
    return Link::probit;
  if (name == "cloglog")
    return Link::cloglog;
  throw Error(ErrorCode::invalid_argument, "unknown link '" + std::string(name) + "'");
}

//! Inverse of the standard normal CDF (Acklam's rational approximation plus
//! one Halley refinement step).
inline double norm_quantile(double p)
{
  require(p > 0.0 && p < 1.0, ErrorCode::invalid_argument, "norm_quantile: p must lie in (0,1)");
  static constexpr double a[] = { -3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00 };
  static constexpr double b[] = { -5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01 };
  static constexpr double c[] = { -7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00 };
  static constexpr double d[] = { 7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00 };
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

namespace link {

inline double value(Link g, double eta)
{
  switch (g) {
    case Link::logistic:
      return logistic(eta);
    case Link::probit:
      return norm_cdf(eta);
    case Link::cloglog:
      return -std::expm1(-std::exp(eta));
  }
  return 0.0;
}

inline double log_value(Link g, double eta)
{
  switch (g) {
    case Link::logistic:
      return -log1p_exp(-eta);
    case Link::probit:
      return norm_log_cdf(eta);
    case Link::cloglog:
      return std::log(-std::expm1(-std::exp(eta)));
  }
  return 0.0;
}

//! log(1 - g(eta))
inline double log_complement(Link g, double eta)
{
  switch (g) {
    case Link::logistic:
      return -log1p_exp(eta);
    case Link::probit:
      return norm_log_cdf(-eta);
    case Link::cloglog:
      return -std::exp(eta);
  }
  return 0.0;
}

//! g'(eta)
inline double derivative(Link g, double eta)
{
  switch (g) {
    case Link::logistic: {
      const double p = logistic(eta);
      return p * (1.0 - p);
    }
    case Link::probit:
      return norm_pdf(eta);
    case Link::cloglog:
      return std::exp(eta - std::exp(eta));
  }
  return 0.0;
}

//! g''(eta)
inline double second_derivative(Link g, double eta)
{
  switch (g) {
    case Link::logistic: {
      const double p = logistic(eta);
      return p * (1.0 - p) * (1.0 - 2.0 * p);
    }
    case Link::probit:
      return -eta * norm_pdf(eta);
    case Link::cloglog:
      return std::exp(eta - std::exp(eta)) * (1.0 - std::exp(eta));
  }
  return 0.0;
}

//! d/d eta log g(eta)
inline double dlog_value(Link g, double eta)
{
  switch (g) {
    case Link::logistic:
      return 1.0 - logistic(eta);
    case Link::probit:
      return std::exp(norm_log_pdf(eta) - norm_log_cdf(eta));
    case Link::cloglog: {
      const double t = std::exp(eta);
      if (t < 1e-8)
        return 1.0 - 0.5 * t;
      return std::exp(eta - t) / -std::expm1(-t);
    }
  }
  return 0.0;
}

//! d/d eta log(1 - g(eta))
inline double dlog_complement(Link g, double eta)
{
  switch (g) {
    case Link::logistic:
      return -logistic(eta);
    case Link::probit:
      return -std::exp(norm_log_pdf(eta) - norm_log_cdf(-eta));
    case Link::cloglog:
      return -std::exp(eta);
  }
  return 0.0;
}

//! g^{-1}(p) for p in (0,1).
inline double inverse(Link g, double p)
{
  require(p > 0.0 && p < 1.0, ErrorCode::invalid_argument, "link inverse needs p in (0,1)");
  switch (g) {
    case Link::logistic:
      return std::log(p / (1.0 - p));
    case Link::probit:
      return norm_quantile(p);
    case Link::cloglog:
      return std::log(-std::log1p(-p));
  }
  return 0.0;
}

} // namespace link
} // namespace mixcov
