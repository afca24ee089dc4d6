#pragma once

#include "../types.hpp"
#include "bfgs.hpp"

#include <optional>

namespace mixcov {

struct LinkFit
{
  double beta0 = 0.0;
  VectorXd beta;
  double objective = 0.0; // maximised average objective
  bool converged = false;
  bool bounded = false;   // norm bound was active
};

struct LinkFitOptions
{
  bool intercept = true;
  std::optional<double> bound_r;
  std::optional<VectorXd> start; // (beta0, beta) or beta when intercept is off
  int max_iter = 500;
};

namespace detail {

inline constexpr double kDivergenceNorm = 1e6;

inline VectorXd linear_predictor(const MatrixXd& design, const VectorXd& theta, bool intercept)
{
  const Index q = design.cols();
  VectorXd eta = VectorXd::Constant(design.rows(), intercept ? theta(0) : 0.0);
  if (q > 0)
    eta.noalias() += design * theta.tail(q);
  return eta;
}

//! Shared driver: `term(i, eta_i, dterm)` returns the per-observation
//! contribution to the maximised objective and its eta-derivative.
template<typename Term>
LinkFit maximise_link_objective(const MatrixXd& design, Term&& term, const LinkFitOptions& opt)
{
  const Index n = design.rows();
  const Index q = design.cols();
  const Index d = q + (opt.intercept ? 1 : 0);
  require(d >= 1, ErrorCode::invalid_argument, "link fit: no parameters to fit");
  const double r2 = opt.bound_r ? (*opt.bound_r) * (*opt.bound_r) : 0.0;

  VectorXd dterm(n);
  VectorXd val(n);
  auto fg = [&](const VectorXd& theta, VectorXd& grad) {
    const VectorXd eta = linear_predictor(design, theta, opt.intercept);
    for (Index i = 0; i < n; ++i) {
      double de = 0.0;
      val(i) = term(i, eta(i), de);
      dterm(i) = de;
    }
    double f = -pairwise_sum(val) / static_cast<double>(n);
    grad.resize(d);
    if (opt.intercept)
      grad(0) = -dterm.sum() / static_cast<double>(n);
    if (q > 0)
      grad.tail(q).noalias() = -(design.transpose() * dterm) / static_cast<double>(n);
    if (opt.bound_r) {
      const double excess = theta.squaredNorm() - r2;
      if (excess > 0.0) {
        f += 1e-6 * excess;
        grad += 2e-6 * theta;
      }
    }
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  VectorXd theta0 = VectorXd::Zero(d);
  if (opt.start) {
    require(opt.start->size() == d, ErrorCode::invalid_argument, "link fit: start has wrong size");
    theta0 = *opt.start;
  }
  BfgsOptions bo;
  bo.max_iter = opt.max_iter;
  if (!opt.bound_r)
    bo.param_limit = kDivergenceNorm;
  BfgsResult res = bfgs_minimize(fg, theta0, bo);
  if (res.diverged)
    throw Error(ErrorCode::diverged, "link fit: parameter norm exceeded 1e6 (separation?)");
  // Saturated links flatten the gradient, so BFGS can stop on tolerance while
  // still running along a separating ray. Probe the ray at the guard radius.
  if (!opt.bound_r && res.x.norm() > 0.0) {
    VectorXd scratch;
    const VectorXd far = res.x * (kDivergenceNorm / res.x.norm());
    const double f_far = fg(far, scratch);
    if (f_far <= res.f + 1e-12 * std::max(1.0, std::abs(res.f)))
      throw Error(ErrorCode::diverged, "link fit: objective keeps improving beyond norm 1e6 (separation?)");
  }

  LinkFit out;
  VectorXd theta = res.x;
  if (opt.bound_r && theta.norm() > *opt.bound_r) {
    theta *= *opt.bound_r / theta.norm();
    out.bounded = true;
  }
  out.beta0 = opt.intercept ? theta(0) : 0.0;
  out.beta = theta.tail(q);
  VectorXd scratch;
  out.objective = -fg(theta, scratch);
  if (opt.bound_r && theta.squaredNorm() > r2)
    out.objective += 1e-6 * (theta.squaredNorm() - r2);
  out.converged = res.converged;
  return out;
}

} // namespace detail

//! argmax over (beta0, beta) of (1/n) sum w_i log g(eta_i) + (1 - w_i) log(1 - g(eta_i)).
inline LinkFit fit_link_weighted_bernoulli(const VectorXd& w, const MatrixXd& design, Link g,
                                           const LinkFitOptions& opt = {})
{
  require(w.size() == design.rows(), ErrorCode::invalid_argument, "link fit: size mismatch");
  require((w.array() >= 0.0).all() && (w.array() <= 1.0).all(), ErrorCode::invalid_argument,
          "link fit: weights must lie in [0,1]");
  auto term = [&](Index i, double eta, double& de) {
    const double wi = w(i);
    double v = 0.0;
    de = 0.0;
    if (wi > 0.0) {
      v += wi * link::log_value(g, eta);
      de += wi * link::dlog_value(g, eta);
    }
    if (wi < 1.0) {
      v += (1.0 - wi) * link::log_complement(g, eta);
      de += (1.0 - wi) * link::dlog_complement(g, eta);
    }
    return v;
  };
  return detail::maximise_link_objective(design, term, opt);
}

//! argmax over (beta0, beta) of (1/n) sum log(g(eta_i) f1_i + (1 - g(eta_i)) f0_i):
//! the likelihood in pi with both densities held fixed.
inline LinkFit fit_link_mixture(const VectorXd& f1, const VectorXd& f0, const MatrixXd& design,
                                Link g, const LinkFitOptions& opt = {})
{
  require(f1.size() == design.rows() && f0.size() == design.rows(), ErrorCode::invalid_argument,
          "link mixture fit: size mismatch");
  auto term = [&](Index i, double eta, double& de) {
    const double p = link::value(g, eta);
    const double mix = std::max(p * f1(i) + (1.0 - p) * f0(i), kDensityFloor);
    de = link::derivative(g, eta) * (f1(i) - f0(i)) / mix;
    return std::log(mix);
  };
  return detail::maximise_link_objective(design, term, opt);
}

} // namespace mixcov
