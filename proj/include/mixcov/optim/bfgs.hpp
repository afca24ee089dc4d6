#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace mixcov {

struct BfgsOptions
{
  int max_iter = 500;
  double grad_tol = 1e-6; // on ||grad||_2, scaled by max(1, |f|)
  double param_limit = std::numeric_limits<double>::infinity();
};

struct BfgsResult
{
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
};

//! Quasi-Newton minimisation with an inverse-Hessian BFGS update and Armijo
//! backtracking. `fg(x, grad)` returns f(x) and writes the gradient.
template<typename FG>
BfgsResult bfgs_minimize(FG&& fg, Eigen::VectorXd x0, const BfgsOptions& opt = {})
{
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Eigen::Index d = x0.size();
  BfgsResult r;
  r.x = std::move(x0);
  r.grad.resize(d);
  r.f = fg(r.x, r.grad);
  if (d == 0) {
    r.converged = true;
    return r;
  }

  MatrixXd h = MatrixXd::Identity(d, d);
  bool scaled = false;
  VectorXd g_new(d);
  for (int it = 0; it < opt.max_iter; ++it) {
    if (r.grad.norm() <= opt.grad_tol * std::max(1.0, std::abs(r.f))) {
      r.converged = true;
      break;
    }
    VectorXd dir = -h * r.grad;
    double slope = dir.dot(r.grad);
    if (!(slope < 0.0)) {
      h.setIdentity();
      dir = -r.grad;
      slope = dir.dot(r.grad);
    }

    double t = 1.0;
    VectorXd x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = r.x + t * dir;
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    r.iterations = it + 1;
    if (!accepted) {
      // no descent left at machine precision; a small gradient counts as converged
      r.converged = r.grad.norm() <= 1e3 * opt.grad_tol * std::max(1.0, std::abs(r.f));
      break;
    }

    const VectorXd s = x_new - r.x;
    const VectorXd yv = g_new - r.grad;
    r.x = x_new;
    r.f = f_new;
    r.grad = g_new;
    if (r.x.norm() > opt.param_limit) {
      r.diverged = true;
      break;
    }

    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        h *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const VectorXd hy = h * yv;
      h += ((1.0 + rho * yv.dot(hy)) * rho) * (s * s.transpose()) -
           rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  if (!r.converged && !r.diverged)
    r.converged = r.grad.norm() <= opt.grad_tol * std::max(1.0, std::abs(r.f));
  return r;
}

} // namespace mixcov
