#pragma once

#include "../types.hpp"
#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace mixcov {

//! m = max(100, ceil(sqrt(n))) equispaced atoms on [min y, max y].
inline std::vector<double> default_atom_grid(const VectorXd& y)
{
  const auto n = static_cast<double>(y.size());
  const auto m = static_cast<std::size_t>(std::max(100.0, std::ceil(std::sqrt(n))));
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  if (!(hi > lo))
    return { lo };
  return linspace(lo, hi, m);
}

//! n x m matrix phi(y_i - a_j).
inline MatrixXd gaussian_kernel(const VectorXd& y, const std::vector<double>& atoms)
{
  MatrixXd k(y.size(), static_cast<Index>(atoms.size()));
  for (Index j = 0; j < k.cols(); ++j)
    for (Index i = 0; i < k.rows(); ++i)
      k(i, j) = norm_pdf(y(i) - atoms[static_cast<std::size_t>(j)]);
  return k;
}

//! Concave objective over the simplex
//!   L(p) = (1/n) sum_i c_i log(a_i (K p)_i + b_i),
//! which covers the weighted KWMLE (c = w, a = 1, b = 0) and the marginal
//! f1 problems (c = 1, a = pi_i, b = (1 - pi_i) f0_i).
class MixtureWeightProblem
{
public:
  MixtureWeightProblem(const MatrixXd& kernel, VectorXd c, VectorXd a, VectorXd b)
    : kernel_(kernel)
    , c_(std::move(c))
    , a_(std::move(a))
    , b_(std::move(b))
  {
    const Index n = kernel_.rows();
    require(c_.size() == n && a_.size() == n && b_.size() == n, ErrorCode::invalid_argument,
            "mixture weight problem: size mismatch");
  }

  Index n() const { return kernel_.rows(); }
  Index m() const { return kernel_.cols(); }

  //! Objective at p; fills the per-observation mixture values a_i (Kp)_i + b_i.
  double objective(const VectorXd& p, VectorXd& mix) const
  {
    // iterates are sparse near the optimum: accumulate only the active columns
    mix.setZero(n());
    for (Index j = 0; j < m(); ++j)
      if (p(j) != 0.0)
        mix.noalias() += p(j) * kernel_.col(j);
    mix = (a_.array() * mix.array() + b_.array()).matrix();
    VectorXd terms(n());
    for (Index i = 0; i < n(); ++i)
      terms(i) = c_(i) == 0.0 ? 0.0 : c_(i) * std::log(std::max(mix(i), kDensityFloor));
    return pairwise_sum(terms) / static_cast<double>(n());
  }

  //! Euclidean gradient in p given the mixture values at p.
  VectorXd gradient(const VectorXd& mix) const
  {
    VectorXd r(n());
    for (Index i = 0; i < n(); ++i)
      r(i) = c_(i) == 0.0 ? 0.0 : c_(i) * a_(i) / std::max(mix(i), kDensityFloor);
    VectorXd g = kernel_.transpose() * r;
    return g / static_cast<double>(n());
  }

private:
  const MatrixXd& kernel_;
  VectorXd c_;
  VectorXd a_;
  VectorXd b_;
};

struct PgdOptions
{
  int max_steps = 2000;
  double rel_tol = 1e-9;
  int max_halvings = 60;
  // first trial step of each line search: Barzilai-Borwein estimate from the
  // previous step (clamped to [1e-10, 1e4]) instead of 1
  bool spectral_step = true;
};

struct PgdResult
{
  VectorXd p;
  double objective = 0.0;
  int steps = 0;
  bool converged = false;
  std::vector<double> trace; // objective after every accepted step, starting value first
};

//! Projected gradient ascent with step halving: from step 1, halve until the
//! projected step strictly increases the objective.
inline PgdResult mixture_pgd(const MixtureWeightProblem& prob, VectorXd p0,
                             const PgdOptions& opt = {})
{
  require(p0.size() == prob.m(), ErrorCode::invalid_argument, "pgd: start has wrong size");
  PgdResult r;
  r.p = simplex_project(p0);
  VectorXd mix(prob.n());
  VectorXd trial_mix(prob.n());
  r.objective = prob.objective(r.p, mix);
  r.trace.push_back(r.objective);
  if (prob.m() == 1) {
    r.converged = true;
    return r;
  }

  VectorXd g_prev;
  VectorXd p_prev;
  while (r.steps < opt.max_steps) {
    const VectorXd g = prob.gradient(mix);
    bool improved = false;
    double step = 1.0;
    if (opt.spectral_step && r.steps > 0) {
      const VectorXd s = r.p - p_prev;
      const double curv = -s.dot(g - g_prev);
      if (curv > 0.0)
        step = std::clamp(s.squaredNorm() / curv, 1e-10, 1e4);
    }
    VectorXd cand;
    double cand_obj = 0.0;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      cand = simplex_project(r.p + step * g);
      cand_obj = prob.objective(cand, trial_mix);
      if (cand_obj > r.objective) {
        improved = true;
        break;
      }
    }
    if (!improved) {
      r.converged = true;
      break;
    }
    const double gain = cand_obj - r.objective;
    p_prev = std::move(r.p);
    g_prev = g;
    r.p = std::move(cand);
    std::swap(mix, trial_mix);
    r.objective = cand_obj;
    r.trace.push_back(r.objective);
    ++r.steps;
    if (gain < opt.rel_tol * std::max(1.0, std::abs(r.objective))) {
      r.converged = true;
      break;
    }
  }
  return r;
}

//! Weighted KWMLE over a fixed atom grid: argmax_p (1/n) sum w_i log sum_j p_j phi(y_i - a_j).
inline PgdResult kwmle_weighted_solve(const VectorXd& w, const VectorXd& y,
                                      const std::vector<double>& atoms, const MatrixXd& kernel,
                                      std::optional<VectorXd> start = std::nullopt,
                                      const PgdOptions& opt = {})
{
  require(w.size() == y.size(), ErrorCode::invalid_argument, "kwmle: size mismatch");
  require((w.array() >= 0.0).all(), ErrorCode::invalid_argument, "kwmle: weights must be >= 0");
  require(w.sum() > 0.0, ErrorCode::weights_all_zero, "kwmle: all weights are zero");
  const auto m = static_cast<Index>(atoms.size());
  MixtureWeightProblem prob(kernel, w, VectorXd::Ones(y.size()), VectorXd::Zero(y.size()));
  VectorXd p0 = start ? *start : VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  return mixture_pgd(prob, std::move(p0), opt);
}

inline MixingMeasure kwmle_weighted(const VectorXd& w, const VectorXd& y,
                                    const std::vector<double>& atoms)
{
  const MatrixXd kernel = gaussian_kernel(y, atoms);
  return MixingMeasure(atoms, to_std(kwmle_weighted_solve(w, y, atoms, kernel).p));
}

//! Largest objective shortfall of the given solution relative to `restarts`
//! random simplex starting points (Dirichlet(1) draws). Near zero or negative
//! means the optimum is flat in the reported direction only.
inline double pgd_flatness_gap(const MixtureWeightProblem& prob, const PgdResult& sol,
                               int restarts, std::uint64_t seed, const PgdOptions& opt = {})
{
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < restarts; ++k) {
    VectorXd p(prob.m());
    for (Index j = 0; j < p.size(); ++j)
      p(j) = expo(rng);
    p /= p.sum();
    const PgdResult alt = mixture_pgd(prob, p, opt);
    worst = std::max(worst, alt.objective - sol.objective);
  }
  return worst;
}

} // namespace mixcov
