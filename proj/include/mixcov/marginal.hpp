#pragma once

#include "em.hpp"

#include <Eigen/Eigenvalues>
#include <limits>

namespace mixcov {

// ---------------------------------------------------------------------------
// f1 given fixed per-observation signal probabilities a_i

struct MarginalF1Options
{
  F1Class f1_class = F1Class::gauss_mix_grid;
  PgdOptions pgd;
  int inner_max_iter = 1000; // fixed-pi EM for the non-grid classes
  double inner_tol = 1e-10;
};

struct MarginalF1Fit
{
  SignalDensity signal;
  VectorXd p;                 // grid weights (GaussMix only)
  std::vector<double> trace;  // objective trace of the solver
};

//! argmax over f1 of (1/n) sum log(a_i f1(y_i) + (1 - a_i) f0(y_i)).
inline MarginalF1Fit marginal_f1_fit(const VectorXd& a, const VectorXd& y, const VectorXd& f0y,
                                     const std::vector<double>& atoms, const MatrixXd& kernel,
                                     const std::optional<VectorXd>& start,
                                     const MarginalF1Options& opt = {})
{
  const Index n = y.size();
  require(a.size() == n && f0y.size() == n, ErrorCode::invalid_argument,
          "marginal f1: size mismatch");
  require((a.array() >= 0.0).all() && (a.array() <= 1.0).all(), ErrorCode::invalid_argument,
          "marginal f1: signal probabilities must lie in [0,1]");
  require((a.array() > 0.0).any(), ErrorCode::weights_all_zero,
          "marginal f1: signal probabilities are all zero");
  const VectorXd b = ((1.0 - a.array()) * f0y.array()).matrix();

  if (opt.f1_class == F1Class::gauss_mix_grid) {
    const auto m = static_cast<Index>(atoms.size());
    MixtureWeightProblem prob(kernel, VectorXd::Ones(n), a, b);
    VectorXd p0 = start && start->size() == m ? *start : VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    PgdResult r = mixture_pgd(prob, std::move(p0), opt.pgd);
    return { SignalDensity::gauss_mix(MixingMeasure(atoms, to_std(r.p))), r.p, std::move(r.trace) };
  }

  // EM over the latent labels with the prior held fixed
  auto fit_block = [&](const VectorXd& w) {
    return opt.f1_class == F1Class::decreasing ? grenander_weighted(y, w)
                                               : fit_param_normal_weighted(w, y);
  };
  SignalDensity f1 = fit_block(a);
  std::vector<double> trace;
  auto objective = [&](const VectorXd& f1y) {
    return loglik_from_mixture((a.array() * f1y.array() + b.array()).matrix()).value;
  };
  VectorXd f1y = f1.pdf(y);
  trace.push_back(objective(f1y));
  for (int it = 0; it < opt.inner_max_iter; ++it) {
    VectorXd w(n);
    for (Index i = 0; i < n; ++i) {
      const double s = a(i) * f1y(i);
      const double mix = s + b(i);
      w(i) = mix > kDensityFloor ? s / mix : a(i);
    }
    SignalDensity next = fit_block(w);
    const VectorXd next_y = next.pdf(y);
    const double obj = objective(next_y);
    if (obj < trace.back())
      break;
    f1 = std::move(next);
    f1y = next_y;
    const double gain = obj - trace.back();
    trace.push_back(obj);
    if (gain < opt.inner_tol)
      break;
  }
  return { f1, VectorXd(), std::move(trace) };
}

//! f1 maximising the marginal likelihood (1/n) sum log(alpha f1 + (1 - alpha) f0).
inline SignalDensity marginal1_f1(double alpha, const VectorXd& y, const NullDensity& f0,
                                  const std::vector<double>& atoms)
{
  require(alpha > 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "marginal1: alpha must lie in (0,1]");
  const MatrixXd kernel = gaussian_kernel(y, atoms);
  return marginal_f1_fit(VectorXd::Constant(y.size(), alpha), y, f0.pdf(y), atoms, kernel,
                         std::nullopt)
    .signal;
}

//! f1 maximising (1/n) sum log(pi_hat(X_i) f1(Y_i) + (1 - pi_hat(X_i)) f0(Y_i)).
inline SignalDensity marginal2_f1(const PriorFn& pi_hat, const Dataset& data, const NullDensity& f0,
                                  const std::vector<double>& atoms)
{
  const MatrixXd kernel = gaussian_kernel(data.y(), atoms);
  return marginal_f1_fit(pi_hat.values(data.x()), data.y(), f0.pdf(data.y()), atoms, kernel,
                         std::nullopt)
    .signal;
}

// ---------------------------------------------------------------------------
// pi given fixed densities

struct PiFitOptions
{
  Index iso_column = 0;
  std::optional<VectorXd> link_start;
  int iso_max_iter = 200;
};

struct PiFit
{
  PriorFn prior;
  bool degenerate = false; // f1 == f0 on the data: objective flat in pi
  bool bounded = false;    // link fit diverged and was refitted with bound_R = 100
};

inline constexpr double kPiClamp = 1e-8;

namespace detail {

inline PriorFn canonical_prior(PiClass cls, const Dataset& data, Index iso_col)
{
  if (is_link_class(cls))
    return PriorFn::link_model(link_of(cls), 0.0, VectorXd::Zero(data.p()));
  if (cls == PiClass::isotonic)
    return isotonic_prior_fit(VectorXd::Constant(data.n(), 0.5), VectorXd::Ones(data.n()), data.x(),
                              iso_col);
  return PriorFn::constant(0.5);
}

//! Maximise sum log(f0 + pi (f1 - f0)) over nondecreasing pi in [0,1] by
//! projected Newton steps: each step is a weighted isotonic fit of the
//! Newton targets, followed by backtracking along the segment.
inline PriorFn isotonic_mixture_pi(const VectorXd& f1y, const VectorXd& f0y, const MatrixXd& x,
                                   Index col, int max_iter)
{
  require(col >= 0 && col < x.cols(), ErrorCode::invalid_argument,
          "isotonic prior: ordering column out of range");
  const Index n = x.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{ 0 });
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a, col) < x(b, col); });
  std::vector<double> knots;
  std::vector<std::vector<Index>> groups;
  for (Index k : order) {
    if (knots.empty() || x(k, col) != knots.back()) {
      knots.push_back(x(k, col));
      groups.emplace_back();
    }
    groups.back().push_back(k);
  }
  const auto m = static_cast<Index>(knots.size());
  const VectorXd diff = f1y - f0y;

  auto objective = [&](const VectorXd& pi) {
    VectorXd t(n);
    for (Index j = 0; j < m; ++j)
      for (Index i : groups[static_cast<std::size_t>(j)])
        t(i) = std::log(std::max(f0y(i) + pi(j) * diff(i), kDensityFloor));
    return pairwise_sum(t);
  };

  VectorXd pi = VectorXd::Constant(m, 0.5);
  double obj = objective(pi);
  for (int it = 0; it < max_iter; ++it) {
    VectorXd grad = VectorXd::Zero(m), hess = VectorXd::Zero(m);
    for (Index j = 0; j < m; ++j)
      for (Index i : groups[static_cast<std::size_t>(j)]) {
        const double mix = std::max(f0y(i) + pi(j) * diff(i), kDensityFloor);
        const double r = diff(i) / mix;
        grad(j) += r;
        hess(j) += r * r;
      }
    const double hfloor = 1e-12 * std::max(1.0, hess.maxCoeff());
    hess = hess.cwiseMax(hfloor);
    const VectorXd target = (pi.array() + grad.array() / hess.array()).matrix();
    const VectorXd proposal = weighted_isotonic_ls(target, hess, Bounds{ 0.0, 1.0 });
    const VectorXd dir = proposal - pi;
    if (dir.lpNorm<Eigen::Infinity>() < 1e-12)
      break;
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const VectorXd cand = pi + t * dir;
      const double v = objective(cand);
      if (v > obj) {
        const double gain = v - obj;
        pi = cand;
        obj = v;
        accepted = gain > 1e-13 * std::max(1.0, std::abs(obj));
        break;
      }
    }
    if (!accepted)
      break;
  }
  // keep exact monotonicity after the convex combinations
  for (Index j = 1; j < m; ++j)
    pi(j) = std::max(pi(j), pi(j - 1));
  pi = pi.cwiseMax(0.0).cwiseMin(1.0);
  return PriorFn::isotonic(col, std::move(knots), to_std(pi));
}

//! argmax over pi in [lo, hi] of sum log(f0 + pi (f1 - f0)); the derivative is
//! decreasing so bisection on its sign is exact.
inline double constant_mixture_pi(const VectorXd& f1y, const VectorXd& f0y)
{
  const VectorXd diff = f1y - f0y;
  auto slope = [&](double pi) {
    double s = 0.0;
    for (Index i = 0; i < diff.size(); ++i)
      s += diff(i) / std::max(f0y(i) + pi * diff(i), kDensityFloor);
    return s;
  };
  double lo = kPiClamp;
  double hi = 1.0 - kPiClamp;
  if (slope(hi) >= 0.0)
    return hi;
  if (slope(lo) <= 0.0)
    return lo;
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

//! pi maximising the joint likelihood with the signal density held at f1_hat.
inline PiFit marginal1_pi(const SignalDensity& f1_hat, const Dataset& data, const NullDensity& f0,
                          PiClass cls, const PiFitOptions& opt = {})
{
  const VectorXd f1y = f1_hat.pdf(data.y());
  const VectorXd f0y = f0.pdf(data.y());
  const double scale = std::max(f1y.cwiseAbs().maxCoeff(), f0y.cwiseAbs().maxCoeff());
  if ((f1y - f0y).cwiseAbs().maxCoeff() <= 1e-14 * scale)
    return { detail::canonical_prior(cls, data, opt.iso_column), true, false };

  if (cls == PiClass::constant)
    return { PriorFn::constant(detail::constant_mixture_pi(f1y, f0y)), false, false };
  if (cls == PiClass::isotonic)
    return { detail::isotonic_mixture_pi(f1y, f0y, data.x(), opt.iso_column, opt.iso_max_iter), false,
             false };

  LinkFitOptions lo;
  lo.start = opt.link_start;
  if (lo.start && lo.start->size() != data.p() + 1)
    lo.start.reset();
  try {
    const LinkFit lf = fit_link_mixture(f1y, f0y, data.x(), link_of(cls), lo);
    return { PriorFn::link_model(link_of(cls), lf.beta0, lf.beta), false, false };
  } catch (const Error& e) {
    if (e.code() != ErrorCode::diverged)
      throw;
  }
  lo.bound_r = 100.0;
  lo.start.reset();
  const LinkFit lf = fit_link_mixture(f1y, f0y, data.x(), link_of(cls), lo);
  return { PriorFn::link_model(link_of(cls), lf.beta0, lf.beta), false, true };
}

// ---------------------------------------------------------------------------
// Marginal method I

struct ProfilePoint
{
  double alpha;
  double loglik;
};

struct Marginal1Options
{
  std::vector<double> grid;      // empty: 0.01, 0.02, ..., 1.00
  bool refine = false;           // second pass at step 0.002 within +-0.02 of the argmax
  std::optional<std::vector<double>> atoms;
  Index iso_column = 0;
  F1Class f1_class = F1Class::gauss_mix_grid;
  PgdOptions pgd;
};

struct Marginal1Result
{
  double pibar_hat = 0.0;
  SignalDensity f1_hat = SignalDensity::param_normal(0.0, 1.0);
  PriorFn pi_hat = PriorFn::constant(0.5);
  std::vector<ProfilePoint> profile;
  double loglik = 0.0;
  bool degenerate = false;
  bool bounded = false; // selected pi came from the bounded link refit
  std::vector<double> atoms;
  std::vector<std::vector<double>> pgd_traces; // one per grid point
};

inline std::vector<double> default_alpha_grid()
{
  std::vector<double> g;
  for (int k = 1; k <= 100; ++k)
    g.push_back(k / 100.0);
  return g;
}

inline Marginal1Result marginal1_profile(const Dataset& data, const NullDensity& f0, PiClass cls,
                                         const Marginal1Options& opt = {})
{
  std::vector<double> grid = opt.grid.empty() ? default_alpha_grid() : opt.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  require(!grid.empty(), ErrorCode::invalid_argument, "marginal1: empty alpha grid");
  for (double a : grid)
    require(a > 0.0 && a <= 1.0, ErrorCode::invalid_argument, "marginal1: alpha grid must lie in (0,1]");

  const VectorXd& y = data.y();
  const VectorXd f0y = f0.pdf(y);
  Marginal1Result res;
  res.atoms = opt.atoms ? *opt.atoms : default_atom_grid(y);
  MatrixXd kernel;
  if (opt.f1_class == F1Class::gauss_mix_grid)
    kernel = gaussian_kernel(y, res.atoms);
  MarginalF1Options fo;
  fo.f1_class = opt.f1_class;
  fo.pgd = opt.pgd;

  struct Candidate
  {
    SignalDensity f1;
    PriorFn pi;
    bool degenerate;
    bool bounded;
  };
  std::optional<Candidate> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  std::optional<VectorXd> warm_p;
  std::optional<VectorXd> warm_link;

  auto evaluate = [&](double alpha) {
    MarginalF1Fit f = marginal_f1_fit(VectorXd::Constant(data.n(), alpha), y, f0y, res.atoms, kernel,
                                      warm_p, fo);
    if (f.p.size() > 0)
      warm_p = f.p;
    res.pgd_traces.push_back(std::move(f.trace));
    PiFitOptions po;
    po.iso_column = opt.iso_column;
    po.link_start = warm_link;
    PiFit pf = marginal1_pi(f.signal, data, f0, cls, po);
    if (const auto* l = std::get_if<prior_kind::LinkModel>(&pf.prior.kind())) {
      VectorXd th(l->beta.size() + 1);
      th(0) = l->beta0;
      th.tail(l->beta.size()) = l->beta;
      warm_link = th;
    }
    const double ll = loglik_joint(pf.prior, f.signal, f0, data);
    return std::make_pair(ll, Candidate{ std::move(f.signal), std::move(pf.prior), pf.degenerate, pf.bounded });
  };

  std::map<double, double> profile;
  auto scan = [&](const std::vector<double>& alphas) {
    for (double a : alphas) {
      if (profile.count(a))
        continue;
      auto [ll, cand] = evaluate(a);
      profile[a] = ll;
      // increasing alpha order within a pass; ties keep the smaller alpha
      if (ll > best_ll || (ll == best_ll && a < best_alpha)) {
        best_ll = ll;
        best_alpha = a;
        best = std::move(cand);
      }
    }
  };
  scan(grid);
  if (opt.refine) {
    std::vector<double> fine;
    for (int k = -10; k <= 10; ++k) {
      const double a = std::round((best_alpha + 0.002 * k) * 1e6) / 1e6;
      if (a > 0.0 && a <= 1.0)
        fine.push_back(a);
    }
    warm_p.reset();
    warm_link.reset();
    scan(fine);
  }

  res.pibar_hat = best_alpha;
  res.loglik = best_ll;
  res.f1_hat = best->f1;
  res.pi_hat = best->pi;
  res.degenerate = best->degenerate;
  res.bounded = best->bounded;
  for (const auto& [a, ll] : profile)
    res.profile.push_back({ a, ll });
  return res;
}

// ---------------------------------------------------------------------------
// Marginal method II

struct Marginal2Options
{
  std::vector<double> mu_grid; // empty: default 41-point grid
  std::optional<std::vector<double>> atoms;
  bool joint_refine = true;    // BFGS over (beta0, beta, mu) from the best grid point
  bool compute_covariance = true;
  Index iso_column = 0;
  F1Class f1_class = F1Class::gauss_mix_grid;
  PgdOptions pgd;
};

struct Marginal2Result
{
  VectorXd theta_hat;  // (beta0, beta, mu) for links; (mu) for the isotonic class
  MatrixXd covariance; // sandwich estimate of n Var(theta_hat); empty for the isotonic class
  SignalDensity f1_hat = SignalDensity::param_normal(0.0, 1.0);
  PriorFn pi_hat = PriorFn::constant(0.5);
  std::vector<double> mu_grid;
  double objective = 0.0; // (1/n) residual sum of squares
  bool covariance_singular = false; // V ill-conditioned at theta_hat; covariance left empty
  std::vector<double> atoms;
};

inline std::vector<double> default_mu_grid(const VectorXd& y, double mu0)
{
  const double r = 1.2 * (y.array() - mu0).abs().maxCoeff();
  return linspace(mu0 - r, mu0 + r, 41);
}

namespace detail {

//! Mean squared residual of y - mu0 - (mu - mu0) g(eta) and its gradient in
//! theta = (beta0, beta, mu).
inline double m2_objective(const VectorXd& theta, const Dataset& data, double mu0, Link g,
                           VectorXd* grad)
{
  const Index q = data.p();
  const Index n = data.n();
  const VectorXd eta = linear_predictor(data.x(), theta.head(q + 1), true);
  const double nu = theta(q + 1) - mu0;
  VectorXd sq(n), dr_eta(n);
  double dmu = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double gi = link::value(g, eta(i));
    const double r = data.y()(i) - mu0 - nu * gi;
    sq(i) = r * r;
    dr_eta(i) = -2.0 * r * nu * link::derivative(g, eta(i));
    dmu += -2.0 * r * gi;
  }
  if (grad) {
    grad->resize(q + 2);
    (*grad)(0) = dr_eta.sum() / static_cast<double>(n);
    if (q > 0)
      grad->segment(1, q).noalias() = data.x().transpose() * dr_eta / static_cast<double>(n);
    (*grad)(q + 1) = dmu / static_cast<double>(n);
  }
  return pairwise_sum(sq) / static_cast<double>(n);
}

} // namespace detail

//! Mean per-observation gradient of the squared loss at theta (used by tests
//! as the finite-difference reference for the analytic Hessian).
inline VectorXd marginal2_gradient(const VectorXd& theta, const Dataset& data, const NullDensity& f0,
                                   Link g)
{
  VectorXd grad;
  detail::m2_objective(theta, data, f0.mean(), g, &grad);
  return grad;
}

//! Analytic mean Hessian V of the squared loss at theta = (beta0, beta, mu).
inline MatrixXd marginal2_hessian(const VectorXd& theta, const Dataset& data, const NullDensity& f0,
                                  Link g)
{
  const Index q = data.p();
  const Index d = q + 2;
  const double mu0 = f0.mean();
  const VectorXd eta = detail::linear_predictor(data.x(), theta.head(q + 1), true);
  const double nu = theta(q + 1) - mu0;
  MatrixXd v = MatrixXd::Zero(d, d);
  VectorXd xt(q + 1);
  for (Index i = 0; i < data.n(); ++i) {
    xt(0) = 1.0;
    if (q > 0)
      xt.tail(q) = data.x().row(i).transpose();
    const double gi = link::value(g, eta(i));
    const double g1 = link::derivative(g, eta(i));
    const double g2 = link::second_derivative(g, eta(i));
    const double r = data.y()(i) - mu0 - nu * gi;
    v.topLeftCorner(q + 1, q + 1).noalias() += (2.0 * nu * nu * g1 * g1 - 2.0 * r * nu * g2) * (xt * xt.transpose());
    v.col(q + 1).head(q + 1) += 2.0 * g1 * (nu * gi - r) * xt;
    v(q + 1, q + 1) += 2.0 * gi * gi;
  }
  v.row(q + 1).head(q + 1) = v.col(q + 1).head(q + 1).transpose();
  return v / static_cast<double>(data.n());
}

//! Sandwich estimate V^{-1} M V^{-1} of n Var(theta_hat), M the mean outer
//! product of per-observation gradients.
inline MatrixXd sandwich_cov(const VectorXd& theta, const Dataset& data, const NullDensity& f0, Link g)
{
  const Index q = data.p();
  const Index d = q + 2;
  require(theta.size() == d, ErrorCode::invalid_argument, "sandwich: theta has the wrong size");
  const double mu0 = f0.mean();
  const MatrixXd v = marginal2_hessian(theta, data, f0, g);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(v);
  const VectorXd ev = es.eigenvalues().cwiseAbs();
  require(ev.minCoeff() > 0.0 && ev.maxCoeff() / ev.minCoeff() < 1e12, ErrorCode::singular_hessian,
          "sandwich: Hessian is singular or ill-conditioned");

  const VectorXd eta = detail::linear_predictor(data.x(), theta.head(q + 1), true);
  const double nu = theta(q + 1) - mu0;
  MatrixXd m = MatrixXd::Zero(d, d);
  VectorXd gi(d);
  for (Index i = 0; i < data.n(); ++i) {
    const double gv = link::value(g, eta(i));
    const double r = data.y()(i) - mu0 - nu * gv;
    const double de = -2.0 * r * nu * link::derivative(g, eta(i));
    gi(0) = de;
    if (q > 0)
      gi.segment(1, q) = de * data.x().row(i).transpose();
    gi(q + 1) = -2.0 * r * gv;
    m.noalias() += gi * gi.transpose();
  }
  m /= static_cast<double>(data.n());
  const MatrixXd vinv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
  MatrixXd c = vinv * m * vinv;
  const MatrixXd sym = 0.5 * (c + c.transpose());
  return sym;
}

inline Marginal2Result marginal2_lse(const Dataset& data, const NullDensity& f0, PiClass cls,
                                     const Marginal2Options& opt = {})
{
  require(cls != PiClass::constant, ErrorCode::invalid_argument,
          "marginal2: a constant prior is not identified by the regression function");
  require(data.p() >= 1, ErrorCode::invalid_argument, "marginal2 needs at least one covariate");
  const double mu0 = f0.mean();
  const VectorXd& y = data.y();
  const Index q = data.p();
  Marginal2Result res;
  const std::vector<double> raw = opt.mu_grid.empty() ? default_mu_grid(y, mu0) : opt.mu_grid;
  for (double mu : raw)
    if (std::abs(mu - mu0) > 1e-6)
      res.mu_grid.push_back(mu);
  require(!res.mu_grid.empty(), ErrorCode::mu_grid_degenerate,
          "marginal2: every mu grid point coincides with the null mean");

  double best = std::numeric_limits<double>::infinity();
  if (cls == PiClass::isotonic) {
    PriorFn best_pi = PriorFn::constant(0.5);
    double best_mu = 0.0;
    const VectorXd yc = (y.array() - mu0).matrix();
    for (double mu : res.mu_grid) {
      const double nu = mu - mu0;
      const PriorFn pi = isotonic_prior_fit(yc / nu, VectorXd::Constant(y.size(), nu * nu), data.x(),
                                            opt.iso_column);
      const VectorXd fitted = pi.values(data.x());
      const double obj = (yc - nu * fitted).squaredNorm() / static_cast<double>(y.size());
      if (obj < best) {
        best = obj;
        best_mu = mu;
        best_pi = pi;
      }
    }
    res.theta_hat = VectorXd::Constant(1, best_mu);
    res.pi_hat = best_pi;
  } else {
    const Link g = link_of(cls);
    VectorXd best_theta;
    VectorXd beta = VectorXd::Zero(q + 1);
    for (double mu : res.mu_grid) {
      auto fg = [&](const VectorXd& b, VectorXd& grad) {
        VectorXd th(q + 2);
        th.head(q + 1) = b;
        th(q + 1) = mu;
        VectorXd full;
        const double v = detail::m2_objective(th, data, mu0, g, &full);
        grad = full.head(q + 1);
        return v;
      };
      BfgsOptions bo;
      bo.grad_tol = 1e-10;
      // a poor warm start from a distant mu can sit in a flat region; take the better of two
      BfgsResult r0 = bfgs_minimize(fg, VectorXd::Zero(q + 1), bo);
      BfgsResult r1 = bfgs_minimize(fg, beta, bo);
      const BfgsResult& r = r1.f < r0.f ? r1 : r0;
      beta = r.x;
      if (r.f < best) {
        best = r.f;
        best_theta.resize(q + 2);
        best_theta.head(q + 1) = r.x;
        best_theta(q + 1) = mu;
      }
    }
    if (opt.joint_refine) {
      auto fg = [&](const VectorXd& th, VectorXd& grad) {
        return detail::m2_objective(th, data, mu0, g, &grad);
      };
      BfgsOptions bo;
      bo.grad_tol = 1e-12;
      bo.max_iter = 2000;
      const BfgsResult r = bfgs_minimize(fg, best_theta, bo);
      // stay inside the searched mu range: outside it the loss can keep falling
      // along mu -> inf, beta0 -> -inf with mu g(eta) nearly fixed
      const auto [lo, hi] = std::minmax_element(res.mu_grid.begin(), res.mu_grid.end());
      const double mu_r = r.x(q + 1);
      if (r.f < best && std::abs(mu_r - mu0) > 1e-6 && mu_r >= *lo && mu_r <= *hi) {
        best = r.f;
        best_theta = r.x;
      }
    }
    res.theta_hat = best_theta;
    res.pi_hat = PriorFn::link_model(g, best_theta(0), best_theta.segment(1, q));
    if (opt.compute_covariance) {
      try {
        res.covariance = sandwich_cov(best_theta, data, f0, g);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::singular_hessian)
          throw;
        res.covariance_singular = true;
      }
    }
  }
  res.objective = best;

  res.atoms = opt.atoms ? *opt.atoms : default_atom_grid(y);
  MatrixXd kernel;
  if (opt.f1_class == F1Class::gauss_mix_grid)
    kernel = gaussian_kernel(y, res.atoms);
  MarginalF1Options fo;
  fo.f1_class = opt.f1_class;
  fo.pgd = opt.pgd;
  res.f1_hat = marginal_f1_fit(res.pi_hat.values(data.x()), y, f0.pdf(y), res.atoms, kernel,
                               std::nullopt, fo)
                 .signal;
  return res;
}

} // namespace mixcov
