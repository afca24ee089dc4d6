#pragma once

#include "model.hpp"
#include "optim/grenander.hpp"
#include "optim/isotonic.hpp"
#include "optim/link_fit.hpp"
#include "optim/mixture_pgd.hpp"
#include "optim/param_normal.hpp"

#include <numeric>
#include <optional>
#include <string>

namespace mixcov {

enum class PiClass
{
  link_logistic,
  link_probit,
  link_cloglog,
  isotonic,
  constant
};

enum class F1Class
{
  gauss_mix_grid,
  decreasing,
  param_normal
};

inline std::string_view to_string(PiClass c)
{
  switch (c) {
    case PiClass::link_logistic:
      return "logistic";
    case PiClass::link_probit:
      return "probit";
    case PiClass::link_cloglog:
      return "cloglog";
    case PiClass::isotonic:
      return "isotonic";
    case PiClass::constant:
      return "constant";
  }
  return "constant";
}

inline PiClass pi_class_from_string(std::string_view s)
{
  if (s == "logistic")
    return PiClass::link_logistic;
  if (s == "probit")
    return PiClass::link_probit;
  if (s == "cloglog")
    return PiClass::link_cloglog;
  if (s == "isotonic")
    return PiClass::isotonic;
  if (s == "constant")
    return PiClass::constant;
  throw Error(ErrorCode::invalid_argument, "unknown prior class '" + std::string(s) + "'");
}

inline std::string_view to_string(F1Class c)
{
  switch (c) {
    case F1Class::gauss_mix_grid:
      return "gaussmix";
    case F1Class::decreasing:
      return "decreasing";
    case F1Class::param_normal:
      return "paramnormal";
  }
  return "gaussmix";
}

inline F1Class f1_class_from_string(std::string_view s)
{
  if (s == "gaussmix")
    return F1Class::gauss_mix_grid;
  if (s == "decreasing")
    return F1Class::decreasing;
  if (s == "paramnormal")
    return F1Class::param_normal;
  throw Error(ErrorCode::invalid_argument, "unknown signal class '" + std::string(s) + "'");
}

inline bool is_link_class(PiClass c)
{
  return c == PiClass::link_logistic || c == PiClass::link_probit || c == PiClass::link_cloglog;
}

inline Link link_of(PiClass c)
{
  switch (c) {
    case PiClass::link_probit:
      return Link::probit;
    case PiClass::link_cloglog:
      return Link::cloglog;
    default:
      return Link::logistic;
  }
}

struct EmConfig
{
  int max_iter = 500;
  double tol = 1e-6;
  PiClass pi_class = PiClass::link_logistic;
  F1Class f1_class = F1Class::gauss_mix_grid;
  std::optional<std::vector<double>> atom_grid;
  Index iso_column = 0;        // ordering covariate of the isotonic class
  int pgd_steps_per_iter = 25; // inner projected-gradient steps per M-step
};

// ---------------------------------------------------------------------------
// M-step helpers shared with the marginal methods

//! Bounded isotonic fit of `targets` in the order of covariate column `col`.
//! Tied covariate values are pooled first so the fit is a function of x.
inline PriorFn isotonic_prior_fit(const VectorXd& targets, const VectorXd& tw, const MatrixXd& x,
                                  Index col)
{
  require(col >= 0 && col < x.cols(), ErrorCode::invalid_argument,
          "isotonic prior: ordering column out of range");
  const Index n = x.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{ 0 });
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a, col) < x(b, col); });
  std::vector<double> knots;
  std::vector<double> num;
  std::vector<double> den;
  for (Index k : order) {
    if (!knots.empty() && x(k, col) == knots.back()) {
      num.back() += tw(k) * targets(k);
      den.back() += tw(k);
    } else {
      knots.push_back(x(k, col));
      num.push_back(tw(k) * targets(k));
      den.push_back(tw(k));
    }
  }
  const auto m = static_cast<Index>(knots.size());
  VectorXd t(m), wt(m);
  for (Index j = 0; j < m; ++j) {
    wt(j) = std::max(den[j], 1e-300);
    t(j) = den[j] > 0.0 ? num[j] / den[j] : 0.0;
  }
  VectorXd fit = weighted_isotonic_ls(t, wt, Bounds{ 0.0, 1.0 });
  return PriorFn::isotonic(col, std::move(knots), to_std(fit));
}

//! (1/n) sum w log pi + (1 - w) log(1 - pi), with 0 log 0 = 0.
inline double bernoulli_surrogate(const VectorXd& w, const VectorXd& pi)
{
  VectorXd t(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    double v = 0.0;
    if (w(i) > 0.0)
      v += w(i) * std::log(std::max(pi(i), kDensityFloor));
    if (w(i) < 1.0)
      v += (1.0 - w(i)) * std::log(std::max(1.0 - pi(i), kDensityFloor));
    t(i) = v;
  }
  return pairwise_sum(t) / static_cast<double>(w.size());
}

// ---------------------------------------------------------------------------

namespace detail {

struct EmState
{
  std::optional<PriorFn> prior;
  std::optional<SignalDensity> signal;
  VectorXd p; // grid weights for the GaussMix class
};

inline std::optional<VectorXd> link_start(const PriorFn& prior, Link g, Index q)
{
  if (const auto* l = std::get_if<prior_kind::LinkModel>(&prior.kind()))
    if (l->link == g && l->beta.size() == q) {
      VectorXd th(q + 1);
      th(0) = l->beta0;
      th.tail(q) = l->beta;
      return th;
    }
  return std::nullopt;
}

} // namespace detail

//! M-step for pi given E-step weights. `prev` is kept when the new fit fails
//! or would lower the surrogate.
inline PriorFn m_step_prior(const VectorXd& w, const Dataset& data, const EmConfig& cfg,
                            const PriorFn& prev, FitDiagnostics& diag)
{
  switch (cfg.pi_class) {
    case PiClass::constant:
      return PriorFn::constant(std::clamp(w.mean(), 0.0, 1.0));
    case PiClass::isotonic:
      return isotonic_prior_fit(w, VectorXd::Ones(w.size()), data.x(), cfg.iso_column);
    default:
      break;
  }
  const Link g = link_of(cfg.pi_class);
  LinkFitOptions opt;
  opt.start = detail::link_start(prev, g, data.p());
  std::optional<LinkFit> fit;
  try {
    fit = fit_link_weighted_bernoulli(w, data.x(), g, opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::diverged)
      throw;
    diag.flags.emplace_back("pi_link_diverged_bounded_retry");
    opt.bound_r = 100.0;
    opt.start.reset();
    try {
      fit = fit_link_weighted_bernoulli(w, data.x(), g, opt);
    } catch (const Error& e2) {
      if (e2.code() != ErrorCode::diverged)
        throw;
      diag.flags.emplace_back("pi_link_diverged_kept_previous");
      return prev;
    }
  }
  PriorFn cand = PriorFn::link_model(g, fit->beta0, fit->beta);
  if (opt.start) {
    const double before = bernoulli_surrogate(w, prev.values(data.x()));
    const double after = bernoulli_surrogate(w, cand.values(data.x()));
    if (after < before) {
      diag.flags.emplace_back("pi_step_rejected");
      return prev;
    }
  }
  return cand;
}

//! Full nonparametric MLE by EM. The design matrix of `data` is used as-is by
//! the link classes (expand it beforehand if needed).
inline MixtureFit em_fit(const Dataset& data, const NullDensity& f0, const ModelPair& init,
                         const EmConfig& cfg)
{
  require(cfg.max_iter >= 1, ErrorCode::invalid_argument, "em: max_iter must be >= 1");
  require(cfg.tol > 0.0, ErrorCode::invalid_argument, "em: tol must be > 0");
  const VectorXd& y = data.y();
  MixtureTerms terms;
  try {
    terms = mixture_terms(init.prior, init.signal, f0, data);
  } catch (const Error& e) {
    throw Error(ErrorCode::init_invalid, std::string("em: initial value not evaluable: ") + e.what());
  }
  {
    const VectorXd mix = terms.mixture();
    require((mix.array() > kDensityFloor).any(), ErrorCode::init_invalid,
            "em: initial mixture density vanishes at every observation");
  }
  if (cfg.pi_class == PiClass::isotonic)
    require(data.p() >= 1 && cfg.iso_column < data.p(), ErrorCode::init_invalid,
            "em: isotonic prior needs an ordering covariate");
  if (is_link_class(cfg.pi_class) && std::holds_alternative<prior_kind::LinkModel>(init.prior.kind()))
    require(std::get<prior_kind::LinkModel>(init.prior.kind()).beta.size() == data.p(),
            ErrorCode::init_invalid, "em: initial link prior has the wrong dimension");

  // grid set-up for the GaussMix class
  std::vector<double> atoms;
  MatrixXd kernel;
  VectorXd p;
  if (cfg.f1_class == F1Class::gauss_mix_grid) {
    atoms = cfg.atom_grid ? *cfg.atom_grid : default_atom_grid(y);
    kernel = gaussian_kernel(y, atoms);
    const auto m = static_cast<Index>(atoms.size());
    p = VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    if (const auto* mm = init.signal.mixing(); mm && mm->atoms() == atoms)
      p = to_eigen(mm->weights());
  }
  if (cfg.f1_class == F1Class::decreasing)
    require((y.array() > 0.0).all() && (y.array() <= 1.0).all(), ErrorCode::invalid_argument,
            "em: decreasing signal needs responses in (0,1]");

  PriorFn prior = init.prior;
  SignalDensity signal = init.signal;
  MixtureFit fit{ prior, signal, f0, 0.0, VectorXd(), VectorXd(), 0, false, FitDiagnostics{} };
  FitDiagnostics& diag = fit.diagnostics;
  diag.loglik_trace.push_back(loglik_from_mixture(terms.mixture()).value);
  VectorXd lfdr = lfdr_from_terms(terms);
  VectorXd w = (1.0 - lfdr.array()).matrix();

  PgdOptions pgd;
  pgd.max_steps = cfg.pgd_steps_per_iter;
  int it = 0;
  bool converged = false;
  while (it < cfg.max_iter) {
    ++it;
    prior = m_step_prior(w, data, cfg, prior, diag);
    switch (cfg.f1_class) {
      case F1Class::gauss_mix_grid: {
        const PgdResult r = kwmle_weighted_solve(w, y, atoms, kernel, p, pgd);
        p = r.p;
        signal = SignalDensity::gauss_mix(MixingMeasure(atoms, to_std(p)));
        break;
      }
      case F1Class::decreasing:
        signal = grenander_weighted(y, w);
        break;
      case F1Class::param_normal:
        signal = fit_param_normal_weighted(w, y);
        break;
    }
    terms = mixture_terms(prior, signal, f0, data);
    const LoglikValue ll = loglik_from_mixture(terms.mixture());
    if (ll.value < diag.loglik_trace.back() - 1e-9)
      diag.monotone = false;
    diag.loglik_trace.push_back(ll.value);
    lfdr = lfdr_from_terms(terms);
    const VectorXd w_new = (1.0 - lfdr.array()).matrix();
    const double delta = (w_new - w).norm();
    w = w_new;
    if (delta < cfg.tol) {
      converged = true;
      break;
    }
  }

  fit.prior = prior;
  fit.signal = signal;
  fit.pi_hat = terms.pi;
  const LoglikValue final_ll = loglik_from_mixture(terms.mixture());
  fit.loglik = final_ll.value;
  diag.clamped_terms = final_ll.clamped;
  fit.lfdr = lfdr;
  fit.iterations = it;
  fit.converged = converged;
  return fit;
}

} // namespace mixcov
