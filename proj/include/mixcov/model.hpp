#pragma once

#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace mixcov {

//! Per-observation ingredients of the conditional density of Y_i given X_i.
struct MixtureTerms
{
  VectorXd pi;
  VectorXd f1;
  VectorXd f0;

  VectorXd mixture() const { return (pi.array() * f1.array() + (1.0 - pi.array()) * f0.array()).matrix(); }
};

inline MixtureTerms mixture_terms(const PriorFn& prior, const SignalDensity& f1,
                                  const NullDensity& f0, const Dataset& data)
{
  return { prior.values(data.x()), f1.pdf(data.y()), f0.pdf(data.y()) };
}

struct LoglikOptions
{
  bool clamp = true;
};

struct LoglikValue
{
  double value = 0.0;
  long clamped = 0;
};

//! (1/n) sum_i log(pi_i f1_i + (1 - pi_i) f0_i), each density floored at 1e-300.
inline LoglikValue loglik_from_mixture(const VectorXd& mix, const LoglikOptions& opt = {})
{
  VectorXd terms(mix.size());
  long clamped = 0;
  for (Index i = 0; i < mix.size(); ++i) {
    double v = mix(i);
    if (!(v > kDensityFloor)) {
      if (!opt.clamp)
        throw Error(ErrorCode::degenerate_likelihood,
                    "mixture density underflows at observation " + std::to_string(i));
      v = kDensityFloor;
      ++clamped;
    }
    terms(i) = std::log(v);
  }
  return { pairwise_sum(terms) / static_cast<double>(mix.size()), clamped };
}

inline LoglikValue loglik_joint_detail(const PriorFn& prior, const SignalDensity& f1,
                                       const NullDensity& f0, const Dataset& data,
                                       const LoglikOptions& opt = {})
{
  return loglik_from_mixture(mixture_terms(prior, f1, f0, data).mixture(), opt);
}

inline double loglik_joint(const PriorFn& prior, const SignalDensity& f1, const NullDensity& f0,
                           const Dataset& data, const LoglikOptions& opt = {})
{
  return loglik_joint_detail(prior, f1, f0, data, opt).value;
}

//! Posterior null probabilities given the per-observation ingredients.
inline VectorXd lfdr_from_terms(const MixtureTerms& t, bool clamp = true)
{
  VectorXd out(t.pi.size());
  for (Index i = 0; i < out.size(); ++i) {
    const double null_part = (1.0 - t.pi(i)) * t.f0(i);
    const double signal_part = t.pi(i) * t.f1(i);
    const double mix = null_part + signal_part;
    if (!(mix > kDensityFloor)) {
      if (!clamp)
        throw Error(ErrorCode::degenerate_likelihood,
                    "mixture density underflows at observation " + std::to_string(i));
      // both parts vanish: fall back to the prior odds
      out(i) = 1.0 - t.pi(i);
      continue;
    }
    out(i) = std::clamp(null_part / mix, 0.0, 1.0);
  }
  return out;
}

inline VectorXd lfdr_vector(const PriorFn& prior, const SignalDensity& f1, const NullDensity& f0,
                            const Dataset& data, bool clamp = true)
{
  return lfdr_from_terms(mixture_terms(prior, f1, f0, data), clamp);
}

//! E-step weights w_i = P(signal | X_i, Y_i) = 1 - lfdr_i.
inline VectorXd estep_weights(const PriorFn& prior, const SignalDensity& f1,
                              const NullDensity& f0, const Dataset& data, bool clamp = true)
{
  return (1.0 - lfdr_vector(prior, f1, f0, data, clamp).array()).matrix();
}

struct ModelPair
{
  PriorFn prior;
  SignalDensity signal;
};

struct AmleCheck
{
  bool is_amle = false;
  double loglik_gap = 0.0;
};

inline AmleCheck amle_check(const ModelPair& candidate, const ModelPair& truth,
                            const NullDensity& f0, const Dataset& data)
{
  const double lc = loglik_joint(candidate.prior, candidate.signal, f0, data);
  const double lt = loglik_joint(truth.prior, truth.signal, f0, data);
  const double gap = lc - lt;
  return { gap >= -1e-12, gap };
}

// ---------------------------------------------------------------------------
// Hellinger distances

namespace detail {

inline std::pair<double, double> effective_support(const SignalDensity& f)
{
  if (const auto* g = std::get_if<signal_kind::GaussMix>(&f.kind()))
    return { g->mixing.atoms().front() - 6.0, g->mixing.atoms().back() + 6.0 };
  if (const auto* d = std::get_if<signal_kind::Decreasing>(&f.kind()))
    return { 0.0, d->breakpoints.back() };
  const auto& n = std::get<signal_kind::ParamNormal>(f.kind());
  const double s = 6.0 * std::sqrt(n.sigma2);
  return { n.mu - s, n.mu + s };
}

inline std::pair<double, double> effective_support(const NullDensity& f)
{
  if (const auto* n = std::get_if<null_kind::Normal>(&f.kind())) {
    const double s = 6.0 * std::sqrt(n->sigma2);
    return { n->mu - s, n->mu + s };
  }
  if (f.is_uniform())
    return { 0.0, 1.0 };
  return { -6.0, 6.0 };
}

inline bool piecewise_constant(const SignalDensity& f)
{
  return std::holds_alternative<signal_kind::Decreasing>(f.kind());
}

//! Quadrature nodes and weights for integrals of functions built from f0,
//! fA, fB. Piecewise-constant densities get an exact midpoint rule on the
//! merged breakpoints; everything else a 2001-point trapezoid.
inline std::pair<VectorXd, VectorXd> hellinger_rule(const SignalDensity& fa, const SignalDensity& fb,
                                                    const NullDensity& f0)
{
  if (f0.is_uniform() && piecewise_constant(fa) && piecewise_constant(fb)) {
    std::vector<double> cuts{ 0.0, 1.0 };
    for (const auto* f : { &fa, &fb }) {
      const auto& d = std::get<signal_kind::Decreasing>(f->kind());
      cuts.insert(cuts.end(), d.breakpoints.begin(), d.breakpoints.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    // the densities are right-continuous on (b_{k-1}, b_k]; evaluate just inside
    VectorXd nodes(static_cast<Index>(cuts.size()) - 1);
    VectorXd weights(nodes.size());
    for (Index k = 0; k < nodes.size(); ++k) {
      nodes(k) = 0.5 * (cuts[k] + cuts[k + 1]);
      weights(k) = cuts[k + 1] - cuts[k];
    }
    return { nodes, weights };
  }
  auto [lo, hi] = effective_support(f0);
  for (const auto& s : { effective_support(fa), effective_support(fb) }) {
    lo = std::min(lo, s.first);
    hi = std::max(hi, s.second);
  }
  constexpr Index k = 2001;
  const VectorXd nodes = to_eigen(linspace(lo, hi, k));
  const double h = (hi - lo) / static_cast<double>(k - 1);
  VectorXd weights = VectorXd::Constant(k, h);
  weights(0) = weights(k - 1) = 0.5 * h;
  return { nodes, weights };
}

} // namespace detail

//! (1/n) sum_i h_i^2 between the conditional densities of Y given X_i under A and B,
//! h^2(f, g) = int (sqrt f - sqrt g)^2.
inline double avg_hellinger_sq(const ModelPair& a, const ModelPair& b, const NullDensity& f0,
                               const Dataset& data)
{
  const auto [nodes, weights] = detail::hellinger_rule(a.signal, b.signal, f0);
  const VectorXd g0 = f0.pdf(nodes);
  const VectorXd ga = a.signal.pdf(nodes);
  const VectorXd gb = b.signal.pdf(nodes);
  const VectorXd pa = a.prior.values(data.x());
  const VectorXd pb = b.prior.values(data.x());

  // observations sharing the same (pi_A, pi_B) share h_i; symmetric key order
  std::map<std::pair<double, double>, double> cache;
  VectorXd h2(data.n());
  for (Index i = 0; i < data.n(); ++i) {
    const auto key = std::make_pair(pa(i), pb(i));
    auto it = cache.find(key);
    if (it == cache.end()) {
      double s = 0.0;
      for (Index k = 0; k < nodes.size(); ++k) {
        const double da = std::sqrt(std::max(0.0, pa(i) * ga(k) + (1.0 - pa(i)) * g0(k)));
        const double db = std::sqrt(std::max(0.0, pb(i) * gb(k) + (1.0 - pb(i)) * g0(k)));
        s += weights(k) * (da - db) * (da - db);
      }
      it = cache.emplace(key, std::clamp(s, 0.0, 2.0)).first;
    }
    h2(i) = it->second;
  }
  return pairwise_sum(h2) / static_cast<double>(data.n());
}

//! Squared Hellinger distance between two signal densities.
inline double hellinger_sq(const SignalDensity& fa, const SignalDensity& fb,
                           const NullDensity& f0 = NullDensity::std_normal())
{
  const Dataset one(VectorXd::Zero(1));
  return avg_hellinger_sq({ PriorFn::constant(1.0), fa }, { PriorFn::constant(1.0), fb }, f0, one);
}

// ---------------------------------------------------------------------------
// Non-identifiability shift

//! (pi, F1) -> (pi / (1 - c), c F0 + (1 - c) F1), which leaves every conditional
//! density unchanged. Supported: Constant and Isotonic priors (Link only for
//! c = 0); GaussMix signals with a unit-variance normal null, Decreasing
//! signals with the uniform null.
inline ModelPair c_shift(const PriorFn& prior, const SignalDensity& f1, const NullDensity& f0,
                         double c)
{
  require(std::isfinite(c) && c != 1.0, ErrorCode::infeasible_shift, "c_shift needs c != 1");
  if (c == 0.0)
    return { prior, f1 };
  const double scale = 1.0 / (1.0 - c);
  auto check_unit = [](double v) {
    require(v >= 0.0 && v <= 1.0, ErrorCode::infeasible_shift,
            "c_shift: shifted prior leaves [0,1]");
  };

  std::optional<PriorFn> shifted_prior;
  if (const auto* k = std::get_if<prior_kind::Constant>(&prior.kind())) {
    const double v = k->c * scale;
    check_unit(v);
    shifted_prior = PriorFn::constant(std::min(v, 1.0));
  } else if (const auto* iso = std::get_if<prior_kind::Isotonic>(&prior.kind())) {
    std::vector<double> vals = iso->values;
    for (double& v : vals) {
      v *= scale;
      check_unit(v);
    }
    shifted_prior = PriorFn::isotonic(iso->column, iso->knots, std::move(vals));
  } else {
    throw Error(ErrorCode::infeasible_shift, "c_shift: link priors are not closed under scaling");
  }

  if (const auto* g = std::get_if<signal_kind::GaussMix>(&f1.kind())) {
    double null_atom = 0.0;
    if (const auto* nn = std::get_if<null_kind::Normal>(&f0.kind())) {
      require(nn->sigma2 == 1.0, ErrorCode::infeasible_shift,
              "c_shift: null is not a unit-variance Gaussian");
      null_atom = nn->mu;
    } else {
      require(f0.is_std_normal(), ErrorCode::infeasible_shift,
              "c_shift: null is not a unit-variance Gaussian");
    }
    std::vector<double> atoms = g->mixing.atoms();
    std::vector<double> weights = g->mixing.weights();
    for (double& w : weights)
      w *= (1.0 - c);
    auto it = std::lower_bound(atoms.begin(), atoms.end(), null_atom);
    const auto pos = static_cast<std::size_t>(it - atoms.begin());
    if (it != atoms.end() && *it == null_atom)
      weights[pos] += c;
    else {
      atoms.insert(it, null_atom);
      weights.insert(weights.begin() + static_cast<std::ptrdiff_t>(pos), c);
    }
    for (double& w : weights) {
      require(w >= -1e-15, ErrorCode::infeasible_shift, "c_shift: negative mixing weight");
      w = std::max(w, 0.0);
    }
    return { *shifted_prior, SignalDensity::gauss_mix(MixingMeasure(std::move(atoms), std::move(weights))) };
  }

  if (const auto* d = std::get_if<signal_kind::Decreasing>(&f1.kind())) {
    require(f0.is_uniform(), ErrorCode::infeasible_shift,
            "c_shift: decreasing signals need the uniform null");
    std::vector<double> bps = d->breakpoints;
    std::vector<double> lv = d->levels;
    for (double& l : lv)
      l = (1.0 - c) * l + c;
    if (bps.back() < 1.0) {
      bps.push_back(1.0);
      lv.push_back(c);
    }
    for (double l : lv)
      require(l >= 0.0, ErrorCode::infeasible_shift, "c_shift: negative density level");
    return { *shifted_prior, SignalDensity::decreasing(std::move(bps), std::move(lv)) };
  }

  const auto& pn = std::get<signal_kind::ParamNormal>(f1.kind());
  const bool same_as_null = (f0.is_std_normal() && pn.mu == 0.0 && pn.sigma2 == 1.0) ||
                            (std::holds_alternative<null_kind::Normal>(f0.kind()) &&
                             std::get<null_kind::Normal>(f0.kind()).mu == pn.mu &&
                             std::get<null_kind::Normal>(f0.kind()).sigma2 == pn.sigma2);
  require(same_as_null, ErrorCode::infeasible_shift,
          "c_shift: a normal signal stays normal only when it equals the null");
  return { *shifted_prior, f1 };
}

} // namespace mixcov
