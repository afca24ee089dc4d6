#pragma once

#include "error.hpp"
#include "link.hpp"
#include "numeric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mixcov {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

//! n responses plus an n x p covariate (or design) matrix. p = 0 is the
//! covariate-free two-groups model.
class Dataset
{
public:
  explicit Dataset(VectorXd y)
    : Dataset(std::move(y), MatrixXd(0, 0))
  {}

  Dataset(VectorXd y, MatrixXd x)
    : y_(std::move(y))
    , x_(std::move(x))
  {
    if (x_.size() == 0)
      x_.resize(y_.size(), 0);
    require(y_.size() >= 1, ErrorCode::invalid_argument, "dataset needs at least one response");
    require(x_.rows() == y_.size(), ErrorCode::invalid_argument,
            "covariate row count must equal the number of responses");
    require(y_.allFinite(), ErrorCode::invalid_argument, "responses must be finite");
    require(x_.allFinite(), ErrorCode::invalid_argument, "covariates must be finite");
  }

  const VectorXd& y() const { return y_; }
  const MatrixXd& x() const { return x_; }
  Index n() const { return y_.size(); }
  Index p() const { return x_.cols(); }

  //! Same responses, different covariate representation.
  Dataset with_design(MatrixXd design) const { return Dataset(y_, std::move(design)); }

private:
  VectorXd y_;
  MatrixXd x_;
};

// ---------------------------------------------------------------------------
// Null density f0

namespace null_kind {
struct StdNormal
{};
struct Normal
{
  double mu = 0.0;
  double sigma2 = 1.0;
};
struct UniformUnit
{};
} // namespace null_kind

class NullDensity
{
public:
  using Kind = std::variant<null_kind::StdNormal, null_kind::Normal, null_kind::UniformUnit>;

  NullDensity()
    : kind_(null_kind::StdNormal{})
  {}

  static NullDensity std_normal() { return NullDensity(null_kind::StdNormal{}); }
  static NullDensity normal(double mu, double sigma2)
  {
    require(std::isfinite(mu) && std::isfinite(sigma2) && sigma2 > 0.0,
            ErrorCode::invalid_argument, "normal null needs finite mu and sigma2 > 0");
    return NullDensity(null_kind::Normal{ mu, sigma2 });
  }
  static NullDensity uniform_unit() { return NullDensity(null_kind::UniformUnit{}); }

  const Kind& kind() const { return kind_; }

  double pdf(double y) const
  {
    if (std::holds_alternative<null_kind::StdNormal>(kind_))
      return norm_pdf(y);
    if (const auto* n = std::get_if<null_kind::Normal>(&kind_)) {
      const double s = std::sqrt(n->sigma2);
      return norm_pdf((y - n->mu) / s) / s;
    }
    return (y >= 0.0 && y <= 1.0) ? 1.0 : 0.0;
  }

  VectorXd pdf(const VectorXd& y) const { return y.unaryExpr([this](double v) { return pdf(v); }); }

  double mean() const
  {
    if (const auto* n = std::get_if<null_kind::Normal>(&kind_))
      return n->mu;
    if (std::holds_alternative<null_kind::UniformUnit>(kind_))
      return 0.5;
    return 0.0;
  }

  bool is_std_normal() const { return std::holds_alternative<null_kind::StdNormal>(kind_); }
  bool is_uniform() const { return std::holds_alternative<null_kind::UniformUnit>(kind_); }

  friend bool operator==(const NullDensity& a, const NullDensity& b)
  {
    if (a.kind_.index() != b.kind_.index())
      return false;
    if (const auto* n = std::get_if<null_kind::Normal>(&a.kind_)) {
      const auto& m = std::get<null_kind::Normal>(b.kind_);
      return n->mu == m.mu && n->sigma2 == m.sigma2;
    }
    return true;
  }

private:
  explicit NullDensity(Kind kind)
    : kind_(kind)
  {}
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Mixing measure G on a finite set of atoms

class MixingMeasure
{
public:
  MixingMeasure(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms))
    , weights_(std::move(weights))
  {
    require(!atoms_.empty() && atoms_.size() == weights_.size(), ErrorCode::invalid_argument,
            "mixing measure needs equally many (>= 1) atoms and weights");
    double total = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      require(std::isfinite(atoms_[j]), ErrorCode::invalid_argument, "atoms must be finite");
      require(j == 0 || atoms_[j] > atoms_[j - 1], ErrorCode::invalid_argument,
              "atoms must be strictly increasing");
      require(weights_[j] >= 0.0, ErrorCode::invalid_argument, "mixing weights must be >= 0");
      total += weights_[j];
    }
    require(std::abs(total - 1.0) <= 1e-10, ErrorCode::invalid_argument,
            "mixing weights must sum to 1");
  }

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  //! sum_j p_j phi(y - a_j)
  double pdf(double y) const
  {
    double s = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j)
      if (weights_[j] > 0.0)
        s += weights_[j] * norm_pdf(y - atoms_[j]);
    return s;
  }

  friend bool operator==(const MixingMeasure&, const MixingMeasure&) = default;

private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Signal density f1

namespace signal_kind {
struct GaussMix
{
  MixingMeasure mixing;
};
struct Decreasing
{
  std::vector<double> breakpoints; // strictly increasing in (0,1]
  std::vector<double> levels;      // nonincreasing, >= 0
};
struct ParamNormal
{
  double mu = 0.0;
  double sigma2 = 1.0;
};
} // namespace signal_kind

class SignalDensity
{
public:
  using Kind = std::variant<signal_kind::GaussMix, signal_kind::Decreasing, signal_kind::ParamNormal>;

  static SignalDensity gauss_mix(MixingMeasure mixing)
  {
    return SignalDensity(signal_kind::GaussMix{ std::move(mixing) });
  }

  static SignalDensity decreasing(std::vector<double> breakpoints, std::vector<double> levels)
  {
    require(!breakpoints.empty() && breakpoints.size() == levels.size(),
            ErrorCode::invalid_argument, "decreasing density needs matching breakpoints/levels");
    double mass = 0.0;
    double left = 0.0;
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      require(breakpoints[i] > left && breakpoints[i] <= 1.0, ErrorCode::invalid_argument,
              "breakpoints must be strictly increasing in (0,1]");
      require(levels[i] >= 0.0 && std::isfinite(levels[i]), ErrorCode::invalid_argument,
              "levels must be finite and nonnegative");
      require(i == 0 || levels[i] <= levels[i - 1], ErrorCode::invalid_argument,
              "levels must be nonincreasing");
      mass += levels[i] * (breakpoints[i] - left);
      left = breakpoints[i];
    }
    require(std::abs(mass - 1.0) <= 1e-8, ErrorCode::invalid_argument,
            "decreasing density must integrate to 1");
    return SignalDensity(signal_kind::Decreasing{ std::move(breakpoints), std::move(levels) });
  }

  static SignalDensity param_normal(double mu, double sigma2)
  {
    require(std::isfinite(mu) && std::isfinite(sigma2) && sigma2 > 0.0,
            ErrorCode::invalid_argument, "normal signal needs sigma2 > 0");
    return SignalDensity(signal_kind::ParamNormal{ mu, sigma2 });
  }

  const Kind& kind() const { return kind_; }

  const MixingMeasure* mixing() const
  {
    const auto* g = std::get_if<signal_kind::GaussMix>(&kind_);
    return g ? &g->mixing : nullptr;
  }

  double pdf(double y) const
  {
    if (const auto* g = std::get_if<signal_kind::GaussMix>(&kind_))
      return g->mixing.pdf(y);
    if (const auto* d = std::get_if<signal_kind::Decreasing>(&kind_)) {
      if (y < 0.0 || y > d->breakpoints.back())
        return 0.0;
      const auto it = std::lower_bound(d->breakpoints.begin(), d->breakpoints.end(), y);
      return d->levels[static_cast<std::size_t>(it - d->breakpoints.begin())];
    }
    const auto& n = std::get<signal_kind::ParamNormal>(kind_);
    const double s = std::sqrt(n.sigma2);
    return norm_pdf((y - n.mu) / s) / s;
  }

  VectorXd pdf(const VectorXd& y) const { return y.unaryExpr([this](double v) { return pdf(v); }); }

private:
  explicit SignalDensity(Kind kind)
    : kind_(std::move(kind))
  {}
  Kind kind_;
};

inline double eval_signal_density(const SignalDensity& f1, double y)
{
  return f1.pdf(y);
}

// ---------------------------------------------------------------------------
// Prior probability function pi(x)

namespace prior_kind {
struct Constant
{
  double c = 0.5;
};
struct LinkModel
{
  Link link = Link::logistic;
  double beta0 = 0.0;
  VectorXd beta;
};
//! Nondecreasing step function of one covariate column, fitted at the
//! distinct sorted covariate values `knots`.
struct Isotonic
{
  Index column = 0;
  std::vector<double> knots;
  std::vector<double> values;
};
} // namespace prior_kind

class PriorFn
{
public:
  using Kind = std::variant<prior_kind::Constant, prior_kind::LinkModel, prior_kind::Isotonic>;

  static PriorFn constant(double c)
  {
    require(c >= 0.0 && c <= 1.0, ErrorCode::invalid_argument, "constant prior must lie in [0,1]");
    return PriorFn(prior_kind::Constant{ c });
  }

  static PriorFn link_model(Link link, double beta0, VectorXd beta)
  {
    require(std::isfinite(beta0) && beta.allFinite(), ErrorCode::invalid_argument,
            "link coefficients must be finite");
    return PriorFn(prior_kind::LinkModel{ link, beta0, std::move(beta) });
  }

  static PriorFn isotonic(Index column, std::vector<double> knots, std::vector<double> values)
  {
    require(!knots.empty() && knots.size() == values.size(), ErrorCode::invalid_argument,
            "isotonic prior needs matching knots/values");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      require(values[i] >= 0.0 && values[i] <= 1.0, ErrorCode::invalid_argument,
              "isotonic prior values must lie in [0,1]");
      require(i == 0 || (knots[i] > knots[i - 1] && values[i] >= values[i - 1]),
              ErrorCode::invalid_argument,
              "isotonic prior needs increasing knots and nondecreasing values");
    }
    return PriorFn(prior_kind::Isotonic{ column, std::move(knots), std::move(values) });
  }

  const Kind& kind() const { return kind_; }

  template<typename Row>
  double value(const Row& x) const
  {
    if (const auto* c = std::get_if<prior_kind::Constant>(&kind_))
      return c->c;
    if (const auto* l = std::get_if<prior_kind::LinkModel>(&kind_)) {
      require(l->beta.size() == x.size(), ErrorCode::invalid_argument,
              "link prior dimension does not match the covariates");
      double eta = l->beta0;
      for (Index j = 0; j < l->beta.size(); ++j)
        eta += l->beta(j) * x(j);
      return link::value(l->link, eta);
    }
    const auto& iso = std::get<prior_kind::Isotonic>(kind_);
    require(iso.column < x.size(), ErrorCode::invalid_argument,
            "isotonic prior column is out of range");
    // step extension: value at the nearest knot <= x, first value on the left
    const double v = x(iso.column);
    auto it = std::upper_bound(iso.knots.begin(), iso.knots.end(), v);
    if (it == iso.knots.begin())
      return iso.values.front();
    return iso.values[static_cast<std::size_t>(it - iso.knots.begin()) - 1];
  }

  //! pi evaluated at every row of x.
  VectorXd values(const MatrixXd& x) const
  {
    VectorXd out(x.rows());
    if (const auto* c = std::get_if<prior_kind::Constant>(&kind_)) {
      out.setConstant(c->c);
      return out;
    }
    if (const auto* l = std::get_if<prior_kind::LinkModel>(&kind_)) {
      require(l->beta.size() == x.cols(), ErrorCode::invalid_argument,
              "link prior dimension does not match the covariates");
      VectorXd eta = VectorXd::Constant(x.rows(), l->beta0);
      if (x.cols() > 0)
        eta.noalias() += x * l->beta;
      for (Index i = 0; i < x.rows(); ++i)
        out(i) = link::value(l->link, eta(i));
      return out;
    }
    for (Index i = 0; i < x.rows(); ++i)
      out(i) = value(x.row(i));
    return out;
  }

private:
  explicit PriorFn(Kind kind)
    : kind_(std::move(kind))
  {}
  Kind kind_;
};

// ---------------------------------------------------------------------------
// A fitted model

struct FitDiagnostics
{
  std::vector<double> loglik_trace; // one entry per completed iteration (incl. start)
  bool monotone = true;             // loglik trace never dropped by more than 1e-9
  long clamped_terms = 0;           // mixture densities floored before the log
  std::string convergence_metric = "l2_delta_w";
  std::vector<std::string> flags;   // solver events, e.g. "pi_diverged_kept_previous"
};

struct MixtureFit
{
  PriorFn prior;
  SignalDensity signal;
  NullDensity null;
  double loglik = 0.0;
  VectorXd lfdr;
  VectorXd pi_hat; // prior evaluated at the fitted design rows
  int iterations = 0;
  bool converged = false;
  FitDiagnostics diagnostics;
};

} // namespace mixcov
