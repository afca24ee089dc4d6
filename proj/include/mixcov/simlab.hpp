#pragma once

#include "inference.hpp"
#include "marginal.hpp"
#include "random.hpp"
#include "spline.hpp"

#include <functional>
#include <map>
#include <random>
#include <string>

namespace mixcov {

//! Finite normal mixture sum_k w_k N(mean_k, var_k); var is a variance.
struct NormalMixture
{
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  double pdf(double y) const
  {
    double s = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const double sd = std::sqrt(variances[k]);
      s += weights[k] * norm_pdf((y - means[k]) / sd) / sd;
    }
    return s;
  }

  VectorXd pdf(const VectorXd& y) const { return y.unaryExpr([this](double v) { return pdf(v); }); }

  template<typename Rng>
  double sample(Rng& rng) const
  {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    std::size_t k = 0;
    double cum = weights[0];
    while (r >= cum && k + 1 < weights.size())
      cum += weights[++k];
    std::normal_distribution<double> z(0.0, 1.0);
    return means[k] + std::sqrt(variances[k]) * z(rng);
  }

  //! Gaussian location mixture with the same density: each N(m, v), v >= 1,
  //! is phi convolved with N(m, v - 1), discretised on a 0.1 lattice over +-8 sd.
  SignalDensity to_signal() const
  {
    std::map<double, double> mass;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      require(variances[k] >= 1.0, ErrorCode::invalid_argument,
              "normal mixture component has variance below 1");
      const double s2 = variances[k] - 1.0;
      if (s2 < 1e-12) {
        mass[means[k]] += weights[k];
        continue;
      }
      const double sd = std::sqrt(s2);
      constexpr double h = 0.1;
      const int half = static_cast<int>(std::ceil(8.0 * sd / h));
      std::vector<double> loc, w;
      double total = 0.0;
      for (int j = -half; j <= half; ++j) {
        loc.push_back(means[k] + j * h);
        w.push_back(norm_pdf(j * h / sd));
        total += w.back();
      }
      for (std::size_t j = 0; j < loc.size(); ++j)
        mass[std::round(loc[j] * 1e9) / 1e9] += weights[k] * w[j] / total;
    }
    std::vector<double> atoms, weights_out;
    double total = 0.0;
    for (const auto& [a, m] : mass) {
      atoms.push_back(a);
      weights_out.push_back(m);
      total += m;
    }
    for (double& v : weights_out)
      v /= total;
    return SignalDensity::gauss_mix(MixingMeasure(std::move(atoms), std::move(weights_out)));
  }
};

inline NormalMixture signal_mixture(const std::string& id)
{
  if (id == "i")
    return { { 0.4, 0.2, 0.4 }, { -1.25, 0.0, 1.25 }, { 3.0, 5.0, 3.0 } };
  if (id == "ii")
    return { { 0.3, 0.4, 0.3 }, { 0.0, 0.0, 0.0 }, { 1.1, 2.0, 10.0 } };
  if (id == "iii")
    return { { 1.0 / 2.0, 1.0 / 3.0, 1.0 / 6.0 }, { 0.5, 1.0, 1.5 }, { 1.0, 1.1, 2.0 } };
  if (id == "iv")
    return { { 0.48, 0.04, 0.48 }, { -2.0, 0.0, 2.0 }, { 2.0, 17.0, 2.0 } };
  throw Error(ErrorCode::invalid_argument, "unknown signal density '" + id + "'");
}

//! Truth of a simulation: pi*(x) = g(beta0 + beta' phi(x)) for a fixed feature
//! map phi of the raw covariates, and a normal-mixture signal density.
struct SimModel
{
  std::function<MatrixXd(const MatrixXd&)> features;
  Link link = Link::logistic;
  double beta0 = 0.0;
  VectorXd beta;
  NormalMixture f1;
  int p = 2; // raw covariate dimension, uniform on [0,1]^p

  VectorXd pi(const MatrixXd& x) const
  {
    const MatrixXd f = features(x);
    VectorXd eta = VectorXd::Constant(x.rows(), beta0);
    if (f.cols() > 0)
      eta.noalias() += f * beta;
    return eta.unaryExpr([this](double e) { return link::value(link, e); });
  }

  //! sup of pi* over the unit cube, by a lattice search including the corners.
  double sup_pi() const
  {
    constexpr int k = 201;
    double best = 0.0;
    if (p == 0)
      return pi(MatrixXd(1, 0))(0);
    const Index total = p == 1 ? k : k * k;
    MatrixXd x(total, p);
    for (Index r = 0; r < total; ++r) {
      x(r, 0) = static_cast<double>(r % k) / (k - 1);
      if (p >= 2)
        x(r, 1) = static_cast<double>(r / k) / (k - 1);
      for (int j = 2; j < p; ++j)
        x(r, j) = 0.5;
    }
    best = pi(x).maxCoeff();
    return best;
  }
};

inline MatrixXd identity_features(const MatrixXd& x)
{
  return x;
}

inline SimModel setting_model(char s_id, const std::string& f1_id)
{
  SimModel m;
  m.f1 = signal_mixture(f1_id);
  switch (s_id) {
    case 'A': // -2 + 3.5 x1^2 - 3.5 x2^2
      m.features = [](const MatrixXd& x) {
        MatrixXd f(x.rows(), 2);
        f.col(0) = x.col(0).array().square();
        f.col(1) = x.col(1).array().square();
        return f;
      };
      m.beta0 = -2.0;
      m.beta = Eigen::Vector2d(3.5, -3.5);
      break;
    case 'B': // -3 + 1.5 x1 + 1.5 x2
      m.features = identity_features;
      m.beta0 = -3.0;
      m.beta = Eigen::Vector2d(1.5, 1.5);
      break;
    case 'C': // -1 + 9 (x1 - 0.5)^2 - 5 |x2|
      m.features = [](const MatrixXd& x) {
        MatrixXd f(x.rows(), 3);
        f.col(0) = x.col(0);
        f.col(1) = x.col(0).array().square();
        f.col(2) = x.col(1).array().abs();
        return f;
      };
      m.beta0 = 1.25;
      m.beta = Eigen::Vector3d(-9.0, 9.0, -5.0);
      break;
    case 'D': // 20 (x1 - 0.75)
      m.features = [](const MatrixXd& x) { return MatrixXd(x.col(0)); };
      m.beta0 = -15.0;
      m.beta = VectorXd::Constant(1, 20.0);
      break;
    default:
      throw Error(ErrorCode::invalid_argument, std::string("unknown setting '") + s_id + "'");
  }
  return m;
}

struct SimSetting
{
  char s_id = 'A';
  std::string f1_id = "i";
  Index n = 1000;
  std::uint64_t seed = 1;
  bool expand_splines = true;
  int spline_df = 3;
};

//! "A.i" -> ('A', "i").
inline std::pair<char, std::string> parse_setting_id(const std::string& id)
{
  const auto dot = id.find('.');
  require(dot == 1 && id.size() > 2, ErrorCode::invalid_argument, "setting id must look like A.i");
  const char s = id[0];
  const std::string f = id.substr(2);
  require(s >= 'A' && s <= 'D', ErrorCode::invalid_argument, "unknown setting '" + id + "'");
  require(f == "i" || f == "ii" || f == "iii" || f == "iv", ErrorCode::invalid_argument,
          "unknown setting '" + id + "'");
  return { s, f };
}

struct Replicate
{
  Dataset data = Dataset(VectorXd::Zero(1));
  Eigen::VectorXi z_true;
  VectorXd pi_true;
  VectorXd f1_true_at_y;
  VectorXd lfdr_true;
  std::uint64_t seed = 0;
};

//! X uniform on [0,1]^p, Z ~ Bernoulli(pi*(X)), Y ~ f1* if Z = 1 else N(0,1).
inline Replicate simulate_model(const SimModel& model, Index n, std::uint64_t seed)
{
  require(n >= 1, ErrorCode::invalid_argument, "simulate: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd x(n, model.p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < model.p; ++j)
      x(i, j) = u(rng);
  const VectorXd pi = model.pi(x);
  Eigen::VectorXi lab(n);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    lab(i) = u(rng) < pi(i) ? 1 : 0;
    y(i) = lab(i) ? model.f1.sample(rng) : z(rng);
  }
  Replicate rep;
  rep.data = Dataset(y, x);
  rep.z_true = lab;
  rep.pi_true = pi;
  rep.f1_true_at_y = model.f1.pdf(y);
  rep.lfdr_true = lfdr_from_terms({ pi, rep.f1_true_at_y, NullDensity::std_normal().pdf(y) });
  rep.seed = seed;
  return rep;
}

inline Replicate simulate(const SimSetting& s)
{
  return simulate_model(setting_model(s.s_id, s.f1_id), s.n, s.seed);
}

//! Design used by the link classes: per-covariate B-splines or the raw covariates.
inline MatrixXd fitting_design(const Replicate& rep, const SimSetting& s)
{
  return s.expand_splines ? spline_expand(rep.data.x(), s.spline_df) : rep.data.x();
}

//! Joint loglik of the replicate at the true (pi*, f1*).
inline double truth_loglik(const Replicate& rep)
{
  const MixtureTerms t{ rep.pi_true, rep.f1_true_at_y, NullDensity::std_normal().pdf(rep.data.y()) };
  return loglik_from_mixture(t.mixture()).value;
}

struct Metrics
{
  double rmse_pi = 0.0;
  double rmse_f1 = 0.0;
  double rmse_lfdr = 0.0;
  double underest_lfdr = 0.0;
};

//! Sample versions of the RMSEs of (pi(X_i)), (f1(Y_i)), (lfdr_i) and of
//! E(lfdr*_i - lfdr_hat_i)_+.
inline Metrics metrics(const MixtureFit& fit, const Replicate& rep)
{
  const Index n = rep.data.n();
  require(fit.lfdr.size() == n && fit.pi_hat.size() == n, ErrorCode::invalid_argument,
          "metrics: fit and replicate sizes differ");
  const VectorXd f1 = fit.signal.pdf(rep.data.y());
  Metrics m;
  m.rmse_pi = std::sqrt((fit.pi_hat - rep.pi_true).squaredNorm() / static_cast<double>(n));
  m.rmse_f1 = std::sqrt((f1 - rep.f1_true_at_y).squaredNorm() / static_cast<double>(n));
  m.rmse_lfdr = std::sqrt((fit.lfdr - rep.lfdr_true).squaredNorm() / static_cast<double>(n));
  m.underest_lfdr = (rep.lfdr_true - fit.lfdr).cwiseMax(0.0).mean();
  return m;
}

// ---------------------------------------------------------------------------
// Likelihood path along the near-non-identifiable direction

struct LikelihoodPath
{
  std::vector<ProfilePoint> path;
  double ell_star = 0.0;
  double alpha_lo = std::numeric_limits<double>::quiet_NaN();
  double alpha_hi = std::numeric_limits<double>::quiet_NaN();
  double alpha_max = 0.0; // 1 / sup pi*
};

//! For each alpha: beta(alpha) = OLS of logit(alpha pi*(X)) on (1, X);
//! f1(alpha) = grid MLE with pi(alpha) held fixed; ell(alpha) the joint loglik.
inline LikelihoodPath likelihood_path(const Replicate& rep, const SimModel& truth,
                                      std::vector<double> alpha_grid, const PgdOptions& pgd = {})
{
  LikelihoodPath out;
  out.alpha_max = 1.0 / truth.sup_pi();
  if (alpha_grid.empty())
    for (int k = 1; k * 0.01 <= out.alpha_max + 1e-12; ++k)
      alpha_grid.push_back(k * 0.01);
  std::sort(alpha_grid.begin(), alpha_grid.end());
  for (double a : alpha_grid)
    require(a > 0.0 && a <= out.alpha_max * (1.0 + 1e-12), ErrorCode::infeasible_alpha,
            "likelihood path: alpha " + std::to_string(a) + " lies outside the feasible set");

  const Dataset& d = rep.data;
  const VectorXd f0y = NullDensity::std_normal().pdf(d.y());
  out.ell_star = truth_loglik(rep);

  MatrixXd design(d.n(), d.p() + 1);
  design.col(0).setOnes();
  design.rightCols(d.p()) = d.x();
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  const std::vector<double> atoms = default_atom_grid(d.y());
  const MatrixXd kernel = gaussian_kernel(d.y(), atoms);
  MarginalF1Options fo;
  fo.pgd = pgd;
  std::optional<VectorXd> warm;
  for (double a : alpha_grid) {
    VectorXd target(d.n());
    for (Index i = 0; i < d.n(); ++i) {
      const double p = std::clamp(a * rep.pi_true(i), 1e-12, 1.0 - 1e-12);
      target(i) = std::log(p / (1.0 - p));
    }
    const VectorXd coef = qr.solve(target);
    const VectorXd eta = design * coef;
    const VectorXd pia = eta.unaryExpr([](double e) { return logistic(e); });
    MarginalF1Fit f = marginal_f1_fit(pia, d.y(), f0y, atoms, kernel, warm, fo);
    warm = f.p;
    const double ell = loglik_from_mixture(MixtureTerms{ pia, f.signal.pdf(d.y()), f0y }.mixture()).value;
    out.path.push_back({ a, ell });
    if (ell >= out.ell_star) {
      if (std::isnan(out.alpha_lo))
        out.alpha_lo = a;
      out.alpha_hi = a;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// f1 with and without covariates

struct F1Comparison
{
  std::vector<double> hellinger_covariate; // pi(.) known
  std::vector<double> hellinger_marginal;  // only mean pi known
};

inline F1Comparison compare_f1_with_without_covariates(const SimModel& model, Index n, int replicates,
                                                       std::uint64_t master_seed)
{
  F1Comparison out;
  const SignalDensity truth = model.f1.to_signal();
  for (int r = 0; r < replicates; ++r) {
    const Replicate rep = simulate_model(model, n, split_seed(master_seed, static_cast<std::uint64_t>(r)));
    const VectorXd& y = rep.data.y();
    const VectorXd f0y = NullDensity::std_normal().pdf(y);
    const std::vector<double> atoms = default_atom_grid(y);
    const MatrixXd kernel = gaussian_kernel(y, atoms);
    // exact when pi* is constant, so the two estimators then coincide bitwise
    const double pibar = rep.pi_true.maxCoeff() == rep.pi_true.minCoeff() ? rep.pi_true(0) : rep.pi_true.mean();
    const MarginalF1Fit cov = marginal_f1_fit(rep.pi_true, y, f0y, atoms, kernel, std::nullopt);
    const MarginalF1Fit mar =
      marginal_f1_fit(VectorXd::Constant(y.size(), pibar), y, f0y, atoms, kernel, std::nullopt);
    out.hellinger_covariate.push_back(std::sqrt(hellinger_sq(cov.signal, truth)));
    out.hellinger_marginal.push_back(std::sqrt(hellinger_sq(mar.signal, truth)));
  }
  return out;
}

} // namespace mixcov
