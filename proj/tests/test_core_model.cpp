#include "mixcov/mixcov.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mixcov;

namespace {

double phi(double x)
{
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

SignalDensity point_signal(double a)
{
  return SignalDensity::gauss_mix(MixingMeasure({ a }, { 1.0 }));
}

Dataset scalar_data(std::vector<double> y)
{
  return Dataset(to_eigen(y));
}

} // namespace

TEST(Types, DatasetValidation)
{
  EXPECT_THROW(Dataset{ VectorXd() }, Error);
  VectorXd y(2);
  y << 1.0, std::nan("");
  EXPECT_THROW(Dataset{ y }, Error);
  EXPECT_THROW(Dataset(VectorXd::Zero(3), MatrixXd::Zero(2, 1)), Error);
  const Dataset d(VectorXd::Zero(3));
  EXPECT_EQ(d.p(), 0);
  EXPECT_EQ(d.n(), 3);
}

TEST(Types, MixingMeasureValidation)
{
  EXPECT_THROW(MixingMeasure({ 0.0, 0.0 }, { 0.5, 0.5 }), Error);
  EXPECT_THROW(MixingMeasure({ 0.0, 1.0 }, { 0.6, 0.5 }), Error);
  EXPECT_THROW(MixingMeasure({ 0.0, 1.0 }, { 1.2, -0.2 }), Error);
  EXPECT_NO_THROW(MixingMeasure({ 0.0, 1.0 }, { 0.5, 0.5 }));
}

TEST(Types, DecreasingValidation)
{
  EXPECT_THROW(SignalDensity::decreasing({ 0.5, 1.0 }, { 0.4, 1.6 }), Error);
  EXPECT_THROW(SignalDensity::decreasing({ 0.5, 1.0 }, { 1.0, 1.0 + 1e-3 }), Error);
  EXPECT_THROW(SignalDensity::decreasing({ 0.5, 1.5 }, { 1.0, 1.0 }), Error);
  EXPECT_NO_THROW(SignalDensity::decreasing({ 0.5, 1.0 }, { 1.6, 0.4 }));
}

TEST(Types, PriorEvaluationInUnitInterval)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 5.0);
  for (Link g : { Link::logistic, Link::probit, Link::cloglog }) {
    const PriorFn pi = PriorFn::link_model(g, z(rng), Eigen::Vector2d(z(rng), z(rng)));
    MatrixXd x = MatrixXd::Random(50, 2) * 10.0;
    const VectorXd v = pi.values(x);
    EXPECT_TRUE((v.array() >= 0.0).all() && (v.array() <= 1.0).all());
  }
}

TEST(Types, IsotonicPriorStepExtension)
{
  const PriorFn pi = PriorFn::isotonic(0, { 0.0, 1.0, 2.0 }, { 0.1, 0.4, 0.9 });
  MatrixXd x(5, 1);
  x << -3.0, 0.0, 0.5, 1.99, 7.0;
  const VectorXd v = pi.values(x);
  EXPECT_DOUBLE_EQ(v(0), 0.1);
  EXPECT_DOUBLE_EQ(v(1), 0.1);
  EXPECT_DOUBLE_EQ(v(2), 0.1);
  EXPECT_DOUBLE_EQ(v(3), 0.4);
  EXPECT_DOUBLE_EQ(v(4), 0.9);
  EXPECT_THROW(PriorFn::isotonic(0, { 0.0, 1.0 }, { 0.5, 0.4 }), Error);
}

TEST(EvalSignalDensity, SingleAtomIsStandardNormal)
{
  EXPECT_NEAR(eval_signal_density(point_signal(0.0), 0.0), 0.3989422804, 1e-10);
}

TEST(EvalSignalDensity, SymmetricPair)
{
  const auto f = SignalDensity::gauss_mix(MixingMeasure({ -1.0, 1.0 }, { 0.5, 0.5 }));
  EXPECT_NEAR(eval_signal_density(f, 0.0), 0.2419707245, 1e-10);
}

TEST(EvalSignalDensity, DecreasingStep)
{
  const auto f = SignalDensity::decreasing({ 0.5, 1.0 }, { 1.6, 0.4 });
  EXPECT_DOUBLE_EQ(eval_signal_density(f, 0.25), 1.6);
  EXPECT_DOUBLE_EQ(eval_signal_density(f, 0.5), 1.6);
  EXPECT_DOUBLE_EQ(eval_signal_density(f, 0.75), 0.4);
  EXPECT_DOUBLE_EQ(eval_signal_density(f, 1.5), 0.0);
  EXPECT_DOUBLE_EQ(eval_signal_density(f, -0.1), 0.0);
}

TEST(EvalSignalDensity, ParamNormal)
{
  const auto f = SignalDensity::param_normal(1.0, 4.0);
  EXPECT_NEAR(f.pdf(3.0), phi(1.0) / 2.0, 1e-15);
}

TEST(LoglikJoint, NullOnlyPrior)
{
  const double v = loglik_joint(PriorFn::constant(0.0), point_signal(3.0), NullDensity::std_normal(),
                                scalar_data({ 0.0 }));
  EXPECT_NEAR(v, -0.9189385332, 1e-10);
}

TEST(LoglikJoint, SignalEqualsNull)
{
  const double v = loglik_joint(PriorFn::constant(0.5), point_signal(0.0), NullDensity::std_normal(),
                                scalar_data({ 1.7 }));
  EXPECT_NEAR(v, -2.3639385, 1e-7);
}

TEST(LoglikJoint, TwoComponentValue)
{
  const double v = loglik_joint(PriorFn::constant(0.5), point_signal(2.0), NullDensity::std_normal(),
                                scalar_data({ 2.0 }));
  // direct scalar evaluation
  const double oracle = std::log(0.5 * phi(0.0) + 0.5 * phi(2.0));
  EXPECT_NEAR(v, oracle, 1e-14);
  EXPECT_NEAR(v, -1.485158, 1e-6);
}

TEST(LoglikJoint, FloorAndClampCount)
{
  const Dataset d = scalar_data({ 0.0, 60.0 });
  const auto lv = loglik_joint_detail(PriorFn::constant(0.0), point_signal(0.0), NullDensity::std_normal(), d);
  EXPECT_EQ(lv.clamped, 1);
  EXPECT_TRUE(std::isfinite(lv.value));
  EXPECT_NEAR(lv.value, 0.5 * (std::log(phi(0.0)) + std::log(1e-300)), 1e-9);
  try {
    loglik_joint(PriorFn::constant(0.0), point_signal(0.0), NullDensity::std_normal(), d, { false });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_likelihood);
  }
}

TEST(LfdrVector, NullOnlyPriorGivesOne)
{
  const VectorXd l = lfdr_vector(PriorFn::constant(0.0), point_signal(2.0), NullDensity::std_normal(),
                                 scalar_data({ 0.3, 2.0, -4.0 }));
  EXPECT_TRUE((l.array() == 1.0).all());
}

TEST(LfdrVector, SymmetryPoint)
{
  const VectorXd l = lfdr_vector(PriorFn::constant(0.5), point_signal(2.0), NullDensity::std_normal(),
                                 scalar_data({ 1.0 }));
  EXPECT_NEAR(l(0), 0.5, 1e-15);
}

TEST(LfdrVector, AtSignalMode)
{
  const VectorXd l = lfdr_vector(PriorFn::constant(0.5), point_signal(2.0), NullDensity::std_normal(),
                                 scalar_data({ 2.0 }));
  const double oracle = std::exp(-2.0) / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(l(0), oracle, 1e-14);
  EXPECT_NEAR(l(0), 0.1192029, 1e-7);
}

TEST(AmleCheck, TruthAgainstItself)
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  VectorXd y(100);
  for (auto& v : y)
    v = z(rng);
  const ModelPair truth{ PriorFn::constant(0.3), point_signal(1.5) };
  const AmleCheck r = amle_check(truth, truth, NullDensity::std_normal(), Dataset(y));
  EXPECT_TRUE(r.is_amle);
  EXPECT_EQ(r.loglik_gap, 0.0);
}

TEST(AmleCheck, WorseCandidateIsNotAmle)
{
  // data concentrated at the signal location; replacing f1 by f0 loses likelihood
  VectorXd y = VectorXd::Constant(50, 3.0);
  const ModelPair truth{ PriorFn::constant(0.5), point_signal(3.0) };
  const ModelPair cand{ PriorFn::constant(0.5), point_signal(0.0) };
  const AmleCheck r = amle_check(cand, truth, NullDensity::std_normal(), Dataset(y));
  EXPECT_FALSE(r.is_amle);
  EXPECT_LT(r.loglik_gap, -0.1);
}

TEST(AvgHellinger, IdenticalIsZero)
{
  const ModelPair a{ PriorFn::constant(0.3), point_signal(1.0) };
  EXPECT_EQ(avg_hellinger_sq(a, a, NullDensity::std_normal(), scalar_data({ 0.0, 1.0 })), 0.0);
}

TEST(AvgHellinger, ShiftedNormalsClosedForm)
{
  const ModelPair a{ PriorFn::constant(1.0), point_signal(2.0) };
  const ModelPair b{ PriorFn::constant(1.0), point_signal(0.0) };
  const double oracle = 2.0 * (1.0 - std::exp(-4.0 / 8.0));
  const double v = avg_hellinger_sq(a, b, NullDensity::std_normal(), scalar_data({ 0.0 }));
  EXPECT_NEAR(v, oracle, 1e-6);
  EXPECT_NEAR(v, 0.7869387, 1e-6);
}

TEST(AvgHellinger, BoundedAndSymmetric)
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd x = MatrixXd::Random(40, 1);
  const Dataset d(VectorXd::Zero(40), x);
  for (int k = 0; k < 20; ++k) {
    const ModelPair a{ PriorFn::link_model(Link::logistic, 4 * u(rng) - 2, VectorXd::Constant(1, 3 * u(rng))),
                       SignalDensity::gauss_mix(MixingMeasure({ -20.0 * u(rng), 10.0 * u(rng) }, { 0.5, 0.5 })) };
    const ModelPair b{ PriorFn::constant(u(rng)), point_signal(30.0 * u(rng)) };
    const double ab = avg_hellinger_sq(a, b, NullDensity::std_normal(), d);
    const double ba = avg_hellinger_sq(b, a, NullDensity::std_normal(), d);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 2.0);
  }
  // disjoint supports reach the bound
  const ModelPair far_a{ PriorFn::constant(1.0), point_signal(-40.0) };
  const ModelPair far_b{ PriorFn::constant(1.0), point_signal(40.0) };
  EXPECT_NEAR(avg_hellinger_sq(far_a, far_b, NullDensity::std_normal(), scalar_data({ 0.0 })), 2.0, 1e-8);
}

TEST(AvgHellinger, PiecewiseConstantExact)
{
  // pi = 1: h^2 between two step densities on [0,1], computed by hand
  const ModelPair a{ PriorFn::constant(1.0), SignalDensity::decreasing({ 0.5, 1.0 }, { 1.6, 0.4 }) };
  const ModelPair b{ PriorFn::constant(1.0), SignalDensity::decreasing({ 1.0 }, { 1.0 }) };
  const double oracle = 0.5 * std::pow(std::sqrt(1.6) - 1.0, 2) + 0.5 * std::pow(std::sqrt(0.4) - 1.0, 2);
  EXPECT_NEAR(avg_hellinger_sq(a, b, NullDensity::uniform_unit(), scalar_data({ 0.3 })), oracle, 1e-14);
}

TEST(SplineExpand, ColumnCount)
{
  const MatrixXd x = (MatrixXd::Random(30, 2).array() + 1.0) / 2.0;
  EXPECT_EQ(spline_expand(x, 3).cols(), 6);
  EXPECT_EQ(spline_expand(x, 5).cols(), 10);
}

TEST(SplineExpand, DfOneIsMinMaxRescaling)
{
  MatrixXd x(4, 1);
  x << 2.0, 4.0, 3.0, 6.0;
  const MatrixXd b = spline_expand(x, 1);
  ASSERT_EQ(b.cols(), 1);
  EXPECT_NEAR(b(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(b(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(b(2, 0), 0.25, 1e-15);
  EXPECT_NEAR(b(3, 0), 1.0, 1e-15);
}

TEST(SplineExpand, LeftBoundaryEndpointProperty)
{
  MatrixXd x = (MatrixXd::Random(25, 1).array() + 2.0).matrix();
  for (int df : { 1, 2, 3, 4, 6 }) {
    const SplineBasis sb = SplineBasis::fit(x, df);
    const auto full = sb.columns()[0].full_basis(x.minCoeff());
    ASSERT_EQ(static_cast<int>(full.size()), df + 1);
    EXPECT_DOUBLE_EQ(full[0], 1.0);
    for (std::size_t k = 1; k < full.size(); ++k)
      EXPECT_DOUBLE_EQ(full[k], 0.0);
    // the dropped column makes every retained column vanish there
    const MatrixXd e = sb.transform(MatrixXd::Constant(1, 1, x.minCoeff()));
    EXPECT_EQ(e.cwiseAbs().maxCoeff(), 0.0);
    const auto right = sb.columns()[0].full_basis(x.maxCoeff());
    EXPECT_DOUBLE_EQ(right.back(), 1.0);
  }
}

TEST(SplineExpand, PartitionOfUnityAndRange)
{
  MatrixXd x = MatrixXd::Random(200, 2);
  for (int df : { 3, 5, 8 }) {
    const SplineBasis sb = SplineBasis::fit(x, df);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < 2; ++j) {
        const auto v = sb.columns()[static_cast<std::size_t>(j)].full_basis(x(i, j));
        double s = 0.0;
        for (double b : v) {
          EXPECT_GE(b, 0.0);
          EXPECT_LE(b, 1.0);
          s += b;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
  }
}

TEST(SplineExpand, CubicNoInteriorKnotsIsBernstein)
{
  MatrixXd x(3, 1);
  x << 0.0, 0.3, 1.0;
  const MatrixXd b = spline_expand(x, 3);
  const double t = 0.3;
  EXPECT_NEAR(b(1, 0), 3 * t * (1 - t) * (1 - t), 1e-14);
  EXPECT_NEAR(b(1, 1), 3 * t * t * (1 - t), 1e-14);
  EXPECT_NEAR(b(1, 2), t * t * t, 1e-14);
}

TEST(SplineExpand, ConstantCovariate)
{
  MatrixXd x = MatrixXd::Ones(5, 2);
  x(0, 0) = 2.0;
  try {
    spline_expand(x, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::constant_covariate);
  }
}

TEST(CShift, ZeroIsIdentity)
{
  const auto f1 = point_signal(2.0);
  const ModelPair out = c_shift(PriorFn::constant(0.5), f1, NullDensity::std_normal(), 0.0);
  EXPECT_EQ(std::get<prior_kind::Constant>(out.prior.kind()).c, 0.5);
  EXPECT_EQ(*out.signal.mixing(), *f1.mixing());
}

TEST(CShift, HalfShiftExample)
{
  const ModelPair out = c_shift(PriorFn::constant(0.5), point_signal(2.0), NullDensity::std_normal(), 0.5);
  EXPECT_DOUBLE_EQ(std::get<prior_kind::Constant>(out.prior.kind()).c, 1.0);
  EXPECT_EQ(out.signal.mixing()->atoms(), (std::vector<double>{ 0.0, 2.0 }));
  EXPECT_EQ(out.signal.mixing()->weights(), (std::vector<double>{ 0.5, 0.5 }));
  for (double y = -5.0; y <= 5.0; y += 0.05) {
    const double before = 0.5 * phi(y - 2.0) + 0.5 * phi(y);
    const double after = 1.0 * out.signal.pdf(y);
    EXPECT_NEAR(before, after, 1e-15);
  }
}

TEST(CShift, OneIsInfeasible)
{
  try {
    c_shift(PriorFn::constant(0.5), point_signal(2.0), NullDensity::std_normal(), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible_shift);
  }
  EXPECT_THROW(c_shift(PriorFn::constant(0.8), point_signal(2.0), NullDensity::std_normal(), 0.5), Error);
  EXPECT_THROW(c_shift(PriorFn::link_model(Link::logistic, 0.0, VectorXd()), point_signal(2.0),
                       NullDensity::std_normal(), 0.2),
               Error);
}

TEST(CShift, DecreasingWithUniformNull)
{
  const auto f1 = SignalDensity::decreasing({ 0.5 }, { 2.0 });
  const ModelPair out = c_shift(PriorFn::constant(0.4), f1, NullDensity::uniform_unit(), 0.2);
  for (double y = 0.01; y < 1.0; y += 0.01) {
    const double before = 0.4 * f1.pdf(y) + 0.6;
    const double pi2 = 0.4 / 0.8;
    const double after = pi2 * out.signal.pdf(y) + (1.0 - pi2);
    EXPECT_NEAR(before, after, 1e-14);
  }
}

TEST(Invariants, LogTermsMatchDirectMixture)
{
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 2.0);
  MatrixXd x = MatrixXd::Random(60, 2);
  VectorXd y(60);
  for (auto& v : y)
    v = z(rng);
  const Dataset d(y, x);
  const PriorFn pi = PriorFn::link_model(Link::probit, 0.2, Eigen::Vector2d(1.0, -0.5));
  const auto f1 = SignalDensity::gauss_mix(MixingMeasure({ -1.0, 0.5, 3.0 }, { 0.2, 0.3, 0.5 }));
  const VectorXd piv = pi.values(x);
  double direct = 0.0;
  for (Index i = 0; i < 60; ++i) {
    const double f1v = 0.2 * phi(y(i) + 1.0) + 0.3 * phi(y(i) - 0.5) + 0.5 * phi(y(i) - 3.0);
    const double mix = piv(i) * f1v + (1.0 - piv(i)) * phi(y(i));
    const MixtureTerms t = mixture_terms(pi, f1, NullDensity::std_normal(), Dataset(VectorXd::Constant(1, y(i)), x.row(i)));
    EXPECT_NEAR(std::exp(std::log(t.mixture()(0))), mix, 1e-12 * mix);
    direct += std::log(mix);
  }
  EXPECT_NEAR(loglik_joint(pi, f1, NullDensity::std_normal(), d), direct / 60.0, 1e-12);
}

TEST(Invariants, LfdrIsOneMinusEstepWeight)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 3.0);
  VectorXd y(80);
  for (auto& v : y)
    v = z(rng);
  const Dataset d(y, MatrixXd::Random(80, 1));
  const PriorFn pi = PriorFn::link_model(Link::cloglog, -0.5, VectorXd::Constant(1, 2.0));
  const auto f1 = SignalDensity::param_normal(1.0, 3.0);
  const VectorXd l = lfdr_vector(pi, f1, NullDensity::std_normal(), d);
  const VectorXd w = estep_weights(pi, f1, NullDensity::std_normal(), d);
  EXPECT_LE((l + w - VectorXd::Ones(80)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Invariants, CShiftEquivalenceRandom)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const VectorXd grid = to_eigen(linspace(-6.0, 6.0, 201));
  MatrixXd x(15, 1);
  for (Index i = 0; i < 15; ++i)
    x(i, 0) = u(rng);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 1 + static_cast<int>(u(rng) * 4);
    std::vector<double> atoms, w;
    for (int j = 0; j < m; ++j)
      atoms.push_back(-4.0 + 8.0 * (j + u(rng)) / m);
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      w.push_back(u(rng) + 0.01);
      s += w.back();
    }
    for (auto& v : w)
      v /= s;
    const auto f1 = SignalDensity::gauss_mix(MixingMeasure(atoms, w));
    const double c = 0.9 * u(rng);
    PriorFn pi = PriorFn::constant(0.5);
    if (rep % 2 == 0) {
      pi = PriorFn::constant((1.0 - c) * u(rng));
    } else {
      std::vector<double> vals{ u(rng), u(rng), u(rng) };
      std::sort(vals.begin(), vals.end());
      for (auto& v : vals)
        v *= (1.0 - c);
      pi = PriorFn::isotonic(0, { 0.2, 0.5, 0.8 }, vals);
    }
    const ModelPair shifted = c_shift(pi, f1, NullDensity::std_normal(), c);
    const VectorXd pa = pi.values(x);
    const VectorXd pb = shifted.prior.values(x);
    double worst = 0.0;
    for (Index i = 0; i < x.rows(); ++i)
      for (Index k = 0; k < grid.size(); ++k) {
        const double ma = pa(i) * f1.pdf(grid(k)) + (1.0 - pa(i)) * phi(grid(k));
        const double mb = pb(i) * shifted.signal.pdf(grid(k)) + (1.0 - pb(i)) * phi(grid(k));
        worst = std::max(worst, std::abs(ma - mb));
      }
    EXPECT_LE(worst, 1e-10);
  }
}
