#include "mixcov/mixcov.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mixcov;

namespace {

SimSetting setting(char s, const char* f, Index n, std::uint64_t seed)
{
  SimSetting st;
  st.s_id = s;
  st.f1_id = f;
  st.n = n;
  st.seed = seed;
  return st;
}

MixtureFit fit_from_truth(const Replicate& rep, const SimModel& m)
{
  const PriorFn pi = PriorFn::link_model(m.link, m.beta0, m.beta);
  MixtureFit fit{ pi, m.f1.to_signal(), NullDensity::std_normal(), 0.0, rep.lfdr_true, rep.pi_true, 0, true, {} };
  return fit;
}

} // namespace

TEST(Simulate, PriorInUnitInterval)
{
  for (char s : { 'A', 'B', 'C', 'D' }) {
    const Replicate rep = simulate(setting(s, "i", 2000, 1));
    EXPECT_TRUE((rep.pi_true.array() >= 0.0).all() && (rep.pi_true.array() <= 1.0).all()) << s;
  }
}

TEST(Simulate, SettingDAtUpperEdge)
{
  const SimModel m = setting_model('D', "i");
  MatrixXd x(3, 2);
  x << 1.0, 0.0, 1.0, 0.5, 1.0, 1.0;
  const VectorXd pi = m.pi(x);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_GT(pi(i), 0.99);
    EXPECT_NEAR(pi(i), 1.0 / (1.0 + std::exp(-5.0)), 1e-15);
  }
}

TEST(Simulate, MeanLabelMatchesMonteCarloPrior)
{
  const Replicate rep = simulate(setting('B', "i", 100000, 2));
  // independent Monte Carlo estimate of E[pi*(X)]
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u;
  double s = 0.0;
  const int draws = 10000000;
  for (int k = 0; k < draws; ++k)
    s += 1.0 / (1.0 + std::exp(-(-3.0 + 1.5 * u(rng) + 1.5 * u(rng))));
  const double pibar = s / draws;
  const double sd = std::sqrt(pibar * (1.0 - pibar) / 100000.0);
  EXPECT_NEAR(rep.z_true.cast<double>().mean(), pibar, 3.0 * sd);
}

TEST(Simulate, Reproducible)
{
  const Replicate a = simulate(setting('C', "iii", 500, 7));
  const Replicate b = simulate(setting('C', "iii", 500, 7));
  EXPECT_EQ(a.data.y(), b.data.y());
  EXPECT_EQ(a.data.x(), b.data.x());
  EXPECT_EQ(a.z_true, b.z_true);
  EXPECT_EQ(a.lfdr_true, b.lfdr_true);
  const Replicate c = simulate(setting('C', "iii", 500, 8));
  EXPECT_NE(a.data.y(), c.data.y());
}

TEST(Simulate, TrueLfdrConsistent)
{
  for (const char* f : { "i", "ii", "iii", "iv" }) {
    const Replicate rep = simulate(setting('A', f, 300, 3));
    const SimModel m = setting_model('A', f);
    for (Index i = 0; i < rep.data.n(); ++i) {
      const double y = rep.data.y()(i);
      const double f1 = m.f1.pdf(y), f0 = norm_pdf(y);
      const double pi = rep.pi_true(i);
      EXPECT_NEAR(rep.lfdr_true(i), (1.0 - pi) * f0 / (pi * f1 + (1.0 - pi) * f0), 1e-14);
    }
  }
}

TEST(Simulate, SettingIdParsing)
{
  EXPECT_EQ(parse_setting_id("A.ii"), std::make_pair('A', std::string("ii")));
  EXPECT_THROW(parse_setting_id("E.i"), Error);
  EXPECT_THROW(parse_setting_id("A.v"), Error);
  EXPECT_THROW(parse_setting_id("Ai"), Error);
}

TEST(NormalMixture, LatticeSignalReproducesDensity)
{
  for (const char* f : { "i", "ii", "iii", "iv" }) {
    const NormalMixture m = signal_mixture(f);
    const SignalDensity s = m.to_signal();
    for (double y = -12.0; y <= 12.0; y += 0.05)
      EXPECT_NEAR(s.pdf(y), m.pdf(y), 1e-9) << f << " at " << y;
  }
}

TEST(NormalMixture, SamplingMatchesMoments)
{
  const NormalMixture m = signal_mixture("iii");
  std::mt19937_64 rng(5);
  double s = 0.0, s2 = 0.0;
  const int n = 400000;
  for (int k = 0; k < n; ++k) {
    const double v = m.sample(rng);
    s += v;
    s2 += v * v;
  }
  double mean = 0.0, second = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    mean += m.weights[k] * m.means[k];
    second += m.weights[k] * (m.variances[k] + m.means[k] * m.means[k]);
  }
  EXPECT_NEAR(s / n, mean, 0.01);
  EXPECT_NEAR(s2 / n, second, 0.02);
}

TEST(Metrics, TruthGivesZero)
{
  const Replicate rep = simulate(setting('B', "iii", 400, 4));
  const SimModel m = setting_model('B', "iii");
  const Metrics r = metrics(fit_from_truth(rep, m), rep);
  EXPECT_EQ(r.rmse_pi, 0.0);
  EXPECT_NEAR(r.rmse_f1, 0.0, 1e-9); // lattice representation of the truth
  EXPECT_EQ(r.rmse_lfdr, 0.0);
  EXPECT_EQ(r.underest_lfdr, 0.0);
}

TEST(Metrics, OverestimatedLfdrHasNoUnderestimation)
{
  const Replicate rep = simulate(setting('B', "iii", 400, 4));
  MixtureFit fit = fit_from_truth(rep, setting_model('B', "iii"));
  fit.lfdr = (rep.lfdr_true.array() + 0.1).cwiseMin(1.0).matrix();
  EXPECT_EQ(metrics(fit, rep).underest_lfdr, 0.0);
}

TEST(Metrics, HandBuiltThreePoints)
{
  Replicate rep;
  rep.data = Dataset(to_eigen({ 0.0, 1.0, 2.0 }));
  rep.pi_true = to_eigen({ 0.2, 0.4, 0.6 });
  rep.lfdr_true = to_eigen({ 0.9, 0.5, 0.1 });
  rep.f1_true_at_y = to_eigen({ 0.5, 0.5, 0.5 });
  rep.z_true = Eigen::VectorXi::Zero(3);
  const SignalDensity f1 = SignalDensity::gauss_mix(MixingMeasure({ 0.0 }, { 1.0 }));
  MixtureFit fit{ PriorFn::constant(0.3), f1, NullDensity::std_normal(), 0.0, to_eigen({ 0.7, 0.6, 0.2 }),
                  to_eigen({ 0.3, 0.3, 0.3 }), 0, true, {} };
  const Metrics m = metrics(fit, rep);
  EXPECT_NEAR(m.rmse_pi, std::sqrt((0.01 + 0.01 + 0.09) / 3.0), 1e-15);
  const double e0 = norm_pdf(0.0) - 0.5, e1 = norm_pdf(1.0) - 0.5, e2 = norm_pdf(2.0) - 0.5;
  EXPECT_NEAR(m.rmse_f1, std::sqrt((e0 * e0 + e1 * e1 + e2 * e2) / 3.0), 1e-15);
  EXPECT_NEAR(m.rmse_lfdr, std::sqrt((0.04 + 0.01 + 0.01) / 3.0), 1e-15);
  EXPECT_NEAR(m.underest_lfdr, 0.2 / 3.0, 1e-15);
}

TEST(LikelihoodPath, AlphaOneRecoversTruth)
{
  for (char s : { 'B', 'D' }) {
    const Replicate rep = simulate(setting(s, "i", 1500, 5));
    const LikelihoodPath p = likelihood_path(rep, setting_model(s, "i"), { 0.5, 1.0 });
    ASSERT_EQ(p.path.size(), 2u);
    EXPECT_GE(p.path[1].loglik, p.ell_star - 0.01) << s;
    for (const auto& pt : p.path)
      EXPECT_TRUE(std::isfinite(pt.loglik));
  }
}

TEST(LikelihoodPath, InfeasibleAlpha)
{
  const Replicate rep = simulate(setting('B', "i", 200, 6));
  const SimModel m = setting_model('B', "i");
  EXPECT_NEAR(1.0 / m.sup_pi(), 2.0, 1e-12);
  for (double a : { 2.05, 0.0, -0.5 }) {
    try {
      likelihood_path(rep, m, { 1.0, a });
      FAIL() << a;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::infeasible_alpha);
    }
  }
}

TEST(LikelihoodPath, WideFlatRegionInSettingB)
{
  const Replicate rep = simulate(setting('B', "iv", 10000, 7));
  std::vector<double> grid;
  for (int k = 10; k <= 40; ++k)
    grid.push_back(0.05 * k);
  const LikelihoodPath p = likelihood_path(rep, setting_model('B', "iv"), grid);
  ASSERT_FALSE(std::isnan(p.alpha_lo));
  EXPECT_LE(p.alpha_lo, 0.75);
  EXPECT_GE(p.alpha_hi, 1.9);
}

TEST(LikelihoodPath, NarrowFeasibleSetForSharpPrior)
{
  SimModel m = setting_model('D', "i");
  m.f1 = NormalMixture{ { 0.4, 0.6 }, { 0.0, 1.0 }, { 1.0, 1.0 } };
  const Replicate rep = simulate_model(m, 10000, 8);
  const LikelihoodPath p = likelihood_path(rep, m, {});
  EXPECT_NEAR(p.alpha_max, 1.0 + std::exp(-5.0), 1e-6);
  ASSERT_FALSE(std::isnan(p.alpha_lo));
  EXPECT_GE(p.alpha_lo, 0.9);
}

TEST(CompareF1, ZeroReplicates)
{
  const F1Comparison c = compare_f1_with_without_covariates(setting_model('A', "i"), 100, 0, 1);
  EXPECT_TRUE(c.hellinger_covariate.empty());
  EXPECT_TRUE(c.hellinger_marginal.empty());
}

TEST(CompareF1, ConstantPriorGivesIdenticalEstimators)
{
  SimModel m = setting_model('B', "i");
  m.beta = VectorXd::Zero(2);
  m.beta0 = -1.0;
  const F1Comparison c = compare_f1_with_without_covariates(m, 500, 3, 11);
  ASSERT_EQ(c.hellinger_covariate.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r)
    EXPECT_EQ(c.hellinger_covariate[r], c.hellinger_marginal[r]);
}

TEST(SplitSeed, DistinctStreams)
{
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r)
    seen.insert(split_seed(42, r));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(split_seed(42, 3), split_seed(42, 3));
}
