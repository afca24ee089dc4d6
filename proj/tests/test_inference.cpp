#include "mixcov/mixcov.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mixcov;

TEST(RejectAtLevel, NothingBelowAlpha)
{
  const RejectionReport r = reject_at_level(to_eigen({ 0.5, 0.3, 0.9 }), 0.1);
  EXPECT_EQ(r.k_hat, 0);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(RejectAtLevel, RunningMeanExamples)
{
  const VectorXd l = to_eigen({ 0.2, 0.02, 0.05 });
  const RejectionReport a = reject_at_level(l, 0.1);
  EXPECT_EQ(a.k_hat, 3);
  EXPECT_EQ(a.rejected, (std::vector<Index>{ 0, 1, 2 }));
  EXPECT_NEAR(a.realized_avg_lfdr, 0.09, 1e-15);
  const RejectionReport b = reject_at_level(l, 0.05);
  EXPECT_EQ(b.k_hat, 2);
  EXPECT_EQ(b.rejected, (std::vector<Index>{ 1, 2 }));
  EXPECT_EQ(b.threshold_lfdr, 0.05);
}

TEST(RejectAtLevel, TiesAtThresholdAreRejected)
{
  const RejectionReport r = reject_at_level(to_eigen({ 0.0, 0.3, 0.3 }), 0.15);
  EXPECT_EQ(r.k_hat, 2);
  EXPECT_EQ(r.rejected.size(), 3u);
}

TEST(RejectAtLevel, InvalidAlpha)
{
  EXPECT_THROW(reject_at_level(to_eigen({ 0.1 }), 0.0), Error);
  EXPECT_THROW(reject_at_level(to_eigen({ 0.1 }), 1.0), Error);
  EXPECT_THROW(reject_at_level(to_eigen({ 1.1 }), 0.5), Error);
}

TEST(RejectAtLevel, NonmonotoneFlag)
{
  const VectorXd l = to_eigen({ 0.01, 0.6, 0.02 });
  const VectorXd y = to_eigen({ 3.0, 4.0, 2.5 });
  EXPECT_TRUE(reject_at_level(l, 0.1, &y).nonmonotone);
  const VectorXd y2 = to_eigen({ 3.0, 0.5, 2.5 });
  EXPECT_FALSE(reject_at_level(l, 0.1, &y2).nonmonotone);
}

TEST(RejectAtLevel, MatchesLowerSetBruteForce)
{
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u;
  std::uniform_int_distribution<int> nd(1, 10);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = nd(rng);
    std::vector<double> l(static_cast<std::size_t>(n));
    for (auto& v : l)
      v = std::pow(u(rng), 2.0);
    const double alpha = 0.02 + 0.5 * u(rng);
    const RejectionReport r = reject_at_level(to_eigen(l), alpha);
    ASSERT_EQ(r.k_hat, oracle::reject_count_brute(l, alpha));
    for (Index i = 0; i < n; ++i) {
      const bool rej = std::find(r.rejected.begin(), r.rejected.end(), i) != r.rejected.end();
      EXPECT_EQ(rej, r.k_hat > 0 && l[static_cast<std::size_t>(i)] <= r.threshold_lfdr);
    }
    if (r.k_hat > 0) {
      EXPECT_LE(r.realized_avg_lfdr, alpha + 1e-15);
    }
  }
}

TEST(FdrTpr, Examples)
{
  Eigen::VectorXi z(4);
  z << 1, 0, 1, 0;
  const FdpTpp none = fdr_tpr({}, z);
  EXPECT_EQ(none.fdp, 0.0);
  EXPECT_EQ(none.tpp, 0.0);
  const FdpTpp exact = fdr_tpr({ 0, 2 }, z);
  EXPECT_EQ(exact.fdp, 0.0);
  EXPECT_EQ(exact.tpp, 1.0);
  const FdpTpp all = fdr_tpr({ 0, 1, 2, 3 }, z);
  EXPECT_EQ(all.fdp, 0.5);
  EXPECT_EQ(all.tpp, 1.0);
}

TEST(DcovStatistic, TwoPoints)
{
  const MatrixXd x = to_eigen({ 0.0, 1.0 });
  EXPECT_NEAR(dcov_statistic(x, to_eigen({ 0.0, 1.0 })), 0.25, 1e-15);
}

TEST(DcovStatistic, ConstantResponse)
{
  const MatrixXd x = MatrixXd::Random(30, 2);
  EXPECT_NEAR(dcov_statistic(x, VectorXd::Constant(30, 1.7)), 0.0, 1e-15);
}

TEST(DcovStatistic, InvariantToRelabelingAndShift)
{
  std::mt19937_64 rng(42);
  std::normal_distribution<double> z;
  const Index n = 60;
  MatrixXd x(n, 2);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = z(rng);
    x(i, 1) = z(rng);
    y(i) = x(i, 0) * x(i, 0) + z(rng);
  }
  const double s = dcov_statistic(x, y);
  EXPECT_GE(s, -1e-12);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{ 0 });
  std::shuffle(perm.begin(), perm.end(), rng);
  MatrixXd xp(n, 2);
  VectorXd yp(n);
  for (Index i = 0; i < n; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp(i) = y(perm[static_cast<std::size_t>(i)]) + 5.0;
  }
  EXPECT_NEAR(dcov_statistic(xp, yp), s, 1e-12 * std::max(1.0, s));
}

TEST(DcovStatistic, MatchesDirectFormula)
{
  std::mt19937_64 rng(43);
  std::normal_distribution<double> z;
  const Index n = 15;
  MatrixXd x(n, 1);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = z(rng);
    y(i) = z(rng) + x(i, 0);
  }
  // textbook double centring written out longhand
  MatrixXd a(n, n), b(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index l = 0; l < n; ++l) {
      a(k, l) = std::abs(x(k, 0) - x(l, 0));
      b(k, l) = std::abs(y(k) - y(l));
    }
  auto centre = [&](const MatrixXd& m) {
    MatrixXd c(n, n);
    const double all = m.mean();
    for (Index k = 0; k < n; ++k)
      for (Index l = 0; l < n; ++l)
        c(k, l) = m(k, l) - m.row(k).mean() - m.col(l).mean() + all;
    return c;
  };
  const double ref = centre(a).cwiseProduct(centre(b)).sum() / static_cast<double>(n * n);
  EXPECT_NEAR(dcov_statistic(x, y), ref, 1e-13);
}

TEST(DcovPermutation, ConstantResponseHasUnitPValue)
{
  const MatrixXd x = MatrixXd::Random(25, 1);
  DcovOptions opt;
  opt.permutations = 49;
  opt.seed = 1;
  const DcovReport r = dcov_permutation_test(x, VectorXd::Constant(25, 2.0), opt);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(DcovPermutation, IdentityPermutationHook)
{
  const MatrixXd x = MatrixXd::Random(25, 1);
  const VectorXd y = x.col(0) * 2.0;
  DcovOptions opt;
  opt.permutations = 1;
  opt.identity_permutations = true;
  EXPECT_EQ(dcov_permutation_test(x, y, opt).p_value, 1.0);
}

TEST(DcovPermutation, ReproducibleAndWellFormed)
{
  std::mt19937_64 rng(44);
  std::normal_distribution<double> z;
  MatrixXd x(80, 1);
  VectorXd y(80);
  for (Index i = 0; i < 80; ++i) {
    x(i, 0) = z(rng);
    y(i) = z(rng);
  }
  DcovOptions opt;
  opt.permutations = 99;
  opt.seed = 77;
  const DcovReport a = dcov_permutation_test(x, y, opt);
  const DcovReport b = dcov_permutation_test(x, y, opt);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_GT(a.p_value, 0.0);
  EXPECT_LE(a.p_value, 1.0);
  const double k = a.p_value * 100.0 - 1.0;
  EXPECT_NEAR(k, std::round(k), 1e-9);
  EXPECT_THROW(dcov_permutation_test(x.topRows(1), y.head(1), opt), Error);
}

TEST(DcovPermutation, IndependentDataBelowPermutationQuantile)
{
  std::mt19937_64 rng(45);
  std::normal_distribution<double> z;
  const Index n = 2000;
  int below = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MatrixXd x(n, 1);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = z(rng);
      y(i) = z(rng);
    }
    DcovOptions opt;
    opt.permutations = 19;
    opt.seed = static_cast<std::uint64_t>(trial);
    // p > 0.05 with 19 permutations means the statistic is not in the top 5%
    below += dcov_permutation_test(x, y, opt).p_value > 0.05 ? 1 : 0;
  }
  EXPECT_GE(below, 90);
}
