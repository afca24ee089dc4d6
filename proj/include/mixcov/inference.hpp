#pragma once

#include "random.hpp"
#include "types.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace mixcov {

struct RejectionReport
{
  double alpha = 0.1;
  Index k_hat = 0;
  std::vector<Index> rejected; // ascending, 0-based
  double threshold_lfdr = 0.0;
  double realized_avg_lfdr = 0.0;
  bool nonmonotone = false;    // a rejected |y| is smaller than an accepted |y|
};

//! k_hat = max{k : mean of the k smallest lfdrs <= alpha}; reject every i with
//! lfdr_i <= the k_hat-th smallest lfdr.
inline RejectionReport reject_at_level(const VectorXd& lfdr, double alpha,
                                       const VectorXd* y = nullptr)
{
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument, "alpha must lie in (0,1)");
  require((lfdr.array() >= 0.0).all() && (lfdr.array() <= 1.0).all(), ErrorCode::invalid_argument,
          "lfdr entries must lie in [0,1]");
  const Index n = lfdr.size();
  std::vector<double> sorted(lfdr.data(), lfdr.data() + n);
  std::sort(sorted.begin(), sorted.end());

  RejectionReport rep;
  rep.alpha = alpha;
  double cum = 0.0;
  for (Index k = 1; k <= n; ++k) {
    cum += sorted[static_cast<std::size_t>(k - 1)];
    if (cum / static_cast<double>(k) <= alpha)
      rep.k_hat = k;
  }
  if (rep.k_hat == 0)
    return rep;

  rep.threshold_lfdr = sorted[static_cast<std::size_t>(rep.k_hat - 1)];
  double sum = 0.0;
  for (Index i = 0; i < n; ++i)
    if (lfdr(i) <= rep.threshold_lfdr) {
      rep.rejected.push_back(i);
      sum += lfdr(i);
    }
  rep.realized_avg_lfdr = sum / static_cast<double>(rep.rejected.size());

  if (y) {
    double min_rejected = std::numeric_limits<double>::infinity();
    double max_accepted = -std::numeric_limits<double>::infinity();
    std::size_t r = 0;
    for (Index i = 0; i < n; ++i) {
      const double e = std::abs((*y)(i));
      if (r < rep.rejected.size() && rep.rejected[r] == i) {
        min_rejected = std::min(min_rejected, e);
        ++r;
      } else {
        max_accepted = std::max(max_accepted, e);
      }
    }
    rep.nonmonotone = min_rejected < max_accepted;
  }
  return rep;
}

struct FdpTpp
{
  double fdp = 0.0;
  double tpp = 0.0;
};

inline FdpTpp fdr_tpr(const std::vector<Index>& rejected, const Eigen::VectorXi& z_true)
{
  Index false_rej = 0;
  Index true_rej = 0;
  for (Index i : rejected) {
    require(i >= 0 && i < z_true.size(), ErrorCode::invalid_argument, "rejected index out of range");
    (z_true(i) == 0 ? false_rej : true_rej) += 1;
  }
  const Index non_null = z_true.sum();
  FdpTpp out;
  out.fdp = rejected.empty() ? 0.0 : static_cast<double>(false_rej) / static_cast<double>(rejected.size());
  out.tpp = static_cast<double>(true_rej) / static_cast<double>(std::max<Index>(1, non_null));
  return out;
}

// ---------------------------------------------------------------------------
// Distance covariance

namespace detail {

//! Double-centred Euclidean distance matrix of the rows of x.
inline MatrixXd centred_distances(const MatrixXd& x)
{
  const Index n = x.rows();
  MatrixXd a(n, n);
  for (Index k = 0; k < n; ++k) {
    a(k, k) = 0.0;
    for (Index l = k + 1; l < n; ++l)
      a(k, l) = a(l, k) = (x.row(k) - x.row(l)).norm();
  }
  const VectorXd row_mean = a.rowwise().mean();
  const double grand = row_mean.mean();
  for (Index l = 0; l < n; ++l)
    for (Index k = 0; k < n; ++k)
      a(k, l) += grand - row_mean(k) - row_mean(l);
  return a;
}

//! (1/n^2) sum_kl A_kl B_{perm(k) perm(l)}.
inline double dcov_from_centred(const MatrixXd& a, const MatrixXd& b, const std::vector<Index>& perm)
{
  const Index n = a.rows();
  VectorXd col(n);
  for (Index l = 0; l < n; ++l) {
    const Index pl = perm[static_cast<std::size_t>(l)];
    double s = 0.0;
    for (Index k = 0; k < n; ++k)
      s += a(k, l) * b(perm[static_cast<std::size_t>(k)], pl);
    col(l) = s;
  }
  return pairwise_sum(col) / (static_cast<double>(n) * static_cast<double>(n));
}

} // namespace detail

inline double dcov_statistic(const MatrixXd& x, const VectorXd& y)
{
  require(x.rows() == y.size(), ErrorCode::invalid_argument, "dcov: size mismatch");
  require(y.size() >= 2, ErrorCode::invalid_argument, "dcov needs n >= 2");
  std::vector<Index> id(static_cast<std::size_t>(y.size()));
  std::iota(id.begin(), id.end(), Index{ 0 });
  return detail::dcov_from_centred(detail::centred_distances(x), detail::centred_distances(y), id);
}

struct DcovReport
{
  double statistic = 0.0;
  int permutations = 0;
  double p_value = 1.0;
  std::uint64_t seed = 0;
};

struct DcovOptions
{
  int permutations = 199;
  std::uint64_t seed = 0;
  bool identity_permutations = false; // test hook
};

//! Permutation test of independence; permutation r uses stream split_seed(seed, r).
inline DcovReport dcov_permutation_test(const MatrixXd& x, const VectorXd& y, const DcovOptions& opt = {})
{
  require(x.rows() == y.size(), ErrorCode::invalid_argument, "dcov: size mismatch");
  require(y.size() >= 2, ErrorCode::invalid_argument, "dcov needs n >= 2");
  require(opt.permutations >= 1, ErrorCode::invalid_argument, "dcov: permutations must be >= 1");
  const MatrixXd a = detail::centred_distances(x);
  const MatrixXd b = detail::centred_distances(y);
  std::vector<Index> perm(static_cast<std::size_t>(y.size()));
  std::iota(perm.begin(), perm.end(), Index{ 0 });

  DcovReport rep;
  rep.permutations = opt.permutations;
  rep.seed = opt.seed;
  rep.statistic = detail::dcov_from_centred(a, b, perm);
  int exceed = 0;
  for (int r = 0; r < opt.permutations; ++r) {
    std::iota(perm.begin(), perm.end(), Index{ 0 });
    if (!opt.identity_permutations) {
      std::mt19937_64 rng(split_seed(opt.seed, static_cast<std::uint64_t>(r)));
      std::shuffle(perm.begin(), perm.end(), rng);
    }
    if (detail::dcov_from_centred(a, b, perm) >= rep.statistic)
      ++exceed;
  }
  rep.p_value = (1.0 + exceed) / (opt.permutations + 1.0);
  return rep;
}

} // namespace mixcov
