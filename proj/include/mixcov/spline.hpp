#pragma once

#include "types.hpp"

#include <algorithm>
#include <vector>

namespace mixcov {

//! Clamped B-spline basis for one covariate, on the min-max rescaled value.
//! degree = min(3, df); df - degree interior knots at equally spaced sample
//! quantiles; the first of the df + 1 basis functions is dropped.
struct SplineBasis1d
{
  double lo = 0.0;
  double hi = 1.0;
  int degree = 3;
  std::vector<double> knots; // full clamped knot vector on [0,1]

  int size() const { return static_cast<int>(knots.size()) - degree - 1; } // df + 1

  //! All df + 1 basis values at x (clamped into the training range).
  std::vector<double> full_basis(double x) const
  {
    const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
    const int nb = size();
    const int p = degree;
    // span index s with knots[s] <= t < knots[s+1], right end folded into the last span
    int s = p;
    while (s < nb - 1 && t >= knots[static_cast<std::size_t>(s) + 1])
      ++s;
    std::vector<double> n(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(p) + 1), right(static_cast<std::size_t>(p) + 1);
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = t - knots[static_cast<std::size_t>(s + 1 - j)];
      right[j] = knots[static_cast<std::size_t>(s + j)] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double denom = right[r + 1] + left[j - r];
        const double tmp = denom > 0.0 ? n[r] / denom : 0.0;
        n[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      n[j] = saved;
    }
    std::vector<double> out(static_cast<std::size_t>(nb), 0.0);
    for (int r = 0; r <= p; ++r)
      out[static_cast<std::size_t>(s - p + r)] = n[r];
    return out;
  }
};

class SplineBasis
{
public:
  SplineBasis() = default;

  static SplineBasis fit(const MatrixXd& x, int df)
  {
    require(df >= 1, ErrorCode::invalid_argument, "spline df must be >= 1");
    SplineBasis sb;
    sb.df_ = df;
    for (Index j = 0; j < x.cols(); ++j) {
      SplineBasis1d b;
      b.lo = x.col(j).minCoeff();
      b.hi = x.col(j).maxCoeff();
      require(b.hi > b.lo, ErrorCode::constant_covariate,
              "covariate " + std::to_string(j) + " has zero range");
      b.degree = std::min(3, df);
      const int interior = df - b.degree;
      b.knots.assign(static_cast<std::size_t>(b.degree) + 1, 0.0);
      if (interior > 0) {
        std::vector<double> t(x.rows());
        for (Index i = 0; i < x.rows(); ++i)
          t[static_cast<std::size_t>(i)] = (x(i, j) - b.lo) / (b.hi - b.lo);
        std::sort(t.begin(), t.end());
        for (int k = 1; k <= interior; ++k) {
          // linear-interpolated sample quantile
          const double h = static_cast<double>(t.size() - 1) * k / (interior + 1);
          const auto lo = static_cast<std::size_t>(h);
          const std::size_t hi = std::min(lo + 1, t.size() - 1);
          b.knots.push_back(t[lo] + (h - static_cast<double>(lo)) * (t[hi] - t[lo]));
        }
      }
      b.knots.insert(b.knots.end(), static_cast<std::size_t>(b.degree) + 1, 1.0);
      sb.cols_.push_back(std::move(b));
    }
    return sb;
  }

  int df() const { return df_; }
  const std::vector<SplineBasis1d>& columns() const { return cols_; }

  MatrixXd transform(const MatrixXd& x) const
  {
    require(x.cols() == static_cast<Index>(cols_.size()), ErrorCode::invalid_argument,
            "spline basis: covariate count mismatch");
    MatrixXd out(x.rows(), x.cols() * df_);
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i) {
        const auto v = cols_[static_cast<std::size_t>(j)].full_basis(x(i, j));
        for (int k = 0; k < df_; ++k)
          out(i, j * df_ + k) = v[static_cast<std::size_t>(k) + 1];
      }
    return out;
  }

private:
  int df_ = 3;
  std::vector<SplineBasis1d> cols_;
};

//! n x (p * df) design of per-covariate B-spline columns.
inline MatrixXd spline_expand(const MatrixXd& x, int df)
{
  return SplineBasis::fit(x, df).transform(x);
}

} // namespace mixcov
