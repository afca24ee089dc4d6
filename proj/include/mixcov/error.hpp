#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixcov {

enum class ErrorCode
{
  invalid_argument,
  degenerate_likelihood,
  weights_all_zero,
  degenerate_variance,
  diverged,
  constant_covariate,
  infeasible_shift,
  init_invalid,
  mu_grid_degenerate,
  singular_hessian,
  infeasible_alpha,
  bad_schema,
  bad_fit_file,
};

inline std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::invalid_argument:
      return "INVALID_ARGUMENT";
    case ErrorCode::degenerate_likelihood:
      return "DEGENERATE_LIKELIHOOD";
    case ErrorCode::weights_all_zero:
      return "WEIGHTS_ALL_ZERO";
    case ErrorCode::degenerate_variance:
      return "DEGENERATE_VARIANCE";
    case ErrorCode::diverged:
      return "DIVERGED";
    case ErrorCode::constant_covariate:
      return "CONSTANT_COVARIATE";
    case ErrorCode::infeasible_shift:
      return "INFEASIBLE_SHIFT";
    case ErrorCode::init_invalid:
      return "INIT_INVALID";
    case ErrorCode::mu_grid_degenerate:
      return "MU_GRID_DEGENERATE";
    case ErrorCode::singular_hessian:
      return "SINGULAR_HESSIAN";
    case ErrorCode::infeasible_alpha:
      return "INFEASIBLE_ALPHA";
    case ErrorCode::bad_schema:
      return "BAD_SCHEMA";
    case ErrorCode::bad_fit_file:
      return "BAD_FIT_FILE";
  }
  return "UNKNOWN";
}

//! Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message)
    , code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message)
{
  if (!condition)
    throw Error(code, message);
}

} // namespace mixcov
