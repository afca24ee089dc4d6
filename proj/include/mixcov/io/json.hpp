#pragma once

#include "../inference.hpp"
#include "../marginal.hpp"
#include "../spline.hpp"

#include <nlohmann/json.hpp>

namespace mixcov::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline std::vector<double> vec(const VectorXd& v)
{
  return to_std(v);
}

inline json to_json(const NullDensity& f0)
{
  if (const auto* n = std::get_if<null_kind::Normal>(&f0.kind()))
    return { { "kind", "normal" }, { "mu", n->mu }, { "sigma2", n->sigma2 } };
  if (f0.is_uniform())
    return { { "kind", "uniform" } };
  return { { "kind", "stdnormal" } };
}

inline json to_json(const SignalDensity& f1)
{
  if (const auto* g = std::get_if<signal_kind::GaussMix>(&f1.kind()))
    return { { "kind", "gaussmix" }, { "atoms", g->mixing.atoms() }, { "weights", g->mixing.weights() } };
  if (const auto* d = std::get_if<signal_kind::Decreasing>(&f1.kind()))
    return { { "kind", "decreasing" }, { "breakpoints", d->breakpoints }, { "levels", d->levels } };
  const auto& n = std::get<signal_kind::ParamNormal>(f1.kind());
  return { { "kind", "paramnormal" }, { "mu", n.mu }, { "sigma2", n.sigma2 } };
}

inline json to_json(const PriorFn& pi)
{
  if (const auto* c = std::get_if<prior_kind::Constant>(&pi.kind()))
    return { { "kind", "constant" }, { "c", c->c } };
  if (const auto* l = std::get_if<prior_kind::LinkModel>(&pi.kind()))
    return { { "kind", "link" }, { "link", std::string(to_string(l->link)) }, { "beta0", l->beta0 },
             { "beta", vec(l->beta) } };
  const auto& iso = std::get<prior_kind::Isotonic>(pi.kind());
  return { { "kind", "isotonic" }, { "column", iso.column }, { "knots", iso.knots }, { "values", iso.values } };
}

inline json to_json(const SplineBasis& sb)
{
  json cols = json::array();
  for (const auto& c : sb.columns())
    cols.push_back({ { "lo", c.lo }, { "hi", c.hi }, { "degree", c.degree }, { "knots", c.knots } });
  return { { "df", sb.df() }, { "columns", cols } };
}

inline json to_json(const MixtureFit& fit)
{
  json j;
  j["schema_version"] = kSchemaVersion;
  j["prior"] = to_json(fit.prior);
  j["signal"] = to_json(fit.signal);
  j["null"] = to_json(fit.null);
  j["loglik"] = fit.loglik;
  j["lfdr"] = vec(fit.lfdr);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["pi_hat"] = vec(fit.pi_hat);
  j["diagnostics"] = { { "loglik_trace", fit.diagnostics.loglik_trace },
                       { "monotone", fit.diagnostics.monotone },
                       { "clamped_terms", fit.diagnostics.clamped_terms },
                       { "convergence_metric", fit.diagnostics.convergence_metric },
                       { "flags", fit.diagnostics.flags } };
  return j;
}

inline json to_json(const RejectionReport& r)
{
  return { { "schema_version", kSchemaVersion }, { "alpha", r.alpha },
           { "k_hat", r.k_hat },                 { "rejected", r.rejected },
           { "threshold_lfdr", r.threshold_lfdr }, { "realized_avg_lfdr", r.realized_avg_lfdr },
           { "nonmonotone", r.nonmonotone },     { "index_base", 0 } };
}

inline json to_json(const DcovReport& r)
{
  return { { "schema_version", kSchemaVersion }, { "statistic", r.statistic },
           { "permutations", r.permutations },   { "p_value", r.p_value },
           { "seed", r.seed } };
}

// ---------------------------------------------------------------------------
// parsing; every structural problem is BAD_FIT_FILE

namespace detail {

template<typename T>
T get(const json& j, const char* key)
{
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::bad_fit_file, std::string("fit file: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::bad_fit_file, std::string("fit file: bad field '") + key + "': " + e.what());
  }
}

template<typename F>
auto rethrow_as_fit_error(F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::bad_fit_file)
      throw;
    throw Error(ErrorCode::bad_fit_file, std::string("fit file: ") + e.what());
  }
}

} // namespace detail

inline NullDensity null_from_json(const json& j)
{
  const auto kind = detail::get<std::string>(j, "kind");
  return detail::rethrow_as_fit_error([&] {
    if (kind == "stdnormal")
      return NullDensity::std_normal();
    if (kind == "uniform")
      return NullDensity::uniform_unit();
    if (kind == "normal")
      return NullDensity::normal(detail::get<double>(j, "mu"), detail::get<double>(j, "sigma2"));
    throw Error(ErrorCode::bad_fit_file, "fit file: unknown null kind '" + kind + "'");
  });
}

inline SignalDensity signal_from_json(const json& j)
{
  const auto kind = detail::get<std::string>(j, "kind");
  return detail::rethrow_as_fit_error([&] {
    if (kind == "gaussmix")
      return SignalDensity::gauss_mix(MixingMeasure(detail::get<std::vector<double>>(j, "atoms"),
                                                    detail::get<std::vector<double>>(j, "weights")));
    if (kind == "decreasing")
      return SignalDensity::decreasing(detail::get<std::vector<double>>(j, "breakpoints"),
                                       detail::get<std::vector<double>>(j, "levels"));
    if (kind == "paramnormal")
      return SignalDensity::param_normal(detail::get<double>(j, "mu"), detail::get<double>(j, "sigma2"));
    throw Error(ErrorCode::bad_fit_file, "fit file: unknown signal kind '" + kind + "'");
  });
}

inline PriorFn prior_from_json(const json& j)
{
  const auto kind = detail::get<std::string>(j, "kind");
  return detail::rethrow_as_fit_error([&] {
    if (kind == "constant")
      return PriorFn::constant(detail::get<double>(j, "c"));
    if (kind == "link")
      return PriorFn::link_model(link_from_string(detail::get<std::string>(j, "link")),
                                 detail::get<double>(j, "beta0"),
                                 to_eigen(detail::get<std::vector<double>>(j, "beta")));
    if (kind == "isotonic")
      return PriorFn::isotonic(detail::get<Index>(j, "column"), detail::get<std::vector<double>>(j, "knots"),
                               detail::get<std::vector<double>>(j, "values"));
    throw Error(ErrorCode::bad_fit_file, "fit file: unknown prior kind '" + kind + "'");
  });
}

inline MixtureFit fit_from_json(const json& j)
{
  if (!j.is_object())
    throw Error(ErrorCode::bad_fit_file, "fit file: not a JSON object");
  const int version = detail::get<int>(j, "schema_version");
  if (version != kSchemaVersion)
    throw Error(ErrorCode::bad_fit_file, "fit file: unsupported schema_version " + std::to_string(version));
  MixtureFit fit{ prior_from_json(detail::get<json>(j, "prior")),
                  signal_from_json(detail::get<json>(j, "signal")),
                  null_from_json(detail::get<json>(j, "null")),
                  detail::get<double>(j, "loglik"),
                  to_eigen(detail::get<std::vector<double>>(j, "lfdr")),
                  VectorXd(),
                  detail::get<int>(j, "iterations"),
                  detail::get<bool>(j, "converged"),
                  FitDiagnostics{} };
  for (Index i = 0; i < fit.lfdr.size(); ++i)
    if (!(fit.lfdr(i) >= 0.0 && fit.lfdr(i) <= 1.0))
      throw Error(ErrorCode::bad_fit_file, "fit file: lfdr entries must lie in [0,1]");
  if (j.contains("pi_hat"))
    fit.pi_hat = to_eigen(detail::get<std::vector<double>>(j, "pi_hat"));
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    fit.diagnostics.loglik_trace = detail::get<std::vector<double>>(d, "loglik_trace");
    fit.diagnostics.monotone = detail::get<bool>(d, "monotone");
    fit.diagnostics.clamped_terms = detail::get<long>(d, "clamped_terms");
    fit.diagnostics.convergence_metric = detail::get<std::string>(d, "convergence_metric");
    fit.diagnostics.flags = detail::get<std::vector<std::string>>(d, "flags");
  }
  return fit;
}

} // namespace mixcov::io
