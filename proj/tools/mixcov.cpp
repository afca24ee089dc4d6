// mixcov command-line tool: fit, reject, screen, sim.

#include "mixcov/io/csv.hpp"
#include "mixcov/io/json.hpp"
#include "mixcov/mixcov.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

using namespace mixcov;
using nlohmann::json;

namespace {

// Exit codes
constexpr int kOk = 0;
constexpr int kModelError = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

int report_error(std::string_view code, const std::string& message, int exit_code)
{
  json j{ { "error", { { "code", code }, { "message", message }, { "exit_code", exit_code } } } };
  std::cerr << j.dump() << "\n";
  return exit_code;
}

NullDensity parse_null(const std::string& s)
{
  if (s == "stdnormal")
    return NullDensity::std_normal();
  if (s == "uniform")
    return NullDensity::uniform_unit();
  if (s.rfind("normal:", 0) == 0) {
    const std::string rest = s.substr(7);
    const auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw UsageError("--null normal:MU,SIG2 needs two numbers");
    try {
      std::size_t u = 0, v = 0;
      const double mu = std::stod(rest.substr(0, comma), &u);
      const double s2 = std::stod(rest.substr(comma + 1), &v);
      if (u != comma || v != rest.size() - comma - 1)
        throw std::invalid_argument(rest);
      return NullDensity::normal(mu, s2);
    } catch (const std::logic_error&) {
      throw UsageError("--null normal:MU,SIG2 needs two numbers, got '" + rest + "'");
    }
  }
  throw UsageError("unknown --null '" + s + "'");
}

bool ci_mode()
{
  const char* v = std::getenv("MIXCOV_CI");
  return v && std::string(v) == "1";
}

//! Seed from the flag, or time-derived outside CI mode (echoed on stderr).
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag)
{
  if (flag)
    return *flag;
  if (ci_mode())
    throw UsageError("--seed is required when MIXCOV_CI=1");
  const auto seed = static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count());
  std::cerr << "seed: " << seed << "\n";
  return seed;
}

void write_text(const std::string& path, const std::string& text)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::invalid_argument, "cannot write '" + path + "'");
  out << text;
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MixtureFit as_fit(const PriorFn& pi, const SignalDensity& f1, const NullDensity& f0, const Dataset& d)
{
  const MixtureTerms t = mixture_terms(pi, f1, f0, d);
  const LoglikValue ll = loglik_from_mixture(t.mixture());
  MixtureFit fit{ pi, f1, f0, ll.value, lfdr_from_terms(t), t.pi, 0, true, {} };
  fit.diagnostics.clamped_terms = ll.clamped;
  fit.diagnostics.loglik_trace = { ll.value };
  return fit;
}

// ---------------------------------------------------------------------------
// fitting pipeline shared by `fit` and `sim`

struct FitSpec
{
  std::string method = "fmle";
  PiClass pi = PiClass::link_logistic;
  F1Class f1 = F1Class::gauss_mix_grid;
  NullDensity null = NullDensity::std_normal();
  int spline_df = 0;
  Index iso_column = 0;
  std::string init = "best";
  int max_iter = 500;
  double tol = 1e-6;
};

struct FitOutcome
{
  MixtureFit fit;
  json extra = json::object();
};

//! Data seen by the prior class: spline design for links, raw covariates otherwise.
Dataset working_data(const Dataset& raw, const FitSpec& s, std::optional<SplineBasis>* basis)
{
  if (!is_link_class(s.pi) || s.spline_df <= 0 || raw.p() == 0)
    return raw;
  SplineBasis b = SplineBasis::fit(raw.x(), s.spline_df);
  Dataset d = raw.with_design(b.transform(raw.x()));
  if (basis)
    *basis = std::move(b);
  return d;
}

FitOutcome run_marginal1(const Dataset& d, const FitSpec& s)
{
  Marginal1Options o;
  o.f1_class = s.f1;
  o.iso_column = s.iso_column;
  const Marginal1Result r = marginal1_profile(d, s.null, s.pi, o);
  FitOutcome out{ as_fit(r.pi_hat, r.f1_hat, s.null, d) };
  out.extra["pibar_hat"] = r.pibar_hat;
  json prof = json::array();
  for (const auto& p : r.profile)
    prof.push_back({ { "alpha", p.alpha }, { "loglik", p.loglik } });
  out.extra["profile"] = prof;
  if (r.degenerate)
    out.fit.diagnostics.flags.emplace_back("degenerate_pi");
  if (r.bounded)
    out.fit.diagnostics.flags.emplace_back("pi_link_diverged_bounded_retry");
  return out;
}

bool marginal2_available(const Dataset& d, const FitSpec& s)
{
  return s.pi != PiClass::constant && d.p() >= 1;
}

FitOutcome run_marginal2(const Dataset& d, const FitSpec& s)
{
  Marginal2Options o;
  o.f1_class = s.f1;
  o.iso_column = s.iso_column;
  const Marginal2Result r = marginal2_lse(d, s.null, s.pi, o);
  FitOutcome out{ as_fit(r.pi_hat, r.f1_hat, s.null, d) };
  out.extra["theta_hat"] = io::vec(r.theta_hat);
  json cov = json::array();
  for (Index i = 0; i < r.covariance.rows(); ++i)
    cov.push_back(io::vec(r.covariance.row(i).transpose()));
  out.extra["covariance"] = cov;
  out.extra["ls_objective"] = r.objective;
  if (r.covariance_singular)
    out.fit.diagnostics.flags.emplace_back("covariance_singular");
  return out;
}

EmConfig em_config(const FitSpec& s)
{
  EmConfig c;
  c.max_iter = s.max_iter;
  c.tol = s.tol;
  c.pi_class = s.pi;
  c.f1_class = s.f1;
  c.iso_column = s.iso_column;
  return c;
}

//! fMLE seeded from the best available marginal fit (or a fit file).
FitOutcome run_fmle(const Dataset& d, const FitSpec& s, const std::optional<FitOutcome>& m1,
                    const std::optional<FitOutcome>& m2)
{
  ModelPair init{ PriorFn::constant(0.5), SignalDensity::param_normal(0.0, 1.0) };
  std::string chosen;
  json candidates = json::object();
  if (s.init.rfind("file:", 0) == 0) {
    const std::string path = s.init.substr(5);
    std::ifstream in(path);
    if (!in)
      throw Error(ErrorCode::bad_fit_file, "cannot open fit file '" + path + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::bad_fit_file, std::string("fit file: ") + e.what());
    }
    const MixtureFit f = io::fit_from_json(j);
    init = { f.prior, f.signal };
    chosen = "file";
  } else {
    std::optional<FitOutcome> a = m1, b = m2;
    if ((s.init == "marginal1" || s.init == "best") && !a)
      a = run_marginal1(d, s);
    if ((s.init == "marginal2" || (s.init == "best" && marginal2_available(d, s))) && !b)
      b = run_marginal2(d, s);
    if (a)
      candidates["marginal1"] = a->fit.loglik;
    if (b)
      candidates["marginal2"] = b->fit.loglik;
    // ties go to Marginal-I
    const bool use_b = s.init == "marginal2" || (s.init == "best" && b && (!a || b->fit.loglik > a->fit.loglik));
    const FitOutcome& src = use_b ? *b : *a;
    init = { src.fit.prior, src.fit.signal };
    chosen = use_b ? "marginal2" : "marginal1";
  }
  FitOutcome out{ em_fit(d, s.null, init, em_config(s)) };
  out.extra["init"] = chosen;
  out.extra["init_candidates"] = candidates;
  return out;
}

FitOutcome run_method(const Dataset& d, const FitSpec& s)
{
  if (s.method == "marginal1")
    return run_marginal1(d, s);
  if (s.method == "marginal2")
    return run_marginal2(d, s);
  return run_fmle(d, s, std::nullopt, std::nullopt);
}

// ---------------------------------------------------------------------------
// commands

struct FitArgs
{
  std::string data;
  std::string method = "fmle";
  std::string pi = "logistic";
  std::string f1 = "gaussmix";
  std::string null = "stdnormal";
  int spline_df = 0;
  Index iso_column = 0;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::string init = "best";
  int max_iter = 500;
  double tol = 1e-6;
};

int cmd_fit(const FitArgs& a)
{
  FitSpec s;
  s.method = a.method;
  s.pi = pi_class_from_string(a.pi);
  s.f1 = f1_class_from_string(a.f1);
  s.null = parse_null(a.null);
  s.spline_df = a.spline_df;
  s.iso_column = a.iso_column;
  s.init = a.init;
  s.max_iter = a.max_iter;
  s.tol = a.tol;
  if (s.init != "marginal1" && s.init != "marginal2" && s.init != "best" && s.init.rfind("file:", 0) != 0)
    throw UsageError("--init must be marginal1, marginal2, best or file:PATH");

  const Dataset raw = io::read_dataset(a.data);
  std::optional<SplineBasis> basis;
  const Dataset d = working_data(raw, s, &basis);
  const FitOutcome r = run_method(d, s);

  json j = io::to_json(r.fit);
  j["method"] = s.method;
  j["pi_class"] = std::string(to_string(s.pi));
  j["f1_class"] = std::string(to_string(s.f1));
  if (basis)
    j["spline"] = io::to_json(*basis);
  if (a.seed)
    j["seed"] = *a.seed;
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it)
    j[it.key()] = it.value();
  write_text(a.out, j.dump(2) + "\n");
  return kOk;
}

struct RejectArgs
{
  std::string fit;
  double alpha = 0.1;
  std::string data;
  std::string out = "-";
  std::string csv;
};

int cmd_reject(const RejectArgs& a)
{
  if (!(a.alpha > 0.0 && a.alpha < 1.0))
    throw UsageError("--alpha must lie in (0,1)");
  std::ifstream in(a.fit);
  if (!in)
    throw Error(ErrorCode::bad_fit_file, "cannot open fit file '" + a.fit + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::bad_fit_file, std::string("fit file: ") + e.what());
  }
  const MixtureFit fit = io::fit_from_json(j);
  std::optional<Dataset> data;
  if (!a.data.empty()) {
    data = io::read_dataset(a.data);
    if (data->n() != fit.lfdr.size())
      throw Error(ErrorCode::bad_schema, "data and fit have different numbers of rows");
  }
  const RejectionReport r = reject_at_level(fit.lfdr, a.alpha, data ? &data->y() : nullptr);
  write_text(a.out, io::to_json(r).dump(2) + "\n");
  if (!a.csv.empty()) {
    std::ostringstream os;
    os << "index,lfdr,rejected\n";
    std::size_t k = 0;
    for (Index i = 0; i < fit.lfdr.size(); ++i) {
      const bool rej = k < r.rejected.size() && r.rejected[k] == i;
      if (rej)
        ++k;
      os << i << "," << fmt(fit.lfdr(i)) << "," << (rej ? 1 : 0) << "\n";
    }
    write_text(a.csv, os.str());
  }
  return kOk;
}

struct ScreenArgs
{
  std::string data;
  int permutations = 199;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
};

int cmd_screen(const ScreenArgs& a)
{
  const std::uint64_t seed = resolve_seed(a.seed);
  const Dataset d = io::read_dataset(a.data);
  if (d.n() < 2)
    throw UsageError("screen needs at least two rows");
  if (d.p() < 1)
    throw UsageError("screen needs at least one covariate column");
  DcovOptions o;
  o.permutations = a.permutations;
  o.seed = seed;
  write_text(a.out, io::to_json(dcov_permutation_test(d.x(), d.y(), o)).dump(2) + "\n");
  return kOk;
}

struct SimArgs
{
  std::string setting = "A.i";
  Index n = 1000;
  int replicates = 10;
  std::vector<std::string> methods{ "marginal1", "marginal2", "fmle" };
  std::vector<double> alpha_levels{ 0.05, 0.10, 0.15, 0.20, 0.25, 0.30 };
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::string summary;
  int spline_df = 3;
};

struct Row
{
  std::string method;
  std::string metric;
  double value;
};

struct ReplicateResult
{
  std::uint64_t seed = 0;
  std::vector<Row> rows;
  std::map<std::string, double> seconds;
};

ReplicateResult sim_replicate(const SimArgs& a, char s_id, const std::string& f1_id, std::uint64_t seed)
{
  SimSetting st;
  st.s_id = s_id;
  st.f1_id = f1_id;
  st.n = a.n;
  st.seed = seed;
  st.spline_df = a.spline_df;
  const Replicate rep = simulate(st);
  const Dataset d = rep.data.with_design(fitting_design(rep, st));
  const double ell_star = truth_loglik(rep);

  FitSpec spec;
  ReplicateResult out;
  out.seed = seed;
  auto wants = [&](const char* m) { return std::find(a.methods.begin(), a.methods.end(), m) != a.methods.end(); };
  auto timed = [&](const char* name, auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    out.seconds[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };

  std::optional<FitOutcome> m1, m2;
  if (wants("marginal1") || wants("fmle"))
    m1 = timed("marginal1", [&] { return run_marginal1(d, spec); });
  if (wants("marginal2") || wants("fmle"))
    m2 = timed("marginal2", [&] { return run_marginal2(d, spec); });

  auto emit = [&](const std::string& method, const MixtureFit& fit) {
    const Metrics m = metrics(fit, rep);
    out.rows.push_back({ method, "rmse_pi", m.rmse_pi });
    out.rows.push_back({ method, "rmse_f1", m.rmse_f1 });
    out.rows.push_back({ method, "rmse_lfdr", m.rmse_lfdr });
    out.rows.push_back({ method, "underest_lfdr", m.underest_lfdr });
    out.rows.push_back({ method, "loglik", fit.loglik });
    out.rows.push_back({ method, "loglik_minus_truth", fit.loglik - ell_star });
    for (double alpha : a.alpha_levels) {
      const RejectionReport r = reject_at_level(fit.lfdr, alpha);
      const FdpTpp e = fdr_tpr(r.rejected, rep.z_true);
      char tag[32];
      std::snprintf(tag, sizeof tag, "%.2f", alpha);
      out.rows.push_back({ method, std::string("fdp_") + tag, e.fdp });
      out.rows.push_back({ method, std::string("tpp_") + tag, e.tpp });
    }
  };
  if (wants("marginal1"))
    emit("marginal1", m1->fit);
  if (wants("marginal2"))
    emit("marginal2", m2->fit);
  if (wants("fmle")) {
    const FitOutcome f = timed("fmle", [&] { return run_fmle(d, spec, m1, m2); });
    emit("fmle", f.fit);
    out.rows.push_back({ "fmle", "amle", f.fit.loglik - ell_star >= -1e-12 ? 1.0 : 0.0 });
    out.rows.push_back({ "fmle", "init_marginal1", f.extra["init"] == "marginal1" ? 1.0 : 0.0 });
    out.rows.push_back({ "fmle", "converged", f.fit.converged ? 1.0 : 0.0 });
  }
  return out;
}

int cmd_sim(const SimArgs& a)
{
  std::pair<char, std::string> id;
  try {
    id = parse_setting_id(a.setting);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  for (const auto& m : a.methods)
    if (m != "marginal1" && m != "marginal2" && m != "fmle")
      throw UsageError("unknown method '" + m + "'");
  for (double al : a.alpha_levels)
    if (!(al > 0.0 && al < 1.0))
      throw UsageError("alpha levels must lie in (0,1)");
  if (a.replicates < 0 || a.n < 2 || a.jobs < 1)
    throw UsageError("--replicates must be >= 0, --n >= 2 and --jobs >= 1");
  const std::uint64_t master = resolve_seed(a.seed);

  std::vector<ReplicateResult> results(static_cast<std::size_t>(a.replicates));
  std::atomic<int> next{ 0 };
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (int r = next++; r < a.replicates; r = next++) {
      try {
        results[static_cast<std::size_t>(r)] =
          sim_replicate(a, id.first, id.second, split_seed(master, static_cast<std::uint64_t>(r)));
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mu);
        if (!err)
          err = std::current_exception();
      }
    }
  };
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> pool;
  for (int j = 1; j < std::min(a.jobs, std::max(1, a.replicates)); ++j)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();
  if (err)
    std::rethrow_exception(err);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream csv;
  csv << "setting,replicate,seed,method,metric,value\n";
  std::map<std::string, std::map<std::string, std::vector<double>>> agg;
  std::map<std::string, double> seconds;
  for (std::size_t r = 0; r < results.size(); ++r) {
    for (const auto& row : results[r].rows) {
      csv << a.setting << "," << r << "," << results[r].seed << "," << row.method << "," << row.metric << ","
          << fmt(row.value) << "\n";
      agg[row.method][row.metric].push_back(row.value);
    }
    for (const auto& [m, t] : results[r].seconds)
      seconds[m] += t;
  }
  write_text(a.out, csv.str());

  std::string summary_path = a.summary;
  if (summary_path.empty() && !a.out.empty() && a.out != "-")
    summary_path = a.out + ".summary.json";
  if (!summary_path.empty()) {
    json metrics_json = json::object();
    for (auto& [method, by_metric] : agg)
      for (auto& [metric, v] : by_metric) {
        std::vector<double> s = v;
        std::sort(s.begin(), s.end());
        const std::size_t k = s.size();
        const double median = k % 2 ? s[k / 2] : 0.5 * (s[k / 2 - 1] + s[k / 2]);
        metrics_json[method][metric] = { { "mean", pairwise_sum(std::span<const double>(v)) / static_cast<double>(k) },
                                         { "median", median } };
      }
    json j{ { "schema_version", io::kSchemaVersion },
            { "setting", a.setting },
            { "n", a.n },
            { "replicates", a.replicates },
            { "seed", master },
            { "methods", a.methods },
            { "alpha_levels", a.alpha_levels },
            { "metrics", metrics_json },
            { "timings_seconds", { { "per_method_cpu", seconds }, { "wall", wall }, { "jobs", a.jobs } } } };
    write_text(summary_path, j.dump(2) + "\n");
  }
  return kOk;
}

//! Splices `key=value` lines of a --config file into the argument list for every
//! key not already given as a flag, so flags > config file > defaults.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config")
      path = args[i + 1];
  for (const auto& a : args)
    if (a.rfind("--config=", 0) == 0)
      path = a.substr(9);
  if (path.empty())
    return args;
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open config file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    line = io::detail::trim(line);
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line without '=': " + line);
    std::string key = io::detail::trim(line.substr(0, eq));
    std::string value = io::detail::trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0)
      key.erase(0, 2);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Covariate-modulated two-groups mixture models" };
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit the mixture model to a CSV dataset");
  std::string config_path;
  fit->add_option("--config", config_path, "flat key=value file mirroring the flag names");
  fit->add_option("--data", fa.data, "CSV with a y column and covariates")->required();
  fit->add_option("--method", fa.method)->check(CLI::IsMember({ "fmle", "marginal1", "marginal2" }))->capture_default_str();
  fit->add_option("--pi", fa.pi)->check(CLI::IsMember({ "logistic", "probit", "cloglog", "isotonic", "constant" }))->capture_default_str();
  fit->add_option("--f1", fa.f1)->check(CLI::IsMember({ "gaussmix", "decreasing", "paramnormal" }))->capture_default_str();
  fit->add_option("--null", fa.null, "stdnormal | normal:MU,SIG2 | uniform")->capture_default_str();
  fit->add_option("--spline-df", fa.spline_df, "B-spline df per covariate for link priors (0: raw)")->check(CLI::NonNegativeNumber);
  fit->add_option("--iso-column", fa.iso_column, "ordering covariate for the isotonic prior")->check(CLI::NonNegativeNumber);
  fit->add_option("--seed", fa.seed);
  fit->add_option("--out", fa.out, "output path, - for stdout");
  fit->add_option("--init", fa.init, "marginal1 | marginal2 | best | file:PATH")->capture_default_str();
  fit->add_option("--max-iter", fa.max_iter)->check(CLI::PositiveNumber);
  fit->add_option("--tol", fa.tol)->check(CLI::PositiveNumber);

  RejectArgs ra;
  auto* rej = app.add_subcommand("reject", "Reject hypotheses at an average-lfdr level");
  rej->add_option("--fit", ra.fit, "fit JSON")->required();
  rej->add_option("--alpha", ra.alpha)->capture_default_str();
  rej->add_option("--data", ra.data, "dataset CSV (enables the nonmonotone flag)");
  rej->add_option("--out", ra.out);
  rej->add_option("--csv", ra.csv, "per-hypothesis lfdr and decision");

  ScreenArgs sa;
  auto* scr = app.add_subcommand("screen", "Distance-covariance permutation test of Y against X");
  scr->add_option("--data", sa.data)->required();
  scr->add_option("--permutations", sa.permutations)->check(CLI::PositiveNumber)->capture_default_str();
  scr->add_option("--seed", sa.seed);
  scr->add_option("--out", sa.out);

  SimArgs ma;
  auto* sim = app.add_subcommand("sim", "Run the simulation settings and write tidy metrics");
  sim->add_option("--setting", ma.setting, "A.i ... D.iv")->capture_default_str();
  sim->add_option("--n", ma.n)->capture_default_str();
  sim->add_option("--replicates", ma.replicates)->capture_default_str();
  sim->add_option("--methods", ma.methods)->delimiter(',');
  sim->add_option("--alpha-levels", ma.alpha_levels)->delimiter(',');
  sim->add_option("--jobs", ma.jobs)->capture_default_str();
  sim->add_option("--seed", ma.seed);
  sim->add_option("--out", ma.out, "tidy CSV path, - for stdout");
  sim->add_option("--summary", ma.summary, "summary JSON path");
  sim->add_option("--spline-df", ma.spline_df)->check(CLI::PositiveNumber)->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end()); // CLI11 takes the vector in reverse order
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("USAGE", e.what(), kUsage);
  } catch (const UsageError& e) {
    return report_error("USAGE", e.what(), kUsage);
  }

  try {
    if (*fit)
      return cmd_fit(fa);
    if (*rej)
      return cmd_reject(ra);
    if (*scr)
      return cmd_screen(sa);
    return cmd_sim(ma);
  } catch (const UsageError& e) {
    return report_error("USAGE", e.what(), kUsage);
  } catch (const Error& e) {
    const bool input = e.code() == ErrorCode::bad_schema || e.code() == ErrorCode::bad_fit_file;
    return report_error(to_string(e.code()), e.what(), input ? kUsage : kModelError);
  } catch (const std::exception& e) {
    return report_error("INTERNAL", e.what(), kModelError);
  }
}
