#pragma once

// Experiment orchestration: runs a simulation scenario across methods
// (oracle, lasso, two-stage LLA), aggregates the evaluation metrics into
// report rows, and provides the asymptotic-normality diagnostic for the
// standardized estimator of the nonzero block.

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mest/data.hpp"
#include "mest/losses.hpp"
#include "mest/metrics.hpp"
#include "mest/simgen.hpp"
#include "mest/solver.hpp"
#include "mest/stats.hpp"
#include "mest/tuning.hpp"

namespace mest {

enum class MethodKind { Oracle, LassoLS, LassoLAD, LLA };

struct MethodSpec {
  MethodKind kind = MethodKind::LLA;
  LossSpec loss = LossSpec::lad();

  static MethodSpec oracle(LossSpec loss = LossSpec::lad()) { return {MethodKind::Oracle, loss}; }
  static MethodSpec lla(LossSpec loss = LossSpec::lad()) { return {MethodKind::LLA, loss}; }
  static MethodSpec lasso_ls() { return {MethodKind::LassoLS, LossSpec::least_squares()}; }
  static MethodSpec lasso_lad() { return {MethodKind::LassoLAD, LossSpec::lad()}; }

  // Tokens: oracle | lasso-ls | lasso-lad | lla. The loss argument applies to
  // oracle and lla; the lasso variants carry their loss in the name.
  static MethodSpec parse(const std::string& token, const LossSpec& loss) {
    if (token == "oracle") return oracle(loss);
    if (token == "lla") return lla(loss);
    if (token == "lasso-ls" || token == "lassols") return lasso_ls();
    if (token == "lasso-lad" || token == "lassolad") return lasso_lad();
    throw std::invalid_argument("unknown method: " + token);
  }

  const char* name() const {
    switch (kind) {
      case MethodKind::Oracle: return "oracle";
      case MethodKind::LassoLS: return "lasso-ls";
      case MethodKind::LassoLAD: return "lasso-lad";
      case MethodKind::LLA: return "lla";
    }
    return "?";
  }
};

struct TableRow {
  std::string scenario;
  int n = 0, p = 0, k = 0;
  std::string method;
  double ee = 0.0, pe = 0.0, c = 0.0, ic = 0.0, cp = 0.0;
  int replicates = 0;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct RunOptions {
  int threads = 1;
  int grid_points = 50;
  double grid_min_ratio = 1e-3;
  double scad_a = 3.7;
  bool standardize = false;   // scale columns to unit RMS before fitting
  bool holdout_pe = false;    // PE on a fresh draw instead of in-sample
  std::string dump_dir;       // when set, one CSV per replicate
  SolveOptions solve;
};

class SolverBudgetError : public std::runtime_error {
 public:
  SolverBudgetError(long failed, long attempted)
      : std::runtime_error("solver failure budget exceeded: " + std::to_string(failed) + "/" +
                           std::to_string(attempted) + " fits failed"),
        failed_(failed),
        attempted_(attempted) {}
  long failed() const { return failed_; }
  long attempted() const { return attempted_; }

 private:
  long failed_, attempted_;
};

namespace detail {

// Runs fn(0..count-1); with threads > 1 the schedule is work-stealing but
// failures are re-raised in replicate order, so behavior is schedule-free.
template <class Fn>
void parallel_replicates(int count, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (int r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= count) return;
      try {
        fn(r);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int nthreads = std::min(threads, count > 0 ? count : 1);
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ScaledData {
  Dataset data;
  Eigen::VectorXd scale;  // per-column divisor applied to X
};

inline ScaledData rms_scale(const Dataset& data) {
  Eigen::VectorXd scale(data.p());
  Eigen::MatrixXd X = data.X;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    const double s = std::sqrt(X.col(j).squaredNorm() / double(data.n()));
    scale[j] = s > 0.0 ? s : 1.0;
    X.col(j) /= scale[j];
  }
  return {Dataset(std::move(X), data.y), std::move(scale)};
}

}  // namespace detail

// One scenario, all methods, all replicates. Deterministic given config.seed
// regardless of thread count. Throws SolverBudgetError when more than 1% of
// attempted fits fail.
inline std::vector<TableRow> run_scenario(const ScenarioConfig& config,
                                          const std::vector<MethodSpec>& methods,
                                          const RunOptions& opts = {}) {
  config.validate();
  if (methods.empty()) throw std::invalid_argument("run_scenario: no methods");
  if (config.replicates < 1) throw std::invalid_argument("run_scenario: needs replicates >= 1");
  const Eigen::Index p = config.resolved_p(), k = config.k();
  const int reps = config.replicates;

  if (!opts.dump_dir.empty()) std::filesystem::create_directories(opts.dump_dir);

  std::vector<std::vector<ReplicateRecord>> records(
      methods.size(), std::vector<ReplicateRecord>(static_cast<std::size_t>(reps)));
  std::atomic<long> fits_attempted{0}, fits_failed{0};

  detail::parallel_replicates(reps, opts.threads, [&](int rep) {
    const GeneratedData gen = gen_dataset(config, rep);
    if (!opts.dump_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "replicate_%05d.csv", rep);
      dump_dataset_csv(gen.data, opts.dump_dir + "/" + name);
    }

    detail::ScaledData scaled{Dataset(gen.data.X, gen.data.y), Eigen::VectorXd()};
    if (opts.standardize) scaled = detail::rms_scale(gen.data);
    const Dataset& fit_data = opts.standardize ? scaled.data : gen.data;

    for (std::size_t m = 0; m < methods.size(); ++m) {
      const MethodSpec& method = methods[m];
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
      long attempted = 0, failed = 0;
      try {
        if (method.kind == MethodKind::Oracle) {
          const FitResult fit = fit_oracle(fit_data, method.loss, gen.support, opts.solve);
          attempted = 1;
          failed = fit.converged ? 0 : 1;
          beta = fit.beta;
        } else {
          const TuneMethod tune =
              method.kind == MethodKind::LLA ? TuneMethod::LLA : TuneMethod::Lasso;
          const LambdaGrid grid =
              default_grid(fit_data, method.loss, opts.grid_points, opts.grid_min_ratio);
          const TuningResult tr =
              select_lambda(fit_data, method.loss, tune, grid, opts.solve, opts.scad_a);
          attempted = tr.fits_attempted;
          failed = tr.fits_failed;
          beta = tr.fit.beta;
        }
      } catch (const std::runtime_error&) {
        // every fit in this method run failed; score the zero vector
        attempted = opts.grid_points + (method.kind == MethodKind::LLA ? 1 : 0);
        if (method.kind == MethodKind::Oracle) attempted = 1;
        failed = attempted;
      }
      fits_attempted += attempted;
      fits_failed += failed;

      if (opts.standardize) beta = beta.cwiseQuotient(scaled.scale);

      ReplicateRecord rec;
      rec.ee = estimation_error(beta, gen.beta0);
      rec.pe = opts.holdout_pe ? prediction_error(gen_holdout(config, rep).data, beta)
                               : prediction_error(gen.data, beta);
      const auto [c, ic] = selection_counts(beta, gen.support, opts.solve.zero_tol);
      rec.c = c;
      rec.ic = ic;
      records[m][static_cast<std::size_t>(rep)] = rec;
    }
  });

  if (fits_failed > 0)
    std::cerr << "mest: " << fits_failed << "/" << fits_attempted << " fits failed in scenario "
              << config.scenario_id() << "\n";
  if (double(fits_failed) > 0.01 * double(fits_attempted))
    throw SolverBudgetError(fits_failed, fits_attempted);

  std::vector<TableRow> rows;
  rows.reserve(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const MetricsSummary s = aggregate(records[m], p, k);
    TableRow row;
    row.scenario = config.scenario_id();
    row.n = static_cast<int>(config.n);
    row.p = static_cast<int>(p);
    row.k = static_cast<int>(k);
    row.method = methods[m].name();
    row.ee = s.ee_median;
    row.pe = s.pe_median;
    row.c = s.c_mean;
    row.ic = s.ic_mean;
    row.cp = s.cp;
    row.replicates = reps;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct NormalityOptions {
  int gamma_power = 1;  // exponent g in s_n^2 = sigma^2 gamma^-g u'D11^-1 u
  int threads = 1;
  int grid_points = 50;
  double grid_min_ratio = 1e-3;
  double scad_a = 3.7;
  LossSpec loss = LossSpec::lad();
  SolveOptions solve;
};

struct NormalityResult {
  double ks_stat = 0.0;
  std::vector<double> samples;  // standardized statistics, replicate order
  int support_failures = 0;     // replicates where the support was not exactly recovered
  int replicates = 0;
  int gamma_power = 1;
  double gamma = 0.0;
  double sigma2 = 0.0;
};

inline double normality_sn2(const Eigen::MatrixXd& d11, const Eigen::VectorXd& u, double sigma2,
                            double gamma, int gamma_power) {
  const Eigen::VectorXd w = d11.llt().solve(u);
  return sigma2 * std::pow(gamma, -double(gamma_power)) * u.dot(w);
}

// Per replicate: two-stage LLA estimate, restrict to the true support, form
// sqrt(n) u'(beta_hat_(1) - beta_0(1)) / s_n with D11 = X_(1)'X_(1)/n from
// that replicate. Replicates that miss the exact support are excluded from
// the sample and counted separately.
inline NormalityResult normality_check(const ScenarioConfig& config, const Eigen::VectorXd& u,
                                       int replicates, const NormalityOptions& opts = {}) {
  config.validate();
  if (replicates < 1) throw std::invalid_argument("normality_check: needs replicates >= 1");
  if (u.size() != config.k())
    throw std::invalid_argument("normality_check: u must have the support length");
  if (u.norm() > 1.0 + 1e-12)
    throw std::invalid_argument("normality_check: needs ||u|| <= 1");
  if (opts.gamma_power != 1 && opts.gamma_power != 2)
    throw std::invalid_argument("normality_check: gamma power must be 1 or 2");

  const GammaSigma gs = gamma_sigma2(opts.loss, config.dist);
  const Eigen::Index k = config.k(), p = config.resolved_p();

  std::vector<double> stats(static_cast<std::size_t>(replicates),
                            std::numeric_limits<double>::quiet_NaN());
  detail::parallel_replicates(replicates, opts.threads, [&](int rep) {
    ScenarioConfig one = config;
    one.replicates = 1;
    const GeneratedData gen = gen_dataset(one, rep);
    const LambdaGrid grid =
        default_grid(gen.data, opts.loss, opts.grid_points, opts.grid_min_ratio);
    const TuningResult tr =
        select_lambda(gen.data, opts.loss, TuneMethod::LLA, grid, opts.solve, opts.scad_a);

    bool exact = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      const bool nonzero = std::abs(tr.fit.beta[j]) > opts.solve.zero_tol;
      if (nonzero != (j < k)) { exact = false; break; }
    }
    if (!exact) return;

    const Eigen::MatrixXd x1 = gen.data.X.leftCols(k);
    const Eigen::MatrixXd d11 = (x1.transpose() * x1) / double(config.n);
    const double sn2 = normality_sn2(d11, u, gs.sigma2, gs.gamma, opts.gamma_power);
    const double dev = u.dot(tr.fit.beta.head(k) - gen.beta0.head(k));
    stats[static_cast<std::size_t>(rep)] = std::sqrt(double(config.n)) * dev / std::sqrt(sn2);
  });

  NormalityResult out;
  out.replicates = replicates;
  out.gamma_power = opts.gamma_power;
  out.gamma = gs.gamma;
  out.sigma2 = gs.sigma2;
  for (const double t : stats) {
    if (std::isnan(t)) ++out.support_failures;
    else out.samples.push_back(t);
  }
  if (out.samples.empty())
    throw std::runtime_error("normality_check: no replicate recovered the support");
  out.ks_stat = ks_statistic_vs_normal(out.samples);
  return out;
}

enum class ReportFormat { Csv, Markdown };

namespace detail {

inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// CSV uses round-trip precision with CP as a proportion; markdown mirrors the
// report-table layout grouped by scenario with CP as a percentage (2
// decimals).
inline std::string emit_report(const std::vector<TableRow>& rows, ReportFormat format) {
  if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "scenario,n,p,k,method,EE,PE,C,IC,CP,replicates\n";
    for (const TableRow& r : rows) {
      out << r.scenario << ',' << r.n << ',' << r.p << ',' << r.k << ',' << r.method << ','
          << detail::fmt_full(r.ee) << ',' << detail::fmt_full(r.pe) << ','
          << detail::fmt_full(r.c) << ',' << detail::fmt_full(r.ic) << ','
          << detail::fmt_full(r.cp) << ',' << r.replicates << '\n';
    }
    return out.str();
  }
  std::string current;
  for (const TableRow& r : rows) {
    if (r.scenario != current) {
      if (!current.empty()) out << '\n';
      current = r.scenario;
      out << "### " << r.scenario << " (n=" << r.n << ", p=" << r.p << ", k=" << r.k
          << ", replicates=" << r.replicates << ")\n";
      out << "| Method | EE | PE | C | IC | CP |\n";
      out << "|---|---|---|---|---|---|\n";
    }
    out << "| " << r.method << " | " << detail::fmt_fixed(r.ee, 4) << " | "
        << detail::fmt_fixed(r.pe, 4) << " | " << detail::fmt_fixed(r.c, 4) << " | "
        << detail::fmt_fixed(r.ic, 4) << " | " << detail::fmt_fixed(100.0 * r.cp, 2) << "% |\n";
  }
  return out.str();
}

inline std::vector<TableRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "scenario,n,p,k,method,EE,PE,C,IC,CP,replicates")
    throw std::invalid_argument("parse_report_csv: bad header");
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    TableRow r;
    auto next = [&]() -> std::string {
      if (!std::getline(ls, field, ',')) throw std::invalid_argument("parse_report_csv: short row");
      return field;
    };
    r.scenario = next();
    r.n = std::stoi(next());
    r.p = std::stoi(next());
    r.k = std::stoi(next());
    r.method = next();
    r.ee = std::stod(next());
    r.pe = std::stod(next());
    r.c = std::stod(next());
    r.ic = std::stod(next());
    r.cp = std::stod(next());
    r.replicates = std::stoi(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mest
