#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mest/experiments.hpp"

using namespace mest;
using Catch::Approx;

namespace {

ScenarioConfig small_scenario(int reps = 4) {
  ScenarioConfig cfg;
  cfg.n = 60;
  cfg.p = 10;
  cfg.seed = 2718;
  cfg.replicates = reps;
  return cfg;
}

RunOptions quick_opts(int threads = 1) {
  RunOptions opts;
  opts.threads = threads;
  opts.grid_points = 15;
  return opts;
}

}  // namespace

TEST_CASE("identical runs produce byte-identical reports") {
  const ScenarioConfig cfg = small_scenario();
  const std::vector<MethodSpec> methods = {MethodSpec::oracle(), MethodSpec::lla()};
  const auto rows1 = run_scenario(cfg, methods, quick_opts());
  const auto rows2 = run_scenario(cfg, methods, quick_opts());
  CHECK(rows1 == rows2);
  CHECK(emit_report(rows1, ReportFormat::Csv) == emit_report(rows2, ReportFormat::Csv));
}

TEST_CASE("parallel and serial execution agree exactly") {
  const ScenarioConfig cfg = small_scenario(6);
  const std::vector<MethodSpec> methods = {MethodSpec::oracle(), MethodSpec::lla(),
                                           MethodSpec::lasso_ls()};
  const auto serial = run_scenario(cfg, methods, quick_opts(1));
  const auto parallel = run_scenario(cfg, methods, quick_opts(4));
  CHECK(serial == parallel);
  CHECK(emit_report(serial, ReportFormat::Csv) == emit_report(parallel, ReportFormat::Csv));
}

TEST_CASE("oracle rows are structurally perfect") {
  const ScenarioConfig cfg = small_scenario(5);
  const auto rows = run_scenario(cfg, {MethodSpec::oracle()}, quick_opts());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "oracle");
  CHECK(rows[0].c == Approx(double(rows[0].p - rows[0].k)));
  CHECK(rows[0].ic == 0.0);
  CHECK(rows[0].cp == Approx(1.0));
}

TEST_CASE("different seeds move the metrics") {
  ScenarioConfig a = small_scenario(3), b = small_scenario(3);
  b.seed = a.seed + 1;
  const auto ra = run_scenario(a, {MethodSpec::lla()}, quick_opts());
  const auto rb = run_scenario(b, {MethodSpec::lla()}, quick_opts());
  CHECK(ra[0].ee != rb[0].ee);
}

TEST_CASE("solver budget violations abort the scenario") {
  ScenarioConfig cfg = small_scenario(2);
  RunOptions opts = quick_opts();
  opts.solve.max_iter = 1;  // nothing can converge
  CHECK_THROWS_AS(run_scenario(cfg, {MethodSpec::lasso_ls()}, opts), SolverBudgetError);
}

TEST_CASE("csv report round-trips") {
  const ScenarioConfig cfg = small_scenario(3);
  const auto rows =
      run_scenario(cfg, {MethodSpec::oracle(), MethodSpec::lla()}, quick_opts());
  const std::string csv = emit_report(rows, ReportFormat::Csv);
  const auto parsed = parse_report_csv(csv);
  CHECK(parsed == rows);
  CHECK(emit_report(parsed, ReportFormat::Csv) == csv);
}

TEST_CASE("single-row csv has a header and one line") {
  TableRow r;
  r.scenario = "n60_normal";
  r.n = 60;
  r.p = 10;
  r.k = 4;
  r.method = "oracle";
  r.ee = 0.25;
  r.pe = 1.0;
  r.c = 6.0;
  r.ic = 0.0;
  r.cp = 1.0;
  r.replicates = 3;
  const std::string csv = emit_report({r}, ReportFormat::Csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.rfind("scenario,n,p,k,method,EE,PE,C,IC,CP,replicates\n", 0) == 0);
}

TEST_CASE("markdown groups rows by scenario with one table per group") {
  TableRow r1;
  r1.scenario = "n60_normal";
  r1.n = 60;
  r1.p = 10;
  r1.k = 4;
  r1.method = "oracle";
  r1.cp = 1.0;
  r1.replicates = 3;
  TableRow r2 = r1;
  r2.method = "lla";
  r2.cp = 0.9939;
  TableRow r3 = r1;
  r3.scenario = "n80_t5";
  r3.n = 80;

  const std::string md = emit_report({r1, r2, r3}, ReportFormat::Markdown);
  // table lines = rows + header + separator per scenario group
  std::size_t table_lines = 0, pos = 0;
  std::istringstream in(md);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line.front() == '|') ++table_lines;
  (void)pos;
  CHECK(table_lines == 3 + 2 * 2);
  CHECK(md.find("99.39%") != std::string::npos);  // CP printed as percent, 2 decimals
  CHECK(md.find("### n60_normal") != std::string::npos);
  CHECK(md.find("### n80_t5") != std::string::npos);
}

TEST_CASE("normality helper sn2 by hand") {
  const Eigen::MatrixXd d11 = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  u[0] = 1.0;
  CHECK(normality_sn2(d11, u, 1.0, 0.8, 1) == Approx(1.25));
  CHECK(normality_sn2(d11, u, 1.0, 0.8, 2) == Approx(1.0 / 0.64));
}

TEST_CASE("normality diagnostic runs and validates inputs") {
  ScenarioConfig cfg;
  cfg.n = 120;
  cfg.p = 8;
  cfg.seed = 17;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  u[0] = 1.0;

  CHECK_THROWS_AS(normality_check(cfg, u, 0), std::invalid_argument);
  CHECK_THROWS_AS(normality_check(cfg, 2.0 * u, 10), std::invalid_argument);
  CHECK_THROWS_AS(normality_check(cfg, Eigen::VectorXd::Ones(3), 10), std::invalid_argument);

  NormalityOptions opts;
  opts.grid_points = 20;
  opts.threads = 2;
  const NormalityResult res = normality_check(cfg, u, 24, opts);
  CHECK(res.samples.size() + res.support_failures == 24);
  CHECK(res.ks_stat > 0.0);
  CHECK(res.ks_stat < 1.0);
  CHECK(res.gamma == Approx(2.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(res.sigma2 == 1.0);

  // deterministic across thread counts
  NormalityOptions serial = opts;
  serial.threads = 1;
  const NormalityResult res2 = normality_check(cfg, u, 24, serial);
  CHECK(res2.ks_stat == res.ks_stat);
  CHECK(res2.samples == res.samples);
}

TEST_CASE("method parsing") {
  CHECK(MethodSpec::parse("oracle", LossSpec::lad()).kind == MethodKind::Oracle);
  CHECK(MethodSpec::parse("lla", LossSpec::huber(1.0)).loss.kind == LossKind::Huber);
  CHECK(MethodSpec::parse("lasso-ls", LossSpec::lad()).loss.kind == LossKind::LeastSquares);
  CHECK(MethodSpec::parse("lasso-lad", LossSpec::lad()).kind == MethodKind::LassoLAD);
  CHECK_THROWS_AS(MethodSpec::parse("ridge", LossSpec::lad()), std::invalid_argument);
}

TEST_CASE("replicate dumps write one csv per replicate") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mest_dump_test";
  fs::remove_all(dir);

  ScenarioConfig cfg = small_scenario(2);
  RunOptions opts = quick_opts();
  opts.dump_dir = dir.string();
  run_scenario(cfg, {MethodSpec::oracle()}, opts);

  REQUIRE(fs::exists(dir / "replicate_00000.csv"));
  REQUIRE(fs::exists(dir / "replicate_00001.csv"));
  std::ifstream in(dir / "replicate_00000.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,y");
  int lines = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == cfg.n);

  // values round-trip at full precision
  const GeneratedData gen = gen_dataset(cfg, 0);
  std::ifstream in2(dir / "replicate_00000.csv");
  std::getline(in2, header);
  std::string first;
  std::getline(in2, first);
  const std::size_t last_comma = first.rfind(',');
  CHECK(std::stod(first.substr(last_comma + 1)) == gen.data.y[0]);
  fs::remove_all(dir);
}

TEST_CASE("holdout prediction error stays near the error variance") {
  ScenarioConfig cfg = small_scenario(4);
  cfg.n = 100;
  RunOptions opts = quick_opts();
  opts.holdout_pe = true;
  const auto rows = run_scenario(cfg, {MethodSpec::oracle()}, opts);
  CHECK(rows[0].pe == Approx(1.0).margin(0.5));
}
