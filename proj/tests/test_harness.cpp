#include <doctest.h>

#include "perturbode/experiment.hpp"
#include "perturbode/trace.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace perturbode;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE(file);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("perturbode_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

IterateTrace geometric_trace(double rate, long rows) {
  IterateTrace trace;
  double gap = 1.0;
  for (long k = 0; k < rows; ++k) {
    trace.rows.push_back({k, gap, 0.0, 0.0, 0.0});
    gap *= rate;
  }
  return trace;
}

}  // namespace

TEST_CASE("rate fitting") {
  SUBCASE("exact geometric decay") {
    const auto fit = fit_rate(geometric_trace(0.9, 100), 0.5);
    CHECK(fit.rate == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero rows are dropped before fitting") {
    auto trace = geometric_trace(0.9, 120);
    for (long k = 0; k < 20; ++k) {
      trace.rows.push_back({120 + k, 0.0, 0.0, 0.0, 0.0});
    }
    const auto fit = fit_rate(trace, 0.5);
    CHECK(fit.rate == doctest::Approx(0.9).epsilon(1e-12));
  }
  SUBCASE("insufficient data is an error") {
    CHECK_THROWS_AS(fit_rate(geometric_trace(0.9, 30), 0.5), NumericalError);
  }
}

TEST_CASE("oscillation counting") {
  SUBCASE("monotone trace") {
    CHECK(oscillation_count(geometric_trace(0.9, 50)) == 0);
  }
  SUBCASE("strictly alternating trace of length 11") {
    IterateTrace trace;
    for (long k = 0; k < 11; ++k) {
      trace.rows.push_back({k, k % 2 == 0 ? 1.0 : 2.0, 0.0, 0.0, 0.0});
    }
    CHECK(oscillation_count(trace) == 9);
  }
  SUBCASE("differences below the noise threshold are ignored") {
    IterateTrace trace;
    trace.rows.push_back({0, 1.0, 0.0, 0.0, 0.0});
    trace.rows.push_back({1, 1.0 + 1e-16, 0.0, 0.0, 0.0});
    trace.rows.push_back({2, 0.5, 0.0, 0.0, 0.0});
    trace.rows.push_back({3, 0.25, 0.0, 0.0, 0.0});
    CHECK(oscillation_count(trace) == 0);
  }
  SUBCASE("too short") {
    IterateTrace trace;
    trace.rows.push_back({0, 1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(oscillation_count(trace), UsageError);
  }
}

TEST_CASE("trace CSV format") {
  IterateTrace trace = geometric_trace(0.5, 3);
  const std::string text = trace_csv(trace);
  CHECK(text.rfind("k,f_gap,grad_norm,lyapunov,bound\n", 0) == 0);
  CHECK(text == trace_csv(trace));  // deterministic bytes
}

TEST_CASE("correction term suppresses oscillations on the quadratic") {
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::quadratic;
  config.output_dir = temp_dir("osc");
  config.stop.max_iters = 200000;
  const double s = 0.01;
  SchemeVariant with_d1;
  with_d1.label = "d1_only";
  with_d1.scheme = SchemeConfig{SchemeKind::symplectic, 0.1, 0.0, s};
  with_d1.allow_unverified = true;
  SchemeVariant with_both;
  with_both.label = "d1_d2";
  with_both.scheme = SchemeConfig{SchemeKind::symplectic, 0.1, 2.0 * 0.1 / 3.0, s};
  config.variants = {with_d1, with_both};
  const auto result = run_experiment(config);
  REQUIRE(result.summaries.size() == 2);
  CHECK(result.summaries[0].oscillations > result.summaries[1].oscillations);
}

TEST_CASE("standard sweep emits five deterministic traces") {
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::quadratic;
  config.problem.mu = 1.0;
  config.problem.L = 100.0;
  config.stop.max_iters = 200000;
  config.variants = standard_sweep_variants(1.0, 100.0, 0.1, 0.1);
  config.output_dir = temp_dir("sweep_a");
  const auto result = run_experiment(config);
  REQUIRE(result.trace_files.size() == 5);
  REQUIRE(result.summaries.size() == 5);

  // perturbed-on-both beats unperturbed to tolerance
  CHECK(result.summaries[3].iterations < result.summaries[0].iterations);
  for (const auto& summary : result.summaries) {
    CHECK(summary.reason == TerminationReason::tolerance_met);
  }

  // the unperturbed fitted rate recovers the spectral prediction 1/1.2
  CHECK(std::abs(result.summaries[0].fitted_rate - 1.0 / 1.2) <= 0.02 / 1.2);

  // summary iteration counts equal trace lengths (rows, excluding header)
  for (std::size_t i = 0; i < result.trace_files.size(); ++i) {
    const std::string text = slurp(result.trace_files[i]);
    const long lines = static_cast<long>(std::count(text.begin(), text.end(), '\n'));
    CHECK(lines - 1 == result.summaries[i].iterations);
  }

  // identical config and seed give byte-identical outputs
  config.output_dir = temp_dir("sweep_b");
  const auto again = run_experiment(config);
  for (std::size_t i = 0; i < result.trace_files.size(); ++i) {
    CHECK(slurp(result.trace_files[i]) == slurp(again.trace_files[i]));
  }
  CHECK(slurp(result.summary_file) == slurp(again.summary_file));
}

TEST_CASE("unverified variants must be flagged") {
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::quadratic;
  config.output_dir = temp_dir("flag");
  SchemeVariant bad;
  bad.label = "unperturbed";
  bad.scheme = SchemeConfig{SchemeKind::symplectic, 0.0, 0.0, 0.01};
  bad.allow_unverified = false;
  config.variants = {bad};
  CHECK_THROWS_AS(run_experiment(config), UsageError);

  config.variants[0].allow_unverified = true;
  CHECK_NOTHROW(run_experiment(config));
}

TEST_CASE("empty scheme list is rejected") {
  ExperimentConfig config;
  config.output_dir = temp_dir("empty");
  CHECK_THROWS_AS(run_experiment(config), UsageError);
}

TEST_CASE("config JSON round-trip reproduces runs") {
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::logistic;
  config.problem.synth_n = 6;
  config.problem.synth_m = 30;
  config.problem.reg = 0.02;
  config.seed = 11;
  config.stop.tol_grad = 1e-5;
  config.stop.max_iters = 50000;
  config.variants = standard_sweep_variants(0.02, 0.6, 0.05, 0.1);
  config.output_dir = temp_dir("json_a");

  const auto reloaded = config_from_json_text(config_to_json_text(config));
  CHECK(config_to_json_text(reloaded) == config_to_json_text(config));

  // the logistic L depends on the generated data; rebuild variants per run
  ExperimentConfig direct = config;
  ExperimentConfig via_json = reloaded;
  via_json.output_dir = temp_dir("json_b");
  const auto first = run_experiment(direct);
  const auto second = run_experiment(via_json);
  REQUIRE(first.trace_files.size() == second.trace_files.size());
  for (std::size_t i = 0; i < first.trace_files.size(); ++i) {
    CHECK(slurp(first.trace_files[i]) == slurp(second.trace_files[i]));
  }
}

TEST_CASE("asserted bounds dominate emitted rows") {
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::quadratic;
  config.output_dir = temp_dir("bound");
  SchemeVariant certified;
  certified.label = "certified";
  certified.scheme = SchemeConfig{SchemeKind::symplectic, 0.1, 2.0 * 0.1 / 3.0, 0.01};
  config.variants = {certified};
  const auto result = run_experiment(config);

  const std::string text = slurp(result.trace_files[0]);
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  double e0 = -1.0;
  while (std::getline(lines, line)) {
    double k, f_gap, grad, lyap, bound;
    REQUIRE(std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg", &k, &f_gap, &grad, &lyap,
                        &bound) == 5);
    if (e0 < 0.0) e0 = lyap;
    CHECK(bound > 0.0);
    CHECK(f_gap <= bound + 1e-10 * e0);
  }
}

TEST_CASE("synthetic logistic sweep reproduces the qualitative orderings") {
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::logistic;
  config.problem.synth_n = 20;
  config.problem.synth_m = 200;
  config.problem.reg = 1e-2;
  config.seed = 7;
  config.stop.max_iters = 400000;
  config.output_dir = temp_dir("logistic_sweep");
  const auto objective = build_objective(config.problem, config.seed);
  const double L = objective->lipschitz();
  const double s = 1.0 / L;
  config.variants =
      standard_sweep_variants(objective->mu(), L, std::sqrt(objective->mu() * s),
                              std::sqrt(s));
  const auto result = run_experiment(config);
  REQUIRE(result.summaries.size() == 5);
  // layout: [0]=(0,0), [1]=(d1,0), [2]=(0,d2), [3]=(d1,d2), [4]=nag_sc
  CHECK(result.summaries[3].iterations < result.summaries[0].iterations);
  CHECK(result.summaries[1].oscillations > result.summaries[3].oscillations);
}

TEST_CASE("output directory env override") {
  const std::string override_dir = temp_dir("env_override");
  setenv("PERTURBODE_OUT_DIR", override_dir.c_str(), 1);
  ExperimentConfig config;
  config.problem.kind = ProblemSpec::Kind::quadratic;
  config.output_dir = temp_dir("env_ignored");
  SchemeVariant variant;
  variant.label = "baseline";
  variant.scheme = SchemeConfig{SchemeKind::nag_sc, 0.0, 0.0, 0.01};
  config.variants = {variant};
  const auto result = run_experiment(config);
  unsetenv("PERTURBODE_OUT_DIR");
  CHECK(result.trace_files[0].rfind(override_dir, 0) == 0);
  CHECK(std::filesystem::exists(result.trace_files[0]));
}

TEST_CASE("file-backed reference solutions are cached and re-verified") {
  const std::string dir = temp_dir("refsol");
  const std::string data_path = dir + "/tiny.libsvm";
  {
    std::ofstream out(data_path);
    out << to_libsvm(synth_logistic(4, 12, 0.05, 5));
  }
  ProblemSpec spec;
  spec.kind = ProblemSpec::Kind::logistic;
  spec.data_path = data_path;
  spec.reg = 0.05;

  const auto objective = build_objective(spec, 0);
  const auto first = experiment_reference(spec, *objective);
  CHECK(std::filesystem::exists(data_path + ".refsol.json"));
  const auto second = experiment_reference(spec, *objective);
  CHECK(first.f_star == second.f_star);
  CHECK((first.x_star - second.x_star).norm() == 0.0);
  CHECK(first.certified_grad_norm < 1e-8);

  // a corrupted cache is ignored, not trusted
  {
    std::ofstream out(data_path + ".refsol.json");
    out << "{ not json";
  }
  const auto third = experiment_reference(spec, *objective);
  CHECK(std::abs(third.f_star - first.f_star) <= 1e-14 * (1.0 + std::abs(first.f_star)));

  // a cache for different data (stale hash) is re-solved, not reused
  {
    std::ofstream out(data_path, std::ios::app);
    out << "+1 1:0.25\n";
  }
  const auto rebuilt = build_objective(spec, 0);
  const auto fourth = experiment_reference(spec, *rebuilt);
  CHECK(rebuilt->gradient(fourth.x_star).norm() < 1e-8);
}
