// perturbode — experiment driver for perturbed accelerated-gradient dynamics.
//
// Subcommands:
//   run               one scheme on one problem, trace CSV out
//   sweep             the standard perturbation grid plus the NAG-SC baseline
//   spectral          per-coordinate contraction rates on a diagonal quadratic
//   continuous        RK4 integration of the perturbed flow, trace CSV out
//   check-conditions  certification inequalities for a scheme configuration
//   grad-check        finite-difference check of gradients and HVPs
//
// Exit codes for run/sweep: 0 all runs hit the gradient tolerance,
// 2 some run exhausted max_iters, 3 some run diverged.

#include <CLI11.hpp>

#include "perturbode/continuous.hpp"
#include "perturbode/experiment.hpp"
#include "perturbode/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace perturbode;

struct ProblemFlags {
  std::string problem = "quadratic";
  double mu = 1.0;
  double L = 100.0;
  std::string data;
  double reg = 1e-2;
  long synth_n = 20;
  long synth_m = 200;
  std::string label_policy = "sign";
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& flags) {
  cmd->add_option("--problem", flags.problem, "quadratic|logistic")
      ->check(CLI::IsMember({"quadratic", "logistic"}));
  cmd->add_option("--mu", flags.mu, "strong-convexity modulus (quadratic)");
  cmd->add_option("--L", flags.L, "smoothness constant (quadratic)");
  cmd->add_option("--data", flags.data, "LIBSVM file (logistic)");
  cmd->add_option("--reg", flags.reg, "l2 regularization (logistic)");
  cmd->add_option("--synth-n", flags.synth_n, "synthetic feature count");
  cmd->add_option("--synth-m", flags.synth_m, "synthetic sample count");
  cmd->add_option("--label-policy", flags.label_policy, "sign|strict")
      ->check(CLI::IsMember({"sign", "strict"}));
}

// Flags the user actually passed win over config-file values.
void apply_problem_overrides(CLI::App* cmd, const ProblemFlags& flags, ProblemSpec& spec) {
  if (cmd->count("--problem")) {
    spec.kind = flags.problem == "quadratic" ? ProblemSpec::Kind::quadratic
                                             : ProblemSpec::Kind::logistic;
  }
  if (cmd->count("--mu")) spec.mu = flags.mu;
  if (cmd->count("--L")) spec.L = flags.L;
  if (cmd->count("--data")) spec.data_path = flags.data;
  if (cmd->count("--reg")) spec.reg = flags.reg;
  if (cmd->count("--synth-n")) spec.synth_n = flags.synth_n;
  if (cmd->count("--synth-m")) spec.synth_m = flags.synth_m;
  if (cmd->count("--label-policy")) {
    spec.label_policy = flags.label_policy == "strict" ? LabelPolicy::strict : LabelPolicy::sign;
  }
}

ProblemSpec to_spec(const ProblemFlags& flags) {
  ProblemSpec spec;
  if (flags.problem == "quadratic") {
    spec.kind = ProblemSpec::Kind::quadratic;
    spec.mu = flags.mu;
    spec.L = flags.L;
  } else {
    spec.kind = ProblemSpec::Kind::logistic;
    spec.data_path = flags.data;
    spec.reg = flags.reg;
    spec.synth_n = flags.synth_n;
    spec.synth_m = flags.synth_m;
    spec.label_policy =
        flags.label_policy == "strict" ? LabelPolicy::strict : LabelPolicy::sign;
  }
  return spec;
}

int exit_code_for(const std::vector<VariantSummary>& summaries) {
  int code = 0;
  for (const auto& s : summaries) {
    if (s.reason == TerminationReason::diverged) {
      return 3;
    }
    if (s.reason == TerminationReason::max_iters) {
      code = 2;
    }
  }
  return code;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw UsageError("cannot open config " + path);
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return config_from_json_text(buffer.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbode: perturbed accelerated-gradient dynamics"};
  app.set_help_flag("--help", "print help");  // keep -h free for the step flag
  app.require_subcommand(1);

  // --- run ---
  auto* run_cmd = app.add_subcommand("run", "run one scheme and write its trace CSV");
  run_cmd->set_help_flag("--help", "print help");
  ProblemFlags run_problem;
  add_problem_flags(run_cmd, run_problem);
  std::string run_config_path;
  std::string run_scheme_name = "symplectic";
  double run_delta1 = 0.0, run_delta2 = 0.0, run_step = 0.0, run_tol = 1e-6;
  long run_max_iters = 100000;
  std::uint64_t run_seed = 0;
  bool run_allow_unverified = false;
  std::string run_out = "trace.csv";
  run_cmd->add_option("--config", run_config_path, "JSON config; flags override");
  run_cmd->add_option("--scheme", run_scheme_name,
                      "implicit|symplectic|modified-symplectic|nag-sc|heavy-ball|gradient-descent");
  run_cmd->add_option("--delta1", run_delta1, "gradient perturbation weight");
  run_cmd->add_option("--delta2", run_delta2, "gradient-correction perturbation weight");
  run_cmd->add_option("--step-size", run_step, "step size s (default 1/L)");
  run_cmd->add_option("--tol", run_tol, "gradient-norm stopping tolerance");
  run_cmd->add_option("--max-iters", run_max_iters, "iteration budget");
  run_cmd->add_option("--seed", run_seed, "synthetic data seed");
  run_cmd->add_flag("--allow-unverified", run_allow_unverified,
                    "run even if certification conditions fail");
  run_cmd->add_option("--out", run_out, "trace CSV path");

  // --- sweep ---
  auto* sweep_cmd =
      app.add_subcommand("sweep", "standard perturbation grid + NAG-SC baseline");
  sweep_cmd->set_help_flag("--help", "print help");
  ProblemFlags sweep_problem;
  add_problem_flags(sweep_cmd, sweep_problem);
  std::string sweep_config_path;
  double sweep_d1_hat = -1.0, sweep_d2_hat = -1.0, sweep_tol = 1e-6;
  long sweep_max_iters = 200000;
  std::uint64_t sweep_seed = 0;
  std::string sweep_out_dir = "sweep_out";
  sweep_cmd->add_option("--config", sweep_config_path, "JSON config; flags override");
  sweep_cmd->add_option("--delta1-hat", sweep_d1_hat,
                        "grid value for delta1 (default sqrt(mu*s))");
  sweep_cmd->add_option("--delta2-hat", sweep_d2_hat, "grid value for delta2 (default sqrt(s))");
  sweep_cmd->add_option("--tol", sweep_tol, "gradient-norm stopping tolerance");
  sweep_cmd->add_option("--max-iters", sweep_max_iters, "iteration budget");
  sweep_cmd->add_option("--seed", sweep_seed, "synthetic data seed");
  sweep_cmd->add_option("--out-dir", sweep_out_dir, "output directory");

  // --- spectral ---
  auto* spectral_cmd = app.add_subcommand(
      "spectral", "per-coordinate rates of the symplectic scheme (CSV on stdout)");
  spectral_cmd->set_help_flag("--help", "print help");
  double sp_mu = 1.0, sp_L = 100.0, sp_step = -1.0, sp_d1 = 0.0, sp_d2 = 0.0;
  spectral_cmd->add_option("--mu", sp_mu, "strong-convexity modulus");
  spectral_cmd->add_option("--L", sp_L, "smoothness constant");
  spectral_cmd->add_option("--step-size", sp_step, "step size s (default 1/L)");
  spectral_cmd->add_option("--delta1", sp_d1, "gradient perturbation weight");
  spectral_cmd->add_option("--delta2", sp_d2, "gradient-correction perturbation weight");

  // --- continuous ---
  auto* cont_cmd =
      app.add_subcommand("continuous", "integrate the perturbed flow, trace CSV out");
  cont_cmd->set_help_flag("--help", "print help");
  ProblemFlags cont_problem;
  add_problem_flags(cont_cmd, cont_problem);
  double cont_d1 = 0.0, cont_d2 = 0.0, cont_t_end = 8.0, cont_h = -1.0;
  long cont_stride = 100;
  std::uint64_t cont_seed = 0;
  std::string cont_out = "continuous.csv";
  cont_cmd->add_option("--delta1", cont_d1, "gradient perturbation weight");
  cont_cmd->add_option("--delta2", cont_d2, "gradient-correction perturbation weight");
  cont_cmd->add_option("--t-end", cont_t_end, "integration horizon");
  cont_cmd->add_option("--h", cont_h, "integrator step (default min(1e-3, 1/(100 L)))");
  cont_cmd->add_option("--record-stride", cont_stride, "sample every this many steps");
  cont_cmd->add_option("--seed", cont_seed, "synthetic data seed");
  cont_cmd->add_option("--out", cont_out, "trace CSV path");

  // --- check-conditions ---
  auto* check_cmd = app.add_subcommand("check-conditions", "certification inequalities");
  check_cmd->set_help_flag("--help", "print help");
  std::string check_scheme = "symplectic";
  double ck_mu = 1.0, ck_L = 100.0, ck_step = -1.0, ck_d1 = 0.0, ck_d2 = 0.0;
  check_cmd->add_option("--scheme", check_scheme, "scheme kind");
  check_cmd->add_option("--mu", ck_mu, "strong-convexity modulus");
  check_cmd->add_option("--L", ck_L, "smoothness constant");
  check_cmd->add_option("--step-size", ck_step, "step size s (default 1/L)");
  check_cmd->add_option("--delta1", ck_d1, "gradient perturbation weight");
  check_cmd->add_option("--delta2", ck_d2, "gradient-correction perturbation weight");

  // --- grad-check ---
  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference gradient/HVP check");
  grad_cmd->set_help_flag("--help", "print help");
  ProblemFlags grad_problem;
  add_problem_flags(grad_cmd, grad_problem);
  double grad_h = 1e-5;
  std::uint64_t grad_seed = 0;
  grad_cmd->add_option("--h", grad_h, "central-difference step");
  grad_cmd->add_option("--seed", grad_seed, "synthetic data seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      ExperimentConfig config;
      SchemeVariant variant;
      if (!run_config_path.empty()) {
        config = load_config_file(run_config_path);
        if (!config.variants.empty()) {
          variant = config.variants.front();
        }
      } else {
        config.problem = to_spec(run_problem);
        config.stop.tol_grad = run_tol;
        config.stop.max_iters = run_max_iters;
        config.seed = run_seed;
      }
      apply_problem_overrides(run_cmd, run_problem, config.problem);
      if (run_cmd->count("--seed")) config.seed = run_seed;
      if (run_cmd->count("--tol")) config.stop.tol_grad = run_tol;
      if (run_cmd->count("--max-iters")) config.stop.max_iters = run_max_iters;
      if (run_cmd->count("--scheme")) {
        variant.scheme.kind = scheme_kind_from_string(run_scheme_name);
      }
      if (run_cmd->count("--delta1")) variant.scheme.delta1 = run_delta1;
      if (run_cmd->count("--delta2")) variant.scheme.delta2 = run_delta2;
      if (run_cmd->count("--step-size")) variant.scheme.s = run_step;
      if (run_allow_unverified) variant.allow_unverified = true;

      const auto objective = build_objective(config.problem, config.seed);
      if (!(variant.scheme.s > 0.0)) {
        variant.scheme.s = 1.0 / objective->lipschitz();
      }
      if (!variant.allow_unverified && !is_baseline(variant.scheme.kind)) {
        const auto report =
            check_conditions(variant.scheme.kind, objective->mu(), objective->lipschitz(),
                             variant.scheme.delta1, variant.scheme.delta2, variant.scheme.s);
        if (!report.overall) {
          std::cerr << "configuration fails its certification conditions; "
                       "pass --allow-unverified to run it anyway\n";
          return 1;
        }
      }
      const ReferenceSolution ref = experiment_reference(config.problem, *objective);
      const Vector x0 = default_start(config.problem, *objective);
      const IterateTrace trace = run_scheme(*objective, x0, variant.scheme, config.stop, ref);
      write_trace_csv(trace, run_out);
      std::cerr << "wrote " << run_out << " (" << trace.rows.size() << " rows, "
                << to_string(trace.reason) << ")\n";
      if (trace.reason == TerminationReason::diverged) return 3;
      if (trace.reason == TerminationReason::max_iters) return 2;
      return 0;
    }

    if (sweep_cmd->parsed()) {
      ExperimentConfig config;
      if (!sweep_config_path.empty()) {
        config = load_config_file(sweep_config_path);
      } else {
        config.problem = to_spec(sweep_problem);
        config.stop.tol_grad = sweep_tol;
        config.stop.max_iters = sweep_max_iters;
        config.seed = sweep_seed;
        config.output_dir = sweep_out_dir;
      }
      apply_problem_overrides(sweep_cmd, sweep_problem, config.problem);
      if (sweep_cmd->count("--seed")) config.seed = sweep_seed;
      if (sweep_cmd->count("--tol")) config.stop.tol_grad = sweep_tol;
      if (sweep_cmd->count("--max-iters")) config.stop.max_iters = sweep_max_iters;
      if (sweep_cmd->count("--out-dir")) config.output_dir = sweep_out_dir;

      if (config.variants.empty()) {
        const auto objective = build_objective(config.problem, config.seed);
        const double L = objective->lipschitz();
        const double mu = objective->mu();
        const double s = 1.0 / L;
        const double d1 = sweep_cmd->count("--delta1-hat") ? sweep_d1_hat : std::sqrt(mu * s);
        const double d2 = sweep_cmd->count("--delta2-hat") ? sweep_d2_hat : std::sqrt(s);
        config.variants = standard_sweep_variants(mu, L, d1, d2);
      }
      const ExperimentResult result = run_experiment(config);
      std::cerr << "wrote " << result.summary_file << " and " << result.trace_files.size()
                << " trace files\n";
      return exit_code_for(result.summaries);
    }

    if (spectral_cmd->parsed()) {
      const double s = sp_step > 0.0 ? sp_step : 1.0 / sp_L;
      Vector eigenvalues(2);
      eigenvalues << sp_mu, sp_L;
      const QuadraticProblem problem(eigenvalues);
      const SchemeConfig cfg{SchemeKind::symplectic, sp_d1, sp_d2, s};
      std::printf("lambda,a,b,root1_re,root1_im,root2_re,root2_im,rho,regime,rate\n");
      for (Eigen::Index i = 0; i < problem.eigenvalues().size(); ++i) {
        const auto rec = build_recursion(problem.eigenvalues()[i], sp_mu, s, sp_d1, sp_d2);
        const auto rate = spectral_rate(rec);
        std::printf("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n", rec.lambda,
                    rec.a, rec.b, rate.root1.real(), rate.root1.imag(), rate.root2.real(),
                    rate.root2.imag(), rate.rho, rate.complex_regime ? "complex" : "real",
                    rate.rho * rate.rho);
      }
      std::printf("overall_rate,%.17g\n", worst_coordinate_rate(problem, cfg));
      return 0;
    }

    if (cont_cmd->parsed()) {
      ExperimentConfig config;
      config.problem = to_spec(cont_problem);
      config.seed = cont_seed;
      const auto objective = build_objective(config.problem, config.seed);
      ContinuousRunConfig cfg;
      cfg.delta1 = cont_d1;
      cfg.delta2 = cont_d2;
      cfg.t_end = cont_t_end;
      cfg.h = cont_h > 0.0 ? cont_h : std::min(1e-3, 1.0 / (100.0 * objective->lipschitz()));
      cfg.record_stride = cont_stride;
      const ReferenceSolution ref = experiment_reference(config.problem, *objective);
      const Vector x0 = default_start(config.problem, *objective);
      const Vector v0 = Vector::Zero(objective->dimension());
      const auto trajectory = integrate(*objective, x0, v0, cfg);
      write_continuous_csv(trajectory, *objective, ref.x_star, cont_d1, cont_d2, cont_out);
      std::cerr << "wrote " << cont_out << " (" << trajectory.samples.size() << " samples"
                << (trajectory.reliable ? "" : ", UNRELIABLE: half-step check failed") << ")\n";
      return trajectory.reliable ? 0 : 2;
    }

    if (check_cmd->parsed()) {
      const double s = ck_step > 0.0 ? ck_step : 1.0 / ck_L;
      const auto kind = scheme_kind_from_string(check_scheme);
      const auto report = check_conditions(kind, ck_mu, ck_L, ck_d1, ck_d2, s);
      std::printf("condition,satisfied,slack\n");
      for (const auto& entry : report.entries) {
        std::printf("%s,%s,%.17g\n", entry.id.c_str(), entry.satisfied ? "yes" : "no",
                    entry.slack);
      }
      std::printf("overall,%s,\n", report.overall ? "yes" : "no");
      return report.overall ? 0 : 1;
    }

    if (grad_cmd->parsed()) {
      ExperimentConfig config;
      config.problem = to_spec(grad_problem);
      config.seed = grad_seed;
      const auto objective = build_objective(config.problem, config.seed);
      Vector x = Vector::Constant(objective->dimension(), 0.5);
      const auto report = finite_difference_check(*objective, x, grad_h);
      std::printf("max_rel_err_grad,%.17g\nmax_rel_err_hvp,%.17g\n", report.max_rel_err_grad,
                  report.max_rel_err_hvp);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
