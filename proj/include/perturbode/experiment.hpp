#pragma once

#include "perturbode/problems.hpp"
#include "perturbode/schemes.hpp"
#include "perturbode/trace.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace perturbode {

struct ProblemSpec {
  enum class Kind { quadratic, logistic };
  Kind kind = Kind::quadratic;
  // quadratic
  double mu = 1.0;
  double L = 100.0;
  // logistic: a LIBSVM file when data_path is set, a synthetic instance otherwise
  std::string data_path;
  Eigen::Index synth_n = 20;
  Eigen::Index synth_m = 200;
  double reg = 1e-2;
  LabelPolicy label_policy = LabelPolicy::sign;
};

struct SchemeVariant {
  std::string label;
  SchemeConfig scheme;
  bool allow_unverified = false;  // run even if the certification conditions fail
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<SchemeVariant> variants;
  StopRule stop;  // tol_grad defaults to 1e-6
  std::string output_dir = ".";
  std::uint64_t seed = 0;  // drives the synthetic data generator
};

/// JSON mirror of ExperimentConfig (the document the CLI accepts via
/// --config; CLI flags override individual fields).
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

std::unique_ptr<Objective> build_objective(const ProblemSpec& spec, std::uint64_t seed);
Vector default_start(const ProblemSpec& spec, const Objective& f);

/// Reference used for f-gaps: analytic for quadratics, a tol=1e-8 solve for
/// logistic problems. File-backed datasets cache the solve next to the data
/// (<path>.refsol.json, keyed by file hash and reg); the certified gradient
/// norm is re-verified on every load.
ReferenceSolution experiment_reference(const ProblemSpec& spec, const Objective& f);

struct VariantSummary {
  std::string label;
  long iterations = 0;  // trace length (rows)
  double fitted_rate = 0.0;
  double r_squared = 0.0;
  long oscillations = 0;
  TerminationReason reason = TerminationReason::max_iters;
};

struct ExperimentResult {
  std::vector<VariantSummary> summaries;
  std::vector<std::string> trace_files;
  std::string summary_file;
};

/// Runs every variant, one CSV per variant plus summary.csv. Variants whose
/// certification conditions fail must be flagged allow_unverified or the
/// config is rejected. Deterministic: same config and seed give byte-equal
/// outputs. PERTURBODE_OUT_DIR overrides output_dir when set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// The standard comparison grid: perturbations off/on in all four
/// combinations (0,0), (d1,0), (0,d2), (d1,d2) for the symplectic scheme at
/// step size s = 1/L, plus the nag_sc baseline. The two arms that violate
/// the certification conditions are flagged allow_unverified.
std::vector<SchemeVariant> standard_sweep_variants(double mu, double L, double delta1_hat,
                                                   double delta2_hat);

}  // namespace perturbode
