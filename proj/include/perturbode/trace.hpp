#pragma once

#include <string>
#include <vector>

namespace perturbode {

enum class TerminationReason { tolerance_met, max_iters, diverged };

std::string to_string(TerminationReason reason);

struct TraceRow {
  long k = 0;
  double f_gap = 0.0;
  double grad_norm = 0.0;
  double lyapunov = 0.0;  // full value incl. growth prefactor; 0 for baselines
  double bound = 0.0;     // certified f-gap envelope, 0 when none is asserted
};

/// Per-iteration record of one scheme run. Rows are indexed k = 0,1,...
/// with f_gap clamped at zero (reference-solution noise only).
struct IterateTrace {
  std::vector<TraceRow> rows;
  TerminationReason reason = TerminationReason::max_iters;
  double wall_seconds = 0.0;
  bool lyapunov_monotone = true;  // scaled-bracket check, see schemes.hpp
  bool bound_asserted = false;    // true when the bound column is a live envelope
};

/// Header is exactly `k,f_gap,grad_norm,lyapunov,bound`. Output is
/// deterministic: identical traces serialize to identical bytes.
void write_trace_csv(const IterateTrace& trace, const std::string& path);
std::string trace_csv(const IterateTrace& trace);

struct RateFit {
  double rate = 0.0;       // per-iteration contraction of f_gap
  double r_squared = 0.0;
};

/// Least-squares slope of log(f_gap) over the trailing `tail_fraction` of
/// rows, exponentiated. Rows with f_gap <= 0 are dropped before fitting;
/// fewer than 20 usable tail rows is an error.
RateFit fit_rate(const IterateTrace& trace, double tail_fraction = 0.5);

/// Number of sign changes of f_gap(k+1)-f_gap(k), ignoring differences
/// below 1e-14*(1+f_gap(0)).
long oscillation_count(const IterateTrace& trace);

}  // namespace perturbode
