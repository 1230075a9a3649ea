#pragma once

#include "perturbode/objective.hpp"

#include <string>
#include <vector>

namespace perturbode {

struct ContinuousState {
  double t = 0.0;
  Vector x;  // position
  Vector v;  // velocity
};

struct ContinuousRunConfig {
  double delta1 = 0.0;  // gradient perturbation weight
  double delta2 = 0.0;  // gradient-correction (Hessian damping) weight
  double t_end = 1.0;
  double h = 1e-3;            // integrator step; clipped to hit t_end exactly
  long record_stride = 1;     // keep every record_stride-th step (plus endpoints)
};

struct ContinuousTrajectory {
  std::vector<ContinuousState> samples;  // always includes t = 0 and t = t_end
  bool reliable = true;                  // half-step re-run agreed at t_end
  double richardson_error = 0.0;         // relative end-state disagreement
};

/// Classical fixed-step RK4 on the damped second-order flow in phase space:
///   dx/dt = v
///   dv/dt = -2*sqrt(mu)*v - (1+delta1)*grad f(x) - delta2*hess f(x)*v.
/// The step count is round(t_end/h) so the endpoint lands exactly; a second
/// pass at half the step must agree at t_end within 1e-6 relative or the
/// trajectory is flagged unreliable. Requires has_hvp() when delta2 > 0.
/// Throws NumericalError (with the blow-up time) on non-finite states.
ContinuousTrajectory integrate(const Objective& f, const Vector& x0, const Vector& v0,
                               const ContinuousRunConfig& cfg);

/// Energy exp(sqrt(mu) t) * [ (1+delta1)(f(x)-f(x*))
///                            + ||v + sqrt(mu)(x-x*) + delta2 grad f(x)||^2 / 2 ].
double lyapunov_continuous(const Objective& f, const ContinuousState& state,
                           const Vector& x_star, double delta1, double delta2);

/// Extra decay exponent available when 0 < (sqrt(mu)/2) delta2 < delta1:
///   c1 = min{ 2 mu d2 (d1 - sqrt(mu) d2 / 2) / (1 + d1 + 3 mu d2^2),
///             sqrt(mu)/3, sqrt(mu) d1 / 3 }.
/// Throws UsageError naming the violated inequality.
double compute_c1(double mu, double delta1, double delta2);

struct ContinuousRateReport {
  bool holds = true;              // envelope + (when applicable) energy decrease
  double worst_margin = 0.0;      // max over samples of f_gap - bound (negative = slack)
  bool balanced = false;          // (sqrt(mu)/2) delta2 <= delta1
  bool envelope_asserted = true;  // false in the vacuous regime delta2^2 L >= 1
  bool lyapunov_monotone = true;  // only checked when balanced
  double worst_energy_increase = 0.0;
};

/// Checks the certified f-gap envelope along a trajectory: when
/// (sqrt(mu)/2) delta2 <= delta1 the bound is E(0) e^{-sqrt(mu) t}/(1+delta1)
/// and the energy must be non-increasing (tolerance 1e-7 E(0)); otherwise the
/// weaker envelope E(0) e^{-sqrt(mu) t (1 - delta2^2 L)} applies, asserted
/// only while delta2^2 L < 1. Bound tolerance is 1e-7 (1 + E(0)).
ContinuousRateReport verify_continuous_rate(const ContinuousTrajectory& trajectory,
                                            const Objective& f, const Vector& x_star,
                                            double delta1, double delta2);

/// CSV columns: t,f_gap,lyapunov,bound_thm1,bound_thm2 (0 when not asserted).
std::string continuous_trace_csv(const ContinuousTrajectory& trajectory, const Objective& f,
                                 const Vector& x_star, double delta1, double delta2);
void write_continuous_csv(const ContinuousTrajectory& trajectory, const Objective& f,
                          const Vector& x_star, double delta1, double delta2,
                          const std::string& path);

}  // namespace perturbode
