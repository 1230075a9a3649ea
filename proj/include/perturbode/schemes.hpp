#pragma once

#include "perturbode/objective.hpp"
#include "perturbode/trace.hpp"

#include <string>
#include <vector>

namespace perturbode {

enum class SchemeKind {
  implicit,             // backward Euler; each step is one prox solve
  symplectic,           // position-explicit, velocity-implicit Euler
  modified_symplectic,  // symplectic variant with NAG-SC momentum coefficient
  nag_sc,
  heavy_ball,
  gradient_descent,
};

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);
bool is_baseline(SchemeKind kind);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::symplectic;
  double delta1 = 0.0;  // gradient perturbation weight
  double delta2 = 0.0;  // gradient-correction perturbation weight
  double s = 0.0;       // step size
};

/// Two consecutive iterates plus their cached gradients. A fresh state has
/// x_prev == x_curr, so the first step of the two-iterate recursions reduces
/// to the damped gradient step  x_1 = x_0 - (1+delta1) s grad f(x_0) / denom.
struct DiscreteState {
  long k = 0;
  Vector x_curr;
  Vector x_prev;
  Vector grad_curr;  // grad f(x_curr)
  Vector grad_prev;  // grad f(x_prev)
};

DiscreteState make_initial_state(const Objective& f, const Vector& x0);

/// One step of the configured scheme. Exactly one new gradient evaluation
/// (at the produced iterate) for the explicit schemes; one prox solve for
/// the implicit scheme. Throws DivergenceError on non-finite or runaway
/// iterates (||x|| > 1e12 (1 + ||x_0||) is checked by run_scheme).
DiscreteState step(const Objective& f, const DiscreteState& state, const SchemeConfig& cfg);

///   x_{k+1} = x_k + (x_k - x_{k-1})/(1+2r) - (1+d1) s grad_k/(1+2r)
///             - d2 sqrt(s) (grad_k - grad_{k-1})/(1+2r),   r = sqrt(mu s).
DiscreteState step_symplectic(const Objective& f, const DiscreteState& state,
                              const SchemeConfig& cfg);

///   x_{k+1} = x_k + (1-r)/(1+r) (x_k - x_{k-1}) - (1+d1) s grad_k/(1+r)
///             - d2 sqrt(s) (grad_k - grad_{k-1})/(1-r);  requires r < 1.
DiscreteState step_modified_symplectic(const Objective& f, const DiscreteState& state,
                                       const SchemeConfig& cfg);

///   y_k = x_k + (x_k - x_{k-1})/(1+2r) + d2 sqrt(s) grad_k/(1+2r)
///   x_{k+1} = prox_{beta f}(y_k),  beta = sqrt(s)[(1+d1) sqrt(s) + d2]/(1+2r).
DiscreteState step_implicit(const Objective& f, const DiscreteState& state,
                            const SchemeConfig& cfg);

/// nag_sc:  y = x_k + (1-r)/(1+r) (x_k - x_{k-1});  x_{k+1} = y - s grad f(y).
/// heavy_ball: momentum ((1-r)/(1+r))^2 on (x_k - x_{k-1}) minus s grad_k.
/// gradient_descent: x_{k+1} = x_k - s grad_k.
DiscreteState step_baseline(const Objective& f, const DiscreteState& state,
                            const SchemeConfig& cfg);

/// Certified accelerated symplectic preset: s = 1/L, requiring
/// (1+delta1)/2 <= sqrt(L) delta2 < 1.
SchemeConfig make_symplectic_preset(double mu, double L, double delta1, double delta2);

/// Certified accelerated modified-symplectic preset: s = 1/(4L),
/// delta1 = sqrt(mu)/(2 sqrt(L) - sqrt(mu)), with delta2 restricted to
/// [1/(4 sqrt(L) - 2 sqrt(mu)), 1/(2 sqrt(L) - sqrt(mu))].
SchemeConfig make_modified_preset(double mu, double L, double delta2);

// ---------------------------------------------------------------------------
// Lyapunov energies. Each scheme has an energy E(k) = growth^k * B(k) whose
// decrease certifies the rate. The *_bracket functions return B(k); the
// lyapunov_* functions include the growth prefactor. v_k is always formed
// from stored iterates, v_k = (x_{k+1} - x_k)/sqrt(s) for the one-step-ahead
// forms and (x_k - x_{k-1})/sqrt(s) for the implicit form.
// ---------------------------------------------------------------------------

double lyapunov_growth(SchemeKind kind, double mu, double s);

double implicit_bracket(const Objective& f, const Vector& x_k, const Vector& v_k,
                        const Vector& x_star, double f_star, const SchemeConfig& cfg);
double lyapunov_implicit(const Objective& f, long k, const Vector& x_k, const Vector& v_k,
                         const Vector& x_star, const SchemeConfig& cfg);

double symplectic_bracket(const Objective& f, const Vector& x_k, const Vector& x_next,
                          const Vector& x_star, double f_star, const SchemeConfig& cfg);
double lyapunov_symplectic(const Objective& f, long k, const Vector& x_k, const Vector& x_next,
                           const Vector& x_star, const SchemeConfig& cfg);

double modified_bracket(const Objective& f, const Vector& x_k, const Vector& x_next,
                        const Vector& x_star, double f_star, const SchemeConfig& cfg);
double lyapunov_modified(const Objective& f, long k, const Vector& x_k, const Vector& x_next,
                         const Vector& x_star, const SchemeConfig& cfg);

// ---------------------------------------------------------------------------
// Parameter conditions
// ---------------------------------------------------------------------------

struct ConditionEntry {
  std::string id;
  bool satisfied = false;
  double slack = 0.0;  // left side minus right side; negative means satisfied
};

struct ConditionReport {
  SchemeKind kind = SchemeKind::symplectic;
  std::vector<ConditionEntry> entries;
  bool overall = true;
};

/// Evaluates the certification inequalities for the given scheme kind:
/// implicit: (sqrt(mu)/2) delta2 <= delta1 (any s > 0);
/// symplectic: the three step/perturbation inequalities incl. the long
/// decrease inequality; modified_symplectic: the scaled step bound, the
/// delta2 window and 1+delta1 >= 1/(1-sqrt(mu s)). Baselines have no
/// conditions. Boundary equalities pass within 1e-12 relative slack.
ConditionReport check_conditions(SchemeKind kind, double mu, double L, double delta1,
                                 double delta2, double s);

/// Simpler sufficient set for the symplectic scheme:
/// delta2 sqrt(s) < 1/L (strict) and
/// (sqrt(s)/2)(1+delta1) <= delta2 <= sqrt(s)(1+delta1).
ConditionReport sufficient_symplectic_conditions(double mu, double L, double delta1,
                                                 double delta2, double s);

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct StopRule {
  double tol_grad = 1e-6;
  long max_iters = 100000;
};

/// Runs the scheme from x0 until ||grad f(x_k)|| < tol_grad, the iteration
/// budget, or divergence. Rows carry (k, f_gap, grad norm, E(k), certified
/// bound); the bound column is live only when the scheme's conditions hold
/// (strictly, where the f-gap envelope demands it) and is 0 otherwise.
/// Lyapunov monotonicity is monitored on scaled brackets,
///   growth * B(k+1) <= B(k) * (1 + 1e-12),
/// ignoring pairs below the floating noise floor 1e-12 (1 + |f_star|).
IterateTrace run_scheme(const Objective& f, const Vector& x0, const SchemeConfig& cfg,
                        const StopRule& stop, const ReferenceSolution& ref);

}  // namespace perturbode
