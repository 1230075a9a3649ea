#include "perturbode/schemes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace perturbode {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::implicit:
      return "implicit";
    case SchemeKind::symplectic:
      return "symplectic";
    case SchemeKind::modified_symplectic:
      return "modified_symplectic";
    case SchemeKind::nag_sc:
      return "nag_sc";
    case SchemeKind::heavy_ball:
      return "heavy_ball";
    case SchemeKind::gradient_descent:
      return "gradient_descent";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "implicit") return SchemeKind::implicit;
  if (name == "symplectic") return SchemeKind::symplectic;
  if (name == "modified_symplectic" || name == "modified-symplectic")
    return SchemeKind::modified_symplectic;
  if (name == "nag_sc" || name == "nag-sc") return SchemeKind::nag_sc;
  if (name == "heavy_ball" || name == "heavy-ball") return SchemeKind::heavy_ball;
  if (name == "gradient_descent" || name == "gradient-descent" || name == "gd")
    return SchemeKind::gradient_descent;
  throw UsageError("unknown scheme '" + name + "'");
}

bool is_baseline(SchemeKind kind) {
  return kind == SchemeKind::nag_sc || kind == SchemeKind::heavy_ball ||
         kind == SchemeKind::gradient_descent;
}

namespace {

void require_step_size(const SchemeConfig& cfg) {
  if (!(cfg.s > 0.0)) {
    throw UsageError("scheme step size must be positive");
  }
  if (cfg.delta1 < 0.0 || cfg.delta2 < 0.0) {
    throw UsageError("perturbation weights must be nonnegative");
  }
}

void require_modified_step(double mu, double s) {
  if (!(std::sqrt(mu * s) < 1.0)) {
    throw UsageError("modified symplectic scheme needs sqrt(mu*s) < 1");
  }
}

DiscreteState advance(const Objective& f, const DiscreteState& state, Vector x_next) {
  if (!x_next.allFinite()) {
    throw DivergenceError("non-finite iterate at k = " + std::to_string(state.k + 1),
                          state.k + 1);
  }
  DiscreteState next;
  next.k = state.k + 1;
  next.grad_curr = f.gradient(x_next);
  next.x_prev = state.x_curr;
  next.grad_prev = state.grad_curr;
  next.x_curr = std::move(x_next);
  return next;
}

}  // namespace

DiscreteState make_initial_state(const Objective& f, const Vector& x0) {
  if (x0.size() != f.dimension()) {
    throw UsageError("initial point dimension mismatch");
  }
  DiscreteState state;
  state.k = 0;
  state.x_curr = x0;
  state.x_prev = x0;
  state.grad_curr = f.gradient(x0);
  state.grad_prev = state.grad_curr;
  return state;
}

DiscreteState step_symplectic(const Objective& f, const DiscreteState& state,
                              const SchemeConfig& cfg) {
  require_step_size(cfg);
  const double root = std::sqrt(f.mu() * cfg.s);
  const double denom = 1.0 + 2.0 * root;
  Vector x_next = state.x_curr + (state.x_curr - state.x_prev) / denom -
                  ((1.0 + cfg.delta1) * cfg.s / denom) * state.grad_curr -
                  (cfg.delta2 * std::sqrt(cfg.s) / denom) * (state.grad_curr - state.grad_prev);
  return advance(f, state, std::move(x_next));
}

DiscreteState step_modified_symplectic(const Objective& f, const DiscreteState& state,
                                       const SchemeConfig& cfg) {
  require_step_size(cfg);
  require_modified_step(f.mu(), cfg.s);
  const double root = std::sqrt(f.mu() * cfg.s);
  Vector x_next = state.x_curr +
                  ((1.0 - root) / (1.0 + root)) * (state.x_curr - state.x_prev) -
                  ((1.0 + cfg.delta1) * cfg.s / (1.0 + root)) * state.grad_curr -
                  (cfg.delta2 * std::sqrt(cfg.s) / (1.0 - root)) *
                      (state.grad_curr - state.grad_prev);
  return advance(f, state, std::move(x_next));
}

DiscreteState step_implicit(const Objective& f, const DiscreteState& state,
                            const SchemeConfig& cfg) {
  require_step_size(cfg);
  const double root = std::sqrt(f.mu() * cfg.s);
  const double denom = 1.0 + 2.0 * root;
  const double sqrt_s = std::sqrt(cfg.s);
  const double beta = sqrt_s * ((1.0 + cfg.delta1) * sqrt_s + cfg.delta2) / denom;
  Vector y = state.x_curr + (state.x_curr - state.x_prev) / denom +
             (cfg.delta2 * sqrt_s / denom) * state.grad_curr;
  return advance(f, state, proximal(f, y, beta));
}

DiscreteState step_baseline(const Objective& f, const DiscreteState& state,
                            const SchemeConfig& cfg) {
  require_step_size(cfg);
  const double root = std::sqrt(f.mu() * cfg.s);
  const double momentum = (1.0 - root) / (1.0 + root);
  Vector x_next;
  switch (cfg.kind) {
    case SchemeKind::nag_sc: {
      const Vector y = state.x_curr + momentum * (state.x_curr - state.x_prev);
      x_next = y - cfg.s * f.gradient(y);
      break;
    }
    case SchemeKind::heavy_ball:
      x_next = state.x_curr + momentum * momentum * (state.x_curr - state.x_prev) -
               cfg.s * state.grad_curr;
      break;
    case SchemeKind::gradient_descent:
      x_next = state.x_curr - cfg.s * state.grad_curr;
      break;
    default:
      throw UsageError("step_baseline called with a non-baseline scheme");
  }
  return advance(f, state, std::move(x_next));
}

DiscreteState step(const Objective& f, const DiscreteState& state, const SchemeConfig& cfg) {
  switch (cfg.kind) {
    case SchemeKind::implicit:
      return step_implicit(f, state, cfg);
    case SchemeKind::symplectic:
      return step_symplectic(f, state, cfg);
    case SchemeKind::modified_symplectic:
      return step_modified_symplectic(f, state, cfg);
    default:
      return step_baseline(f, state, cfg);
  }
}

SchemeConfig make_symplectic_preset(double mu, double L, double delta1, double delta2) {
  if (!(mu > 0.0) || !(L >= mu)) {
    throw UsageError("preset needs 0 < mu <= L");
  }
  const double scaled = std::sqrt(L) * delta2;
  if (!((1.0 + delta1) / 2.0 <= scaled)) {
    throw UsageError("preset needs (1+delta1)/2 <= sqrt(L)*delta2, got " +
                     std::to_string((1.0 + delta1) / 2.0) + " vs " + std::to_string(scaled));
  }
  if (!(scaled < 1.0)) {
    throw UsageError("preset needs sqrt(L)*delta2 < 1, got " + std::to_string(scaled));
  }
  return SchemeConfig{SchemeKind::symplectic, delta1, delta2, 1.0 / L};
}

SchemeConfig make_modified_preset(double mu, double L, double delta2) {
  if (!(mu > 0.0) || !(L >= mu)) {
    throw UsageError("preset needs 0 < mu <= L");
  }
  const double span = 2.0 * std::sqrt(L) - std::sqrt(mu);
  const double lo = 1.0 / (2.0 * span);
  const double hi = 1.0 / span;
  if (delta2 < lo || delta2 > hi) {
    throw UsageError("preset needs delta2 in [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "], got " + std::to_string(delta2));
  }
  return SchemeConfig{SchemeKind::modified_symplectic, std::sqrt(mu) / span, delta2,
                      1.0 / (4.0 * L)};
}

double lyapunov_growth(SchemeKind kind, double mu, double s) {
  const double root = std::sqrt(mu * s);
  switch (kind) {
    case SchemeKind::implicit:
      return 1.0 + root;
    case SchemeKind::symplectic:
      return 1.0 + root / (1.0 + root);
    case SchemeKind::modified_symplectic:
      return 1.0 + root;
    default:
      return 1.0;
  }
}

namespace {

double growth_pow(double growth, long k) {
  return static_cast<double>(
      std::pow(static_cast<long double>(growth), static_cast<long double>(k)));
}

double implicit_bracket_grad(const Objective& f, const Vector& x_k, const Vector& grad_k,
                             const Vector& v_k, const Vector& x_star, double f_star,
                             const SchemeConfig& cfg) {
  Vector w = v_k + std::sqrt(f.mu()) * (x_k - x_star);
  if (cfg.delta2 != 0.0) {
    w += cfg.delta2 * grad_k;
  }
  return (1.0 + cfg.delta1) * (f.value(x_k) - f_star) + 0.5 * w.squaredNorm();
}

double symplectic_bracket_grad(const Objective& f, const Vector& x_k, const Vector& grad_k,
                               const Vector& x_next, const Vector& x_star, double f_star,
                               const SchemeConfig& cfg) {
  const double sqrt_s = std::sqrt(cfg.s);
  const Vector v_k = (x_next - x_k) / sqrt_s;
  const Vector w = v_k + std::sqrt(f.mu()) * (x_next - x_star) + cfg.delta2 * grad_k;
  const double value_part =
      f.value(x_k) - f_star - 0.5 * cfg.delta2 * sqrt_s * grad_k.squaredNorm();
  return (1.0 + cfg.delta1) * value_part + 0.5 * w.squaredNorm();
}

double modified_bracket_grad(const Objective& f, const Vector& x_k, const Vector& grad_k,
                             const Vector& x_next, const Vector& x_star, double f_star,
                             const SchemeConfig& cfg) {
  require_modified_step(f.mu(), cfg.s);
  const double root = std::sqrt(f.mu() * cfg.s);
  const double sqrt_s = std::sqrt(cfg.s);
  const double shrink = 1.0 - root;
  const Vector v_k = (x_next - x_k) / sqrt_s;
  const Vector w =
      v_k + (std::sqrt(f.mu()) / shrink) * (x_next - x_star) + (cfg.delta2 / shrink) * grad_k;
  const double value_part =
      f.value(x_k) - f_star - (cfg.delta2 * sqrt_s / (2.0 * shrink)) * grad_k.squaredNorm();
  return ((1.0 + cfg.delta1) / shrink) * value_part + 0.5 * w.squaredNorm();
}

}  // namespace

double implicit_bracket(const Objective& f, const Vector& x_k, const Vector& v_k,
                        const Vector& x_star, double f_star, const SchemeConfig& cfg) {
  const Vector grad = cfg.delta2 != 0.0 ? f.gradient(x_k) : Vector();
  Vector w = v_k + std::sqrt(f.mu()) * (x_k - x_star);
  if (cfg.delta2 != 0.0) {
    w += cfg.delta2 * grad;
  }
  return (1.0 + cfg.delta1) * (f.value(x_k) - f_star) + 0.5 * w.squaredNorm();
}

double lyapunov_implicit(const Objective& f, long k, const Vector& x_k, const Vector& v_k,
                         const Vector& x_star, const SchemeConfig& cfg) {
  return growth_pow(lyapunov_growth(SchemeKind::implicit, f.mu(), cfg.s), k) *
         implicit_bracket(f, x_k, v_k, x_star, f.value(x_star), cfg);
}

double symplectic_bracket(const Objective& f, const Vector& x_k, const Vector& x_next,
                          const Vector& x_star, double f_star, const SchemeConfig& cfg) {
  return symplectic_bracket_grad(f, x_k, f.gradient(x_k), x_next, x_star, f_star, cfg);
}

double lyapunov_symplectic(const Objective& f, long k, const Vector& x_k, const Vector& x_next,
                           const Vector& x_star, const SchemeConfig& cfg) {
  return growth_pow(lyapunov_growth(SchemeKind::symplectic, f.mu(), cfg.s), k) *
         symplectic_bracket(f, x_k, x_next, x_star, f.value(x_star), cfg);
}

double modified_bracket(const Objective& f, const Vector& x_k, const Vector& x_next,
                        const Vector& x_star, double f_star, const SchemeConfig& cfg) {
  return modified_bracket_grad(f, x_k, f.gradient(x_k), x_next, x_star, f_star, cfg);
}

double lyapunov_modified(const Objective& f, long k, const Vector& x_k, const Vector& x_next,
                         const Vector& x_star, const SchemeConfig& cfg) {
  return growth_pow(lyapunov_growth(SchemeKind::modified_symplectic, f.mu(), cfg.s), k) *
         modified_bracket(f, x_k, x_next, x_star, f.value(x_star), cfg);
}

namespace {

constexpr double kConditionSlackTol = 1e-12;

ConditionEntry make_entry(std::string id, double lhs, double rhs) {
  ConditionEntry entry;
  entry.id = std::move(id);
  entry.slack = lhs - rhs;
  entry.satisfied = entry.slack <= kConditionSlackTol * (1.0 + std::abs(lhs) + std::abs(rhs));
  return entry;
}

void finish(ConditionReport& report) {
  report.overall = true;
  for (const auto& entry : report.entries) {
    report.overall = report.overall && entry.satisfied;
  }
}

}  // namespace

ConditionReport check_conditions(SchemeKind kind, double mu, double L, double delta1,
                                 double delta2, double s) {
  if (!(mu > 0.0) || !(L >= mu) || !(s > 0.0)) {
    throw UsageError("check_conditions needs 0 < mu <= L and s > 0");
  }
  ConditionReport report;
  report.kind = kind;
  const double root = std::sqrt(mu * s);
  const double sqrt_s = std::sqrt(s);
  switch (kind) {
    case SchemeKind::implicit: {
      report.entries.push_back(make_entry("delta2_nonnegative", 0.0, delta2));
      report.entries.push_back(
          make_entry("half_sqrt_mu_delta2_le_delta1", 0.5 * std::sqrt(mu) * delta2, delta1));
      break;
    }
    case SchemeKind::symplectic: {
      report.entries.push_back(make_entry("corr_step_le_inv_L", delta2 * sqrt_s, 1.0 / L));
      report.entries.push_back(
          make_entry("corr_le_scaled_grad", delta2, sqrt_s * (1.0 + delta1)));
      const double q = root / (1.0 + root);
      const double lhs = q * delta2 * delta2 -
                         delta2 * sqrt_s * (1.0 + delta1) * (q + 2.0) +
                         (1.0 + delta1) * (1.0 + delta1) * s - q * delta1 / L +
                         (2.0 * mu * sqrt_s / ((1.0 + root) * L)) *
                             (delta2 - sqrt_s * (1.0 + delta1));
      report.entries.push_back(make_entry("decrease_inequality", lhs, 0.0));
      break;
    }
    case SchemeKind::modified_symplectic: {
      require_modified_step(mu, s);
      report.entries.push_back(
          make_entry("corr_step_le_inv_L_scaled", delta2 * sqrt_s / (1.0 - root), 1.0 / L));
      report.entries.push_back(
          make_entry("corr_window_lower", 0.5 * sqrt_s * (1.0 + delta1), delta2));
      report.entries.push_back(
          make_entry("corr_window_upper", delta2, sqrt_s * (1.0 + delta1)));
      report.entries.push_back(
          make_entry("grad_weight_floor", 1.0 / (1.0 - root), 1.0 + delta1));
      break;
    }
    default:
      break;  // baselines carry no certification conditions
  }
  finish(report);
  return report;
}

ConditionReport sufficient_symplectic_conditions(double mu, double L, double delta1,
                                                 double delta2, double s) {
  if (!(mu > 0.0) || !(L >= mu) || !(s > 0.0)) {
    throw UsageError("sufficient_symplectic_conditions needs 0 < mu <= L and s > 0");
  }
  ConditionReport report;
  report.kind = SchemeKind::symplectic;
  const double sqrt_s = std::sqrt(s);
  ConditionEntry strict = make_entry("corr_step_lt_inv_L", delta2 * sqrt_s, 1.0 / L);
  strict.satisfied = delta2 * sqrt_s < 1.0 / L;  // strict: the boundary does not count
  report.entries.push_back(strict);
  report.entries.push_back(
      make_entry("corr_window_lower", 0.5 * sqrt_s * (1.0 + delta1), delta2));
  report.entries.push_back(make_entry("corr_window_upper", delta2, sqrt_s * (1.0 + delta1)));
  finish(report);
  return report;
}

namespace {

struct BoundSpec {
  bool asserted = false;
  double coefficient = 0.0;  // bound(k) = coefficient * growth^{-k}
};

BoundSpec bound_for(const Objective& f, const SchemeConfig& cfg, double bracket0) {
  BoundSpec spec;
  const double L = f.lipschitz();
  const double sqrt_s = std::sqrt(cfg.s);
  switch (cfg.kind) {
    case SchemeKind::implicit: {
      if (check_conditions(cfg.kind, f.mu(), L, cfg.delta1, cfg.delta2, cfg.s).overall) {
        spec.asserted = true;
        spec.coefficient = bracket0 / (1.0 + cfg.delta1);
      }
      break;
    }
    case SchemeKind::symplectic: {
      const double drag = L * cfg.delta2 * sqrt_s;
      if (drag < 1.0 &&
          check_conditions(cfg.kind, f.mu(), L, cfg.delta1, cfg.delta2, cfg.s).overall) {
        spec.asserted = true;
        spec.coefficient = bracket0 / ((1.0 - drag) * (1.0 + cfg.delta1));
      }
      break;
    }
    case SchemeKind::modified_symplectic: {
      const double root = std::sqrt(f.mu() * cfg.s);
      const double drag = cfg.delta2 * sqrt_s * L / (1.0 - root);
      if (drag < 1.0 &&
          check_conditions(cfg.kind, f.mu(), L, cfg.delta1, cfg.delta2, cfg.s).overall) {
        spec.asserted = true;
        spec.coefficient = bracket0 * (1.0 - root) / ((1.0 - drag) * (1.0 + cfg.delta1));
      }
      break;
    }
    default:
      break;
  }
  return spec;
}

}  // namespace

IterateTrace run_scheme(const Objective& f, const Vector& x0, const SchemeConfig& cfg,
                        const StopRule& stop, const ReferenceSolution& ref) {
  if (!(stop.tol_grad > 0.0)) {
    throw UsageError("run_scheme: tol_grad must be positive");
  }
  if (stop.max_iters < 0) {
    throw UsageError("run_scheme: max_iters must be nonnegative");
  }
  const auto started = std::chrono::steady_clock::now();
  const double sqrt_s = std::sqrt(cfg.s);
  const double growth = lyapunov_growth(cfg.kind, f.mu(), cfg.s);
  const double escape_radius = 1e12 * (1.0 + x0.norm());
  const double gap_floor = -1e-12 * (1.0 + std::abs(ref.f_star));
  const double bracket_floor = 1e-12 * (1.0 + std::abs(ref.f_star));

  IterateTrace trace;
  DiscreteState state = make_initial_state(f, x0);

  long double prefactor = 1.0L;
  double decay = 1.0;  // growth^{-k}
  double previous_bracket = 0.0;
  BoundSpec bound;
  bool bound_ready = false;

  while (true) {
    bool diverged = false;
    DiscreteState next;
    try {
      next = step(f, state, cfg);
      if (next.x_curr.norm() > escape_radius) {
        throw DivergenceError("iterate norm escaped at k = " + std::to_string(next.k), next.k);
      }
    } catch (const DivergenceError&) {
      diverged = true;
    }

    TraceRow row;
    row.k = state.k;
    double f_gap = f.value(state.x_curr) - ref.f_star;
    if (f_gap < 0.0) {
      if (f_gap < gap_floor) {
        throw NumericalError("f_gap below the reference-solution error budget", f_gap);
      }
      f_gap = 0.0;
    }
    row.f_gap = f_gap;
    row.grad_norm = state.grad_curr.norm();

    if (!is_baseline(cfg.kind) && !diverged) {
      double bracket = 0.0;
      switch (cfg.kind) {
        case SchemeKind::implicit: {
          const Vector v_k = (state.x_curr - state.x_prev) / sqrt_s;
          bracket = implicit_bracket_grad(f, state.x_curr, state.grad_curr, v_k, ref.x_star,
                                          ref.f_star, cfg);
          break;
        }
        case SchemeKind::symplectic:
          bracket = symplectic_bracket_grad(f, state.x_curr, state.grad_curr, next.x_curr,
                                            ref.x_star, ref.f_star, cfg);
          break;
        case SchemeKind::modified_symplectic:
          bracket = modified_bracket_grad(f, state.x_curr, state.grad_curr, next.x_curr,
                                          ref.x_star, ref.f_star, cfg);
          break;
        default:
          break;
      }
      row.lyapunov = static_cast<double>(prefactor * static_cast<long double>(bracket));
      if (!bound_ready) {
        bound = bound_for(f, cfg, bracket);
        bound_ready = true;
        trace.bound_asserted = bound.asserted;
      }
      if (bound.asserted) {
        row.bound = bound.coefficient * decay;
      }
      if (state.k > 0 && std::max(previous_bracket, bracket) > bracket_floor &&
          growth * bracket > previous_bracket * (1.0 + 1e-12)) {
        trace.lyapunov_monotone = false;
      }
      previous_bracket = bracket;
    }
    trace.rows.push_back(row);

    if (diverged) {
      trace.reason = TerminationReason::diverged;
      break;
    }
    if (row.grad_norm < stop.tol_grad) {
      trace.reason = TerminationReason::tolerance_met;
      break;
    }
    if (state.k >= stop.max_iters) {
      trace.reason = TerminationReason::max_iters;
      break;
    }
    prefactor *= static_cast<long double>(growth);
    decay /= growth;
    state = std::move(next);
  }

  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return trace;
}

}  // namespace perturbode
