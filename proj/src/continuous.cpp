#include "perturbode/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace perturbode {

namespace {

struct PhasePoint {
  Vector x;
  Vector v;
};

PhasePoint integrate_fixed(const Objective& f, const Vector& x0, const Vector& v0,
                           double delta1, double delta2, double h, long steps,
                           std::vector<ContinuousState>* samples, long record_stride) {
  const double two_root_mu = 2.0 * std::sqrt(f.mu());
  const auto accel = [&](const Vector& x, const Vector& v) -> Vector {
    Vector a = -two_root_mu * v - (1.0 + delta1) * f.gradient(x);
    if (delta2 > 0.0) {
      a -= delta2 * f.hessian_vector(x, v);
    }
    return a;
  };

  Vector x = x0;
  Vector v = v0;
  if (samples) {
    samples->push_back({0.0, x, v});
  }
  for (long i = 0; i < steps; ++i) {
    const Vector k1x = v;
    const Vector k1v = accel(x, v);
    const Vector k2x = v + 0.5 * h * k1v;
    const Vector k2v = accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    const Vector k3x = v + 0.5 * h * k2v;
    const Vector k3v = accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    const Vector k4x = v + h * k3v;
    const Vector k4v = accel(x + h * k3x, v + h * k3v);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    const double t = static_cast<double>(i + 1) * h;
    if (!x.allFinite() || !v.allFinite()) {
      throw NumericalError("integration blew up at t = " + std::to_string(t), t);
    }
    if (samples && ((i + 1) % record_stride == 0 || i + 1 == steps)) {
      samples->push_back({t, x, v});
    }
  }
  return {std::move(x), std::move(v)};
}

}  // namespace

ContinuousTrajectory integrate(const Objective& f, const Vector& x0, const Vector& v0,
                               const ContinuousRunConfig& cfg) {
  if (x0.size() != f.dimension() || v0.size() != f.dimension()) {
    throw UsageError("integrate: dimension mismatch");
  }
  if (!(cfg.t_end > 0.0) || !(cfg.h > 0.0) || cfg.h > cfg.t_end) {
    throw UsageError("integrate: need 0 < h <= t_end");
  }
  if (cfg.record_stride < 1) {
    throw UsageError("integrate: record_stride must be positive");
  }
  if (cfg.delta2 > 0.0 && !f.has_hvp()) {
    throw UsageError("integrate: delta2 > 0 needs Hessian-vector products");
  }

  const long steps = std::max<long>(1, std::lround(cfg.t_end / cfg.h));
  const double h = cfg.t_end / static_cast<double>(steps);

  ContinuousTrajectory trajectory;
  const PhasePoint end = integrate_fixed(f, x0, v0, cfg.delta1, cfg.delta2, h, steps,
                                         &trajectory.samples, cfg.record_stride);
  const PhasePoint half = integrate_fixed(f, x0, v0, cfg.delta1, cfg.delta2, 0.5 * h,
                                          2 * steps, nullptr, cfg.record_stride);
  const double scale = 1.0 + half.x.norm() + half.v.norm();
  trajectory.richardson_error =
      ((end.x - half.x).norm() + (end.v - half.v).norm()) / scale;
  trajectory.reliable = trajectory.richardson_error <= 1e-6;
  return trajectory;
}

double lyapunov_continuous(const Objective& f, const ContinuousState& state,
                           const Vector& x_star, double delta1, double delta2) {
  const double root_mu = std::sqrt(f.mu());
  const double f_gap = f.value(state.x) - f.value(x_star);
  Vector w = state.v + root_mu * (state.x - x_star);
  if (delta2 != 0.0) {
    w += delta2 * f.gradient(state.x);
  }
  return std::exp(root_mu * state.t) * ((1.0 + delta1) * f_gap + 0.5 * w.squaredNorm());
}

double compute_c1(double mu, double delta1, double delta2) {
  if (!(mu > 0.0)) {
    throw UsageError("compute_c1: mu must be positive");
  }
  const double root_mu = std::sqrt(mu);
  const double lower = 0.5 * root_mu * delta2;
  if (!(lower > 0.0)) {
    throw UsageError("compute_c1: need 0 < (sqrt(mu)/2)*delta2, got delta2 = " +
                     std::to_string(delta2));
  }
  if (!(lower < delta1)) {
    throw UsageError("compute_c1: need (sqrt(mu)/2)*delta2 < delta1, got " +
                     std::to_string(lower) + " vs " + std::to_string(delta1));
  }
  const double first =
      2.0 * mu * delta2 * (delta1 - lower) / (1.0 + delta1 + 3.0 * mu * delta2 * delta2);
  return std::min(first, std::min(root_mu / 3.0, root_mu * delta1 / 3.0));
}

ContinuousRateReport verify_continuous_rate(const ContinuousTrajectory& trajectory,
                                            const Objective& f, const Vector& x_star,
                                            double delta1, double delta2) {
  if (trajectory.samples.empty()) {
    throw UsageError("verify_continuous_rate: empty trajectory");
  }
  const double root_mu = std::sqrt(f.mu());
  const double f_star = f.value(x_star);
  const double e0 = lyapunov_continuous(f, trajectory.samples.front(), x_star, delta1, delta2);

  ContinuousRateReport report;
  report.balanced = 0.5 * root_mu * delta2 <= delta1;
  const double weak_exponent = 1.0 - delta2 * delta2 * f.lipschitz();
  report.envelope_asserted = report.balanced || weak_exponent > 0.0;

  const double bound_tol = 1e-7 * (1.0 + e0);
  const double energy_tol = 1e-7 * e0;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  double previous_energy = e0;
  for (const auto& state : trajectory.samples) {
    const double f_gap = f.value(state.x) - f_star;
    const double bound = report.balanced
                             ? e0 * std::exp(-root_mu * state.t) / (1.0 + delta1)
                             : e0 * std::exp(-root_mu * state.t * weak_exponent) /
                                   (1.0 + delta1);
    if (report.envelope_asserted) {
      report.worst_margin = std::max(report.worst_margin, f_gap - bound);
      if (f_gap > bound + bound_tol) {
        report.holds = false;
      }
    }
    if (report.balanced) {
      const double energy = lyapunov_continuous(f, state, x_star, delta1, delta2);
      report.worst_energy_increase =
          std::max(report.worst_energy_increase, energy - previous_energy);
      if (energy > previous_energy + energy_tol) {
        report.lyapunov_monotone = false;
        report.holds = false;
      }
      previous_energy = energy;
    }
  }
  return report;
}

std::string continuous_trace_csv(const ContinuousTrajectory& trajectory, const Objective& f,
                                 const Vector& x_star, double delta1, double delta2) {
  const double root_mu = std::sqrt(f.mu());
  const double f_star = f.value(x_star);
  const double e0 = trajectory.samples.empty()
                        ? 0.0
                        : lyapunov_continuous(f, trajectory.samples.front(), x_star, delta1,
                                              delta2);
  const bool balanced = 0.5 * root_mu * delta2 <= delta1;
  const double weak_exponent = 1.0 - delta2 * delta2 * f.lipschitz();

  double c1 = 0.0;
  bool sharpened = false;
  if (delta2 > 0.0 && 0.5 * root_mu * delta2 < delta1) {
    c1 = compute_c1(f.mu(), delta1, delta2);
    sharpened = true;
  }

  std::string out = "t,f_gap,lyapunov,bound_thm1,bound_thm2\n";
  char buf[200];
  for (const auto& state : trajectory.samples) {
    const double f_gap = f.value(state.x) - f_star;
    const double energy = lyapunov_continuous(f, state, x_star, delta1, delta2);
    double bound1 = 0.0;
    if (balanced) {
      bound1 = e0 * std::exp(-root_mu * state.t) / (1.0 + delta1);
    } else if (weak_exponent > 0.0) {
      bound1 = e0 * std::exp(-root_mu * state.t * weak_exponent) / (1.0 + delta1);
    }
    const double bound2 =
        sharpened ? e0 * std::exp(-(root_mu + c1) * state.t) / (1.0 + delta1) : 0.0;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", state.t, f_gap, energy,
                  bound1, bound2);
    out += buf;
  }
  return out;
}

void write_continuous_csv(const ContinuousTrajectory& trajectory, const Objective& f,
                          const Vector& x_star, double delta1, double delta2,
                          const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw UsageError("cannot open " + path + " for writing");
  }
  file << continuous_trace_csv(trajectory, f, x_star, delta1, delta2);
}

}  // namespace perturbode
