#include "perturbode/objective.hpp"

#include <cmath>

namespace perturbode {

Vector Objective::hessian_vector(const Vector&, const Vector&) const {
  throw UnsupportedOperation("objective does not provide Hessian-vector products");
}

Vector Objective::prox(const Vector&, double) const {
  throw UnsupportedOperation("objective does not provide a closed-form prox");
}

Vector Objective::known_minimizer() const {
  throw UnsupportedOperation("objective has no known minimizer");
}

void Objective::require_dimension(const Vector& x) const {
  if (x.size() != dimension()) {
    throw UsageError("dimension mismatch: expected " + std::to_string(dimension()) +
                     ", got " + std::to_string(x.size()));
  }
}

namespace {

// CG on (I + beta*H(z)) d = rhs. The system is SPD with spectrum in
// [1 + beta*mu, 1 + beta*L], so plain CG converges quickly.
Vector solve_newton_direction(const Objective& f, const Vector& z, double beta,
                              const Vector& rhs) {
  Vector d = Vector::Zero(z.size());
  Vector r = rhs;
  Vector p = r;
  double rs = r.squaredNorm();
  const double tol2 = 1e-28 * (1.0 + rhs.squaredNorm());
  const int max_cg = static_cast<int>(4 * z.size()) + 10;
  for (int i = 0; i < max_cg && rs > tol2; ++i) {
    Vector ap = p + beta * f.hessian_vector(z, p);
    const double alpha = rs / p.dot(ap);
    d += alpha * p;
    r -= alpha * ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  return d;
}

}  // namespace

Vector proximal(const Objective& f, const Vector& y, double beta, const ProxOptions& opts) {
  if (y.size() != f.dimension()) {
    throw UsageError("proximal: dimension mismatch");
  }
  if (!(beta > 0.0)) {
    throw UsageError("proximal: beta must be positive");
  }
  if (f.has_prox()) {
    return f.prox(y, beta);
  }

  const double tol = opts.tol_scale * (1.0 + y.norm());
  Vector z = y;
  Vector residual = beta * f.gradient(z);  // z - y vanishes at the start
  double res_norm = residual.norm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res_norm <= tol) {
      return z;
    }
    bool moved = false;
    if (f.has_hvp()) {
      const Vector d = solve_newton_direction(f, z, beta, -residual);
      double step = 1.0;
      while (step > 1e-8) {
        Vector zn = z + step * d;
        Vector rn = zn - y + beta * f.gradient(zn);
        const double rn_norm = rn.norm();
        if (rn_norm < res_norm) {
          z = std::move(zn);
          residual = std::move(rn);
          res_norm = rn_norm;
          moved = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!moved) {
      // Gradient step on f(z) + ||z-y||^2/(2 beta); its gradient is
      // residual/beta and its Lipschitz constant is L + 1/beta.
      z -= residual / (1.0 + beta * f.lipschitz());
      residual = z - y + beta * f.gradient(z);
      res_norm = residual.norm();
    }
  }
  if (res_norm <= tol) {
    return z;
  }
  throw NumericalError("proximal inner solver exhausted its iteration budget, residual " +
                           std::to_string(res_norm),
                       res_norm);
}

FdCheckReport finite_difference_check(const Objective& f, const Vector& x, double h) {
  if (!(h > 0.0)) {
    throw UsageError("finite_difference_check: h must be positive");
  }
  const Eigen::Index n = f.dimension();
  FdCheckReport report;
  const Vector grad = f.gradient(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e[i] = h;
    const double fd = (f.value(x + e) - f.value(x - e)) / (2.0 * h);
    const double rel = std::abs(fd - grad[i]) / (1.0 + std::abs(grad[i]));
    report.max_rel_err_grad = std::max(report.max_rel_err_grad, rel);
  }
  if (f.has_hvp()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector e = Vector::Zero(n);
      e[i] = 1.0;
      const Vector hv = f.hessian_vector(x, e);
      const Vector fd = (f.gradient(x + h * e) - f.gradient(x - h * e)) / (2.0 * h);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double rel = std::abs(fd[j] - hv[j]) / (1.0 + std::abs(hv[j]));
        report.max_rel_err_hvp = std::max(report.max_rel_err_hvp, rel);
      }
    }
  }
  return report;
}

}  // namespace perturbode
