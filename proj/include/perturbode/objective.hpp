#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace perturbode {

using Vector = Eigen::VectorXd;

/// Caller broke a contract (bad dimension, invalid parameter, malformed input).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation requested on an objective that does not support it.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numeric procedure failed to reach its tolerance. `detail` carries the
/// final residual (inner solvers) or the blow-up time (integrators).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double detail)
      : std::runtime_error(what), detail(detail) {}
  double detail;
};

/// An iteration produced a non-finite or runaway iterate.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, long iteration)
      : NumericalError(what, static_cast<double>(iteration)), iteration(iteration) {}
  long iteration;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

/// A mu-strongly convex, L-smooth objective. Immutable after construction;
/// value/gradient/hessian_vector are pure and safe for concurrent calls.
///
/// `hessian_vector` and `prox` are optional capabilities gated by has_hvp()
/// and has_prox(); the free function proximal() falls back to an inner
/// Newton solver when no closed-form prox is available.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double mu() const = 0;
  virtual double lipschitz() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  virtual bool has_hvp() const { return false; }
  /// Analytic Hessian-vector product, never finite differences.
  virtual Vector hessian_vector(const Vector& x, const Vector& v) const;

  virtual bool has_prox() const { return false; }
  /// Closed-form argmin_z f(z) + ||z-y||^2/(2*beta), when has_prox().
  virtual Vector prox(const Vector& y, double beta) const;

  virtual bool has_known_minimizer() const { return false; }
  virtual Vector known_minimizer() const;

 protected:
  void require_dimension(const Vector& x) const;
};

/// A high-accuracy stand-in for the true minimizer, used to compute f-gaps.
struct ReferenceSolution {
  Vector x_star;
  double f_star = 0.0;
  double certified_grad_norm = 0.0;
};

struct ProxOptions {
  double tol_scale = 1e-12;  // inner tolerance = tol_scale * (1 + ||y||)
  int max_iterations = 200;
};

/// Proximal map of `beta*f` at y. Uses the objective's closed form when
/// available, otherwise damped Newton on z - y + beta*grad(z) with CG inner
/// solves (falling back to fixed steps of size 1/(1+beta*L) when a Newton
/// direction stalls). The accepted residual ||z - y + beta*grad(z)|| is
/// within opts.tol_scale * (1 + ||y||).
Vector proximal(const Objective& f, const Vector& y, double beta,
                const ProxOptions& opts = {});

struct FdCheckReport {
  double max_rel_err_grad = 0.0;
  double max_rel_err_hvp = 0.0;
};

/// Central-difference self-check of gradient and Hessian-vector product.
/// Relative errors are guarded: |fd - analytic| / (1 + |analytic|),
/// maximised over coordinates and probe directions. Reports, never throws.
FdCheckReport finite_difference_check(const Objective& f, const Vector& x, double h);

}  // namespace perturbode
