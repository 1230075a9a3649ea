#pragma once

#include "perturbode/objective.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace perturbode {

/// f(x) = x'Ax/2 with A symmetric positive definite. mu and L are the
/// extreme eigenvalues; the minimizer is the origin with f* = 0.
class QuadraticProblem final : public Objective {
 public:
  /// Diagonal A with the given positive eigenvalues (sorted ascending).
  explicit QuadraticProblem(Vector eigenvalues);
  /// Dense SPD A; eigendecomposed once so prox solves stay factored.
  explicit QuadraticProblem(const Eigen::MatrixXd& a);

  Eigen::Index dimension() const override { return eigenvalues_.size(); }
  double mu() const override { return eigenvalues_[0]; }
  double lipschitz() const override { return eigenvalues_[eigenvalues_.size() - 1]; }

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  bool has_hvp() const override { return true; }
  Vector hessian_vector(const Vector& x, const Vector& v) const override;
  bool has_prox() const override { return true; }
  Vector prox(const Vector& y, double beta) const override;  // (I + beta A)^{-1} y
  bool has_known_minimizer() const override { return true; }
  Vector known_minimizer() const override { return Vector::Zero(dimension()); }

  const Vector& eigenvalues() const { return eigenvalues_; }

 private:
  Vector apply(const Vector& x) const;  // A x

  Vector eigenvalues_;                       // ascending
  std::optional<Eigen::MatrixXd> basis_;     // Q with A = Q diag(eigenvalues) Q'
};

struct LogisticSample {
  std::vector<Eigen::Index> indices;  // 0-based feature indices, strictly increasing
  std::vector<double> values;
  double label = 1.0;  // +1 or -1 after normalization
};

enum class LabelPolicy {
  sign,    // raw label > 0 maps to +1, anything else to -1
  strict,  // raw labels must already be +1/-1
};

/// l2-regularized logistic regression over sparse samples:
///   f(x) = (1/m) sum_i log(1 + exp(-b_i a_i'x)) + (reg/2) ||x||^2.
/// Strong convexity mu = reg; L = (1/(4m)) sum ||a_i||^2 + reg, fixed at load.
class LogisticProblem final : public Objective {
 public:
  LogisticProblem(std::vector<LogisticSample> samples, Eigen::Index dimension, double reg);

  Eigen::Index dimension() const override { return dimension_; }
  double mu() const override { return reg_; }
  double lipschitz() const override { return lipschitz_; }

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  bool has_hvp() const override { return true; }
  Vector hessian_vector(const Vector& x, const Vector& v) const override;

  Eigen::Index sample_count() const { return static_cast<Eigen::Index>(samples_.size()); }
  const std::vector<LogisticSample>& samples() const { return samples_; }
  double regularization() const { return reg_; }

 private:
  std::vector<LogisticSample> samples_;
  Eigen::Index dimension_;
  double reg_;
  double lipschitz_;
};

/// Parse LIBSVM text: `label idx:val idx:val ...` with 1-based indices,
/// whitespace separated, `#` starting a comment. Feature dimension is the
/// largest index seen. Throws ParseError with the offending line number.
LogisticProblem load_libsvm(const std::string& path, double reg,
                            LabelPolicy policy = LabelPolicy::sign);
LogisticProblem parse_libsvm(const std::string& text, double reg,
                             LabelPolicy policy = LabelPolicy::sign);
/// Inverse of the parser; values rendered with round-trip precision.
std::string to_libsvm(const LogisticProblem& problem);

/// Deterministic synthetic instance: features uniform in [-1,1), labels from
/// a planted linear model. Identical (n, m, reg, seed) gives identical data
/// on any platform (the generator bypasses distribution implementations).
LogisticProblem synth_logistic(Eigen::Index n, Eigen::Index m, double reg, std::uint64_t seed);

/// High-accuracy minimizer via Nesterov's strongly convex method at s = 1/L,
/// run until ||grad f|| < tol. Objectives with a known minimizer
/// short-circuit. Throws NumericalError when the budget runs out.
ReferenceSolution reference_solve(const Objective& f, double tol = 1e-8,
                                  long max_iterations = 1000000);

}  // namespace perturbode
