#pragma once

#include "perturbode/problems.hpp"
#include "perturbode/schemes.hpp"

#include <complex>

namespace perturbode {

/// Per-eigenvalue two-term recursion z_{k+1} = a z_k + b z_{k-1} followed by
/// the symplectic iteration on a diagonal quadratic.
struct ScalarRecursion {
  double a = 0.0;
  double b = 0.0;
  double lambda = 0.0;
};

/// Coefficients for eigenvalue `lambda` under step size s and perturbation
/// weights (delta1, delta2):
///   a = 1 - lambda s (1+delta1)/(1+2 sqrt(mu s)) + (1 - lambda sqrt(s) delta2)/(1+2 sqrt(mu s))
///   b = (lambda sqrt(s) delta2 - 1)/(1+2 sqrt(mu s)).
ScalarRecursion build_recursion(double lambda, double mu, double s, double delta1,
                                double delta2);

struct SpectralRate {
  std::complex<double> root1;
  std::complex<double> root2;
  double rho = 0.0;           // max root modulus; |z_k| decays like rho^k
  bool complex_regime = false;
};

/// Exact characteristic roots of r^2 - a r - b = 0 by the quadratic formula.
/// In the complex regime (a^2 + 4b < 0) the shared modulus is sqrt(-b).
SpectralRate spectral_rate(const ScalarRecursion& recursion);

/// Worst-case per-iteration contraction of the f-gap for the symplectic
/// scheme on a diagonal quadratic: max over eigenvalues of rho(lambda)^2.
double worst_coordinate_rate(const QuadraticProblem& problem, const SchemeConfig& cfg);

}  // namespace perturbode
