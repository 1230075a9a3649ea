#include "perturbode/spectral.hpp"

#include <cmath>

namespace perturbode {

ScalarRecursion build_recursion(double lambda, double mu, double s, double delta1,
                                double delta2) {
  if (!(lambda > 0.0)) {
    throw UsageError("build_recursion: lambda must be positive");
  }
  const double denom = 1.0 + 2.0 * std::sqrt(mu * s);
  const double scaled_corr = lambda * std::sqrt(s) * delta2;
  ScalarRecursion recursion;
  recursion.lambda = lambda;
  recursion.a = 1.0 - lambda * s * (1.0 + delta1) / denom + (1.0 - scaled_corr) / denom;
  recursion.b = (scaled_corr - 1.0) / denom;
  return recursion;
}

SpectralRate spectral_rate(const ScalarRecursion& recursion) {
  SpectralRate rate;
  const double a = recursion.a;
  const double b = recursion.b;
  const double disc = a * a + 4.0 * b;
  if (disc < 0.0) {
    const double imag = 0.5 * std::sqrt(-disc);
    rate.root1 = {0.5 * a, imag};
    rate.root2 = {0.5 * a, -imag};
    rate.rho = std::sqrt(-b);  // both roots share modulus sqrt(-b)
    rate.complex_regime = true;
  } else {
    const double sq = std::sqrt(disc);
    rate.root1 = {0.5 * (a + sq), 0.0};
    rate.root2 = {0.5 * (a - sq), 0.0};
    rate.rho = std::max(std::abs(rate.root1.real()), std::abs(rate.root2.real()));
    rate.complex_regime = false;
  }
  return rate;
}

double worst_coordinate_rate(const QuadraticProblem& problem, const SchemeConfig& cfg) {
  if (cfg.kind != SchemeKind::symplectic) {
    throw UsageError("worst_coordinate_rate applies to the symplectic scheme only");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < problem.eigenvalues().size(); ++i) {
    const auto rec = build_recursion(problem.eigenvalues()[i], problem.mu(), cfg.s,
                                     cfg.delta1, cfg.delta2);
    const double rho = spectral_rate(rec).rho;
    worst = std::max(worst, rho * rho);
  }
  return worst;
}

}  // namespace perturbode
