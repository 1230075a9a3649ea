#include <doctest.h>

#include "perturbode/objective.hpp"
#include "perturbode/problems.hpp"

#include <cmath>
#include <random>

using namespace perturbode;

namespace {

QuadraticProblem make_quad() {
  Vector eigenvalues(2);
  eigenvalues << 1.0, 100.0;
  return QuadraticProblem(eigenvalues);
}

LogisticProblem single_sample_logistic(double reg) {
  LogisticSample sample;
  sample.indices = {0};
  sample.values = {1.0};
  sample.label = 1.0;
  return LogisticProblem({sample}, 1, reg);
}

// 1-D x^2/2 exposing no optional capability, for the fallback/error paths.
struct BareQuadratic final : Objective {
  Eigen::Index dimension() const override { return 1; }
  double mu() const override { return 1.0; }
  double lipschitz() const override { return 1.0; }
  double value(const Vector& x) const override { return 0.5 * x[0] * x[0]; }
  Vector gradient(const Vector& x) const override { return x; }
};

}  // namespace

TEST_CASE("quadratic value and gradient") {
  const auto quad = make_quad();
  Vector zero = Vector::Zero(2);
  CHECK(quad.value(zero) == 0.0);
  Vector ones = Vector::Ones(2);
  CHECK(quad.value(ones) == doctest::Approx(50.5).epsilon(1e-15));
  const Vector grad = quad.gradient(ones);
  CHECK(grad[0] == doctest::Approx(1.0));
  CHECK(grad[1] == doctest::Approx(100.0));
  CHECK(quad.gradient(quad.known_minimizer()).norm() <= 1e-12);
}

TEST_CASE("quadratic hessian-vector product") {
  const auto quad = make_quad();
  Vector x(2);
  x << -3.0, 7.0;
  Vector v = Vector::Ones(2);
  const Vector hv = quad.hessian_vector(x, v);
  CHECK(hv[0] == 1.0);
  CHECK(hv[1] == 100.0);
  CHECK(quad.hessian_vector(x, Vector::Zero(2)).norm() == 0.0);
}

TEST_CASE("logistic single-sample values at zero") {
  // the regularizer contributes nothing at x = 0
  const double reg = 0.01;
  const auto logistic = single_sample_logistic(reg);
  Vector zero = Vector::Zero(1);
  CHECK(logistic.value(zero) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(logistic.gradient(zero)[0] == doctest::Approx(-0.5).epsilon(1e-14));
  // sigma(0)(1-sigma(0)) * (a'v) * a = 1/4, plus the regularizer shift reg*v
  Vector v = Vector::Ones(1);
  CHECK(logistic.hessian_vector(zero, v)[0] == doctest::Approx(0.25 + reg).epsilon(1e-14));
}

TEST_CASE("dimension mismatch is a usage error") {
  const auto quad = make_quad();
  Vector wrong = Vector::Ones(3);
  CHECK_THROWS_AS(quad.value(wrong), UsageError);
  CHECK_THROWS_AS(quad.gradient(wrong), UsageError);
  CHECK_THROWS_AS(quad.hessian_vector(wrong, wrong), UsageError);
}

TEST_CASE("missing capabilities raise unsupported-operation") {
  BareQuadratic bare;
  Vector x = Vector::Ones(1);
  CHECK_FALSE(bare.has_hvp());
  CHECK_THROWS_AS(bare.hessian_vector(x, x), UnsupportedOperation);
  CHECK_THROWS_AS(bare.known_minimizer(), UnsupportedOperation);
}

TEST_CASE("quadratic prox closed form") {
  const auto quad = make_quad();
  Vector y = Vector::Ones(2);
  const Vector z = proximal(quad, y, 1.0);
  CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(1.0 / 101.0).epsilon(1e-15));

  const Vector tiny = proximal(quad, y, 1e-12);
  CHECK((tiny - y).norm() <= 1e-9);
}

TEST_CASE("generic prox meets the optimality residual") {
  const auto logistic = synth_logistic(5, 20, 0.01, 7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pick(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector y(5);
    for (int i = 0; i < 5; ++i) y[i] = pick(rng);
    const Vector z = proximal(logistic, y, 0.1);
    const double residual = (z - y + 0.1 * logistic.gradient(z)).norm();
    CHECK(residual <= 1e-11);
  }
}

TEST_CASE("generic prox without hvp falls back to gradient steps") {
  BareQuadratic bare;
  Vector y(1);
  y << 2.0;
  const Vector z = proximal(bare, y, 1.0);
  // argmin z^2/2 + (z-2)^2/2 = 1
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("prox budget exhaustion carries the residual") {
  const auto logistic = synth_logistic(5, 20, 0.01, 7);
  Vector y = Vector::Ones(5);
  ProxOptions opts;
  opts.max_iterations = 0;
  try {
    proximal(logistic, y, 0.1, opts);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.detail > 0.0);
  }
}

TEST_CASE("finite differences agree with analytic derivatives") {
  const auto quad = make_quad();
  Vector x = Vector::Ones(2);
  const auto quad_report = finite_difference_check(quad, x, 1e-5);
  CHECK(quad_report.max_rel_err_grad <= 1e-8);
  CHECK(quad_report.max_rel_err_hvp <= 1e-9);  // constant Hessian, round-off only

  const auto logistic = synth_logistic(5, 20, 0.01, 7);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector xr(5);
  for (int i = 0; i < 5; ++i) xr[i] = gauss(rng);
  xr.normalize();
  const auto logi_report = finite_difference_check(logistic, xr, 1e-5);
  CHECK(logi_report.max_rel_err_grad <= 1e-5);
  CHECK(logi_report.max_rel_err_hvp <= 1e-5);
}

TEST_CASE("strong convexity and smoothness witnesses") {
  const auto quad = make_quad();
  const auto logistic = synth_logistic(5, 20, 0.01, 7);
  const Objective* objectives[] = {&quad, &logistic};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pick(-2.0, 2.0);
  for (const Objective* f : objectives) {
    const double mu = f->mu();
    const double L = f->lipschitz();
    for (int trial = 0; trial < 1000; ++trial) {
      Vector x(f->dimension()), y(f->dimension());
      for (Eigen::Index i = 0; i < f->dimension(); ++i) {
        x[i] = pick(rng);
        y[i] = pick(rng);
      }
      const double fy = f->value(y);
      const double lower = f->value(x) + f->gradient(x).dot(y - x) +
                           0.5 * mu * (y - x).squaredNorm() -
                           1e-9 * (1.0 + std::abs(fy));
      CHECK(fy >= lower);
      CHECK((f->gradient(x) - f->gradient(y)).norm() <=
            L * (x - y).norm() * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("dense SPD quadratic matches its diagonalization") {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.5, 0.5, 1.0;
  const QuadraticProblem quad(a);
  CHECK(quad.mu() == doctest::Approx((3.0 - std::sqrt(2.0)) / 2.0));
  CHECK(quad.lipschitz() == doctest::Approx((3.0 + std::sqrt(2.0)) / 2.0));
  Vector x(2);
  x << 1.0, -2.0;
  CHECK(quad.value(x) == doctest::Approx(0.5 * x.dot(a * x)).epsilon(1e-14));
  CHECK((quad.gradient(x) - a * x).norm() <= 1e-13);
  // prox solves (I + beta A) z = y
  Vector y(2);
  y << 0.3, 0.7;
  const double beta = 0.25;
  const Vector z = proximal(quad, y, beta);
  CHECK(((Eigen::MatrixXd::Identity(2, 2) + beta * a) * z - y).norm() <= 1e-13);
}
