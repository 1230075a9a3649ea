#include <doctest.h>

#include "perturbode/problems.hpp"

#include <cmath>
#include <random>

using namespace perturbode;

TEST_CASE("libsvm line parsing") {
  const auto problem = parse_libsvm("+1 1:0.5 3:2\n", 0.01);
  CHECK(problem.sample_count() == 1);
  CHECK(problem.dimension() == 3);
  const auto& sample = problem.samples()[0];
  CHECK(sample.label == 1.0);
  REQUIRE(sample.indices.size() == 2);
  CHECK(sample.indices[0] == 0);
  CHECK(sample.values[0] == 0.5);
  CHECK(sample.indices[1] == 2);
  CHECK(sample.values[1] == 2.0);
}

TEST_CASE("default label policy maps non-positive labels to -1") {
  const auto problem = parse_libsvm("0 2:1\n", 0.01);
  CHECK(problem.samples()[0].label == -1.0);
  CHECK(problem.dimension() == 2);
}

TEST_CASE("strict label policy rejects other encodings") {
  CHECK_THROWS_AS(parse_libsvm("0 2:1\n", 0.01, LabelPolicy::strict), ParseError);
  CHECK(parse_libsvm("-1 2:1\n", 0.01, LabelPolicy::strict).samples()[0].label == -1.0);
}

TEST_CASE("smoothness constant from the sample norms") {
  const auto problem = parse_libsvm("1 1:1\n-1 1:1\n", 0.01);
  CHECK(problem.lipschitz() == doctest::Approx(0.26).epsilon(1e-15));
  CHECK(problem.mu() == 0.01);
}

TEST_CASE("comments and malformed input") {
  const auto ok = parse_libsvm("# header comment\n+1 1:0.5 # trailing\n", 0.01);
  CHECK(ok.sample_count() == 1);

  try {
    parse_libsvm("+1 1:0.5\n-1 2:oops\n", 0.01);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK_THROWS_AS(parse_libsvm("+1 nocolon\n", 0.01), ParseError);
  CHECK_THROWS_AS(parse_libsvm("", 0.01), UsageError);
  CHECK_THROWS_AS(parse_libsvm("# only comments\n", 0.01), UsageError);
}

TEST_CASE("libsvm round-trip is lossless") {
  const auto original = synth_logistic(6, 25, 0.05, 42);
  const auto reparsed = parse_libsvm(to_libsvm(original), 0.05);
  REQUIRE(reparsed.sample_count() == original.sample_count());
  CHECK(reparsed.dimension() == original.dimension());
  CHECK(reparsed.lipschitz() == original.lipschitz());
  for (Eigen::Index i = 0; i < original.sample_count(); ++i) {
    const auto& a = original.samples()[static_cast<std::size_t>(i)];
    const auto& b = reparsed.samples()[static_cast<std::size_t>(i)];
    CHECK(a.label == b.label);
    REQUIRE(a.indices == b.indices);
    REQUIRE(a.values == b.values);
  }
  CHECK(to_libsvm(original) == to_libsvm(reparsed));
}

TEST_CASE("synthetic generator is deterministic") {
  const auto first = synth_logistic(5, 20, 0.01, 7);
  const auto second = synth_logistic(5, 20, 0.01, 7);
  CHECK(to_libsvm(first) == to_libsvm(second));
  CHECK(first.mu() == 0.01);

  const auto other_seed = synth_logistic(5, 20, 0.01, 8);
  CHECK(to_libsvm(first) != to_libsvm(other_seed));
}

TEST_CASE("reference solve short-circuits on known minimizers") {
  Vector eigenvalues(2);
  eigenvalues << 1.0, 100.0;
  const QuadraticProblem quad(eigenvalues);
  const auto ref = reference_solve(quad, 1e-8);
  CHECK(ref.x_star.norm() <= 1e-12);
  CHECK(std::abs(ref.f_star) <= 1e-12);
  CHECK(ref.certified_grad_norm <= 1e-12);
}

TEST_CASE("reference solve certifies the gradient norm") {
  const auto logistic = synth_logistic(5, 20, 0.01, 7);
  const auto ref = reference_solve(logistic, 1e-8);
  CHECK(ref.certified_grad_norm < 1e-8);
  CHECK(logistic.gradient(ref.x_star).norm() ==
        doctest::Approx(ref.certified_grad_norm).epsilon(1e-12));

  const auto tighter = reference_solve(logistic, 1e-10);
  CHECK(std::abs(ref.f_star - tighter.f_star) <= 1e-14 * (1.0 + std::abs(ref.f_star)));
}

TEST_CASE("reference solve budget exhaustion") {
  const auto logistic = synth_logistic(5, 20, 0.01, 7);
  CHECK_THROWS_AS(reference_solve(logistic, 1e-8, 3), NumericalError);
}

TEST_CASE("lipschitz estimate dominates the empirical gradient ratio") {
  const auto logistic = synth_logistic(5, 30, 0.01, 9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pick(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vector x(5), y(5);
    for (int i = 0; i < 5; ++i) {
      x[i] = pick(rng);
      y[i] = pick(rng);
    }
    const double dist = (x - y).norm();
    if (dist < 1e-12) continue;
    worst = std::max(worst,
                     (logistic.gradient(x) - logistic.gradient(y)).norm() / dist);
  }
  CHECK(worst <= logistic.lipschitz());
}
