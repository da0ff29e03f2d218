#include <doctest.h>

#include <cmath>
#include <complex>

#include "support.hpp"
#include "westinv/errors.hpp"
#include "westinv/spectra.hpp"

using namespace westinv;
using westinv::testing::pi;

namespace {

const BoundaryCondition kDD{{BoundaryKind::Dirichlet}, {BoundaryKind::Dirichlet}};
const BoundaryCondition kDN{{BoundaryKind::Dirichlet}, {BoundaryKind::Neumann}};

// Textbook quadratic formula, evaluated in complex arithmetic.
std::pair<std::complex<double>, std::complex<double>> quadratic_roots(double b, double c2, double lam) {
  const std::complex<double> disc = std::sqrt(std::complex<double>(b * b * lam * lam - 4.0 * c2 * lam));
  return {0.5 * (-b * lam + disc), 0.5 * (-b * lam - disc)};
}

}  // namespace

TEST_CASE("eigenvalues") {
  CHECK(eigenvalues(kDD, 1)[0] == doctest::Approx(pi * pi).epsilon(1e-15));
  CHECK(eigenvalues(kDN, 1)[0] == doctest::Approx(pi * pi / 4).epsilon(1e-15));
  const BoundaryCondition nd{{BoundaryKind::Neumann}, {BoundaryKind::Dirichlet}};
  CHECK(eigenvalues(nd, 2) == eigenvalues(kDN, 2));

  const auto three = eigenvalues(kDD, 3);
  CHECK(three[1] == doctest::Approx(4 * pi * pi));
  CHECK(three[2] == doctest::Approx(9 * pi * pi));
  const auto many = eigenvalues(kDN, 50);
  for (std::size_t j = 1; j < many.size(); ++j) CHECK(many[j] > many[j - 1]);

  CHECK_THROWS_AS(eigenvalues({{BoundaryKind::Dirichlet}, {BoundaryKind::Impedance}}, 3), Unsupported);
  CHECK_THROWS_AS(eigenvalues({{BoundaryKind::Neumann}, {BoundaryKind::Neumann}}, 3), Unsupported);
  CHECK_THROWS_AS(eigenvalues(kDD, 0), ConfigError);
}

TEST_CASE("pole examples") {
  SUBCASE("real pair") {
    const PolePair p = poles(1.0, 1.0, 5.0);
    const auto [plus, minus] = quadratic_roots(1.0, 1.0, 5.0);
    CHECK(p.plus.real() == doctest::Approx(-1.381966).epsilon(1e-6));
    CHECK(p.minus.real() == doctest::Approx(-3.618034).epsilon(1e-6));
    CHECK(std::abs(p.plus - plus) < 1e-12);
    CHECK(std::abs(p.minus - minus) < 1e-12);
    CHECK(pole_residual(p.plus, 1.0, 1.0, 5.0) < 1e-12);
  }
  SUBCASE("double root") {
    const PolePair p = poles(1.0, 1.0, 4.0);
    CHECK(p.plus == std::complex<double>(-2.0, 0.0));
    CHECK(p.minus == std::complex<double>(-2.0, 0.0));
  }
  SUBCASE("large lambda approaches -c2/b") {
    const PolePair p = poles(1.0, 1.0, 1e6);
    // asymptotic expansion: p+ = -(c2/b)(1 + c2/(b^2 lambda) + ...)
    CHECK(p.plus.real() == doctest::Approx(-(1.0 + 1e-6)).epsilon(1e-11));
    CHECK(pole_residual(p.minus, 1.0, 1.0, 1e6) < 1e-12);
  }
  SUBCASE("complex conjugate pair") {
    const PolePair p = poles(0.01, 1.0, 10.0);
    CHECK(p.plus.imag() > 0.0);
    CHECK(p.minus == std::conj(p.plus));
    CHECK(p.plus.real() < 0.0);
    CHECK(pole_residual(p.plus, 0.01, 1.0, 10.0) < 1e-12);
  }
  SUBCASE("nonpositive inputs") { CHECK_THROWS_AS(poles(0.0, 1.0, 1.0), ConfigError); }
}

// For b lambda much above 1e4 even a correctly rounded root leaves an absolute
// residual of order b lambda |p| eps, so the sweep covers the low modes only.
TEST_CASE("quadratic residual holds across parameters") {
  westinv::testing::Draws draws(31);
  for (int trial = 0; trial < 200; ++trial) {
    const double b = std::exp(draws.uniform(-5.0, 1.0));
    const double c2 = std::exp(draws.uniform(-3.0, 3.0));
    const double lam = std::exp(draws.uniform(-2.0, 9.0));
    const PolePair p = poles(b, c2, lam);
    CHECK(pole_residual(p.plus, b, c2, lam) <= 1e-12);
    CHECK(pole_residual(p.minus, b, c2, lam) <= 1e-12);
    CHECK(p.plus.real() < 0.0);
    CHECK(p.minus.real() < 0.0);
  }
}

TEST_CASE("poles approach their accumulation points monotonically") {
  const double b = 0.5, c2 = 2.0;
  double prev_plus = INFINITY, prev_minus = INFINITY;
  for (double lam : {1e2, 1e4, 1e6}) {
    const PolePair p = poles(b, c2, lam);
    const double ep = std::abs(p.plus.real() + c2 / b);
    const double em = std::abs(p.minus.real() / lam + b);
    CHECK(ep < prev_plus);
    CHECK(em < prev_minus);
    prev_plus = ep;
    prev_minus = em;
  }
}

TEST_CASE("pole distinctness") {
  SUBCASE("two Dirichlet eigenvalues") {
    const SpectralData s = SpectralData::compute(kDD, 1.0, 1.0, 2);
    CHECK(std::abs(s.pairs[0].plus - s.pairs[1].plus) > 1e-3);
    CHECK(pole_distinctness(s, 1.0, 1.0).distinct);
  }
  SUBCASE("repeated eigenvalue maps to the same poles") {
    SpectralData s = SpectralData::compute(kDD, 1.0, 1.0, 2);
    s.lambdas[1] = s.lambdas[0];
    s.pairs[1] = poles(1.0, 1.0, s.lambdas[1]);
    const DistinctnessReport r = pole_distinctness(s, 1.0, 1.0);
    CHECK(r.consistent);
  }
  SUBCASE("twenty Dirichlet eigenvalues") {
    for (double b : {1.0, 0.1, 0.01}) {
      const SpectralData s = SpectralData::compute(kDD, b, 1.0, 20);
      const DistinctnessReport r = pole_distinctness(s, b, 1.0);
      CHECK(r.distinct);
      CHECK(r.consistent);
      CHECK(r.max_residual <= 1e-12);
    }
  }
}

TEST_CASE("svd_decay") {
  SUBCASE("identity") {
    const SvdDecay d = svd_decay(Eigen::MatrixXd::Identity(6, 6));
    CHECK((d.singular_values.array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK(d.rate == doctest::Approx(1.0));
  }
  SUBCASE("rank one") {
    const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(8, 1.0, 2.0);
    const SvdDecay d = svd_decay(u * u.transpose());
    CHECK(d.fitted == 1);
    CHECK(d.singular_values.tail(7).maxCoeff() <= 1e-14 * d.singular_values(0));
  }
  SUBCASE("geometric spectrum recovers its ratio") {
    Eigen::VectorXd s(10);
    for (int k = 0; k < 10; ++k) s(k) = std::pow(0.3, k);
    westinv::testing::Draws draws(2);
    const Eigen::MatrixXd a = draws.vector(100).reshaped(10, 10);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    const SvdDecay d = svd_decay(q * s.asDiagonal() * q.transpose());
    CHECK(d.rate == doctest::Approx(0.3).epsilon(1e-6));
  }
}

TEST_CASE("baseline frozen Jacobian decays geometrically") {
  ExperimentConfig c;
  const SvdDecay d = svd_decay(frozen_jacobian(c));
  CHECK(d.singular_values.size() == 41);
  CHECK(d.rate < 0.9);
}

TEST_CASE("transform of the linear time profile") {
  CHECK(*psi_hat_linear_beta({2.0, 0.0}) == std::complex<double>(1.0, 0.0));
  CHECK_FALSE(psi_hat_linear_beta({0.0, 0.0}).has_value());
}
