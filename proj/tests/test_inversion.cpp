#include <doctest.h>

#include <cmath>
#include <memory>

#include "support.hpp"
#include "westinv/errors.hpp"
#include "westinv/harness.hpp"
#include "westinv/inversion.hpp"

using namespace westinv;
using westinv::testing::Draws;

namespace {

// Baseline experiment with a configurable basis; data from `truth` plus noise.
InversionProblem make_problem(const ExperimentConfig& c, const Eigen::VectorXd* truth_override = nullptr) {
  const ForwardModel model = c.model();
  auto basis = std::make_shared<const GridBasis>(BasisSet::make(c.basis, c.n_basis), model.grids.space);
  const Observation obs{model.grids.space.size() - 1, TraceSampling::uniform(model.grids.time, c.samples)};
  Eigen::VectorXd truth = truth_override ? *truth_override
                                         : truth_profile(c.truth_family, c.truth_amplitude, model.grids.space);
  if (c.truth_in_span) truth = clip_nonnegative(CoefficientField::from_samples(basis, truth)).samples();
  const SyntheticData data = synthesize_data(model, truth, obs, c.noise, *c.seed);
  return {model, basis, obs, data.noisy, prefilter(data.noisy, model.grids.time), {}, truth, std::nullopt};
}

double min_iterate_sample(const InversionProblem& p, const InversionReport& r) {
  double lo = INFINITY;
  for (const auto& c : r.iterates) lo = std::min(lo, p.basis->synthesize(c).minCoeff());
  return lo;
}

}  // namespace

TEST_CASE("discrepancy_stop") {
  CHECK(discrepancy_stop({0.05, 0.03, 0.019}, 0.01, 2.0) == 2);
  CHECK_FALSE(discrepancy_stop({0.05, 0.03, 0.021}, 0.01, 2.0).has_value());
  CHECK(discrepancy_stop({0.01, 0.5}, 0.01, 2.0) == 0);
  CHECK(discrepancy_stop({}, 0.01, 2.0) == std::nullopt);
}

TEST_CASE("discrepancy index is minimal") {
  Draws draws(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> norms(20);
    for (auto& n : norms) n = draws.uniform(0.0, 1.0);
    const double delta = draws.uniform(0.01, 0.3), tau = draws.uniform(1.01, 3.0);
    const auto k = discrepancy_stop(norms, delta, tau);
    const std::size_t end = k ? static_cast<std::size_t>(*k) : norms.size();
    for (std::size_t i = 0; i < end; ++i) CHECK(norms[i] > tau * delta);
    if (k) CHECK(norms[static_cast<std::size_t>(*k)] <= tau * delta);
  }
}

TEST_CASE("regularization schedule halves exactly") {
  const RegularizationSchedule s{0.37, 0.5};
  for (int n = 0; n < 60; ++n) CHECK(s.alpha(n) == std::ldexp(0.37, -n));
  CHECK_THROWS_AS((RegularizationSchedule{1.0, 1.0}).validate(), ConfigError);
  CHECK_THROWS_AS((RegularizationSchedule{0.0, 0.5}).validate(), ConfigError);
}

TEST_CASE("regularized_step") {
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(5, -1.0, 2.0);
  SUBCASE("identity Jacobian without regularization returns the residual") {
    CHECK((regularized_step(Eigen::MatrixXd::Identity(5, 5), r, 0.0) - r).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("matches the normal equations") {
    Draws draws(4);
    const Eigen::MatrixXd j = draws.vector(35).reshaped(7, 5);
    const Eigen::VectorXd rr = draws.vector(7);
    const Eigen::VectorXd x = regularized_step(j, rr, 0.3);
    const Eigen::VectorXd lhs = j.transpose() * j * x + 0.3 * x;
    CHECK((lhs - j.transpose() * rr).norm() < 1e-12);
  }
  SUBCASE("singular system") {
    CHECK_THROWS_AS(regularized_step(Eigen::MatrixXd::Zero(5, 5), r, 0.0), LinearSolveFailure);
  }
}

TEST_CASE("error norms and admissible bound") {
  const SpatialGrid g(11);
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(11), b = Eigen::VectorXd::Zero(11);
  CHECK(error_linf(a, b) == 1.0);
  CHECK(error_l2(g, a, b) == doctest::Approx(1.0).epsilon(1e-14));

  StateField s{{g, TimeGrid(4)}, Eigen::MatrixXd::Constant(11, 5, 0.5), Eigen::MatrixXd::Zero(11, 5)};
  CHECK(admissible_bound(s, 0.25, 1.0) == doctest::Approx(0.75));
  s.values.setZero();
  CHECK(std::isinf(admissible_bound(s, 0.25)));
}

TEST_CASE("zero residual leaves the iterate unchanged") {
  ExperimentConfig c;
  c.n_basis = 9;
  c.noise = 0.0;
  const ForwardModel model = c.model();
  auto basis = std::make_shared<const GridBasis>(BasisSet::hat(9), model.grids.space);
  const CoefficientField init(basis, Eigen::VectorXd::Constant(9, 0.05));
  const Eigen::VectorXd truth = init.samples();
  const InversionProblem p = make_problem(c, &truth);
  StoppingRule stop{2.0, 0.0, 10};

  const InversionReport newton = newton_lm_run(p, init, {true, std::nullopt, 0.5, stop});
  CHECK(newton.iterations() == 0);
  CHECK(newton.stop_index == 0);
  CHECK(newton.final_coefficients() == init.coefficients());

  const InversionReport halley = halley_run(p, init, {std::nullopt, std::nullopt, 0.5, stop});
  CHECK(halley.iterations() == 0);
  CHECK(halley.final_coefficients() == init.coefficients());

  // Landweber reads its gradient target from the smoothed data: give it the exact trace
  InversionProblem pl = p;
  pl.smoothed = TimeTrace{model.grids.time.times(), solve_forward(model, truth).history(100)};
  const InversionReport lw = landweber_run(pl, init, {true, std::nullopt, 0, stop});
  CHECK(lw.iterations() == 0);
  CHECK(lw.final_coefficients() == init.coefficients());
}

TEST_CASE("noise-free frozen Newton with truth in span") {
  ExperimentConfig c;
  c.n_basis = 7;
  c.noise = 0.0;
  c.truth_amplitude = 0.1;
  c.truth_in_span = true;
  const InversionProblem p = make_problem(c);
  const InversionReport r =
      newton_lm_run(p, CoefficientField::zero(p.basis), {true, std::nullopt, 0.5, {2.0, 0.0, 8}});
  for (std::size_t k = 1; k <= 5; ++k) CHECK(r.residuals[k] < r.residuals[k - 1]);
  CHECK(min_iterate_sample(p, r) >= -1e-12);
}

TEST_CASE("Halley with a vanishing predictor takes the Newton step") {
  ExperimentConfig c;
  c.n_basis = 9;
  c.noise = 0.001;
  const InversionProblem p = make_problem(c);
  const StoppingRule stop{2.0, 0.0, 1};
  const auto init = CoefficientField::zero(p.basis);
  const InversionReport newton = newton_lm_run(p, init, {true, 0.05, 0.5, stop});
  // a huge predictor alpha makes d, hence H_d, negligible
  const InversionReport halley = halley_run(p, init, {1e30, 0.05, 0.5, stop});
  const Eigen::VectorXd dn = newton.final_coefficients(), dh = halley.final_coefficients();
  CHECK((dn - dh).norm() <= 1e-10 * dn.norm());
}

TEST_CASE("Newton at baseline noise") {
  ExperimentConfig c;  // bump truth, 41 hats, 1% noise
  InversionProblem p = make_problem(c);
  const double delta = std::sqrt(50.0) * p.data.delta;
  const auto init = CoefficientField::zero(p.basis);

  SUBCASE("stops by discrepancy within four iterations") {
    const InversionReport r = newton_lm_run(p, init, {true, std::nullopt, 0.5, {2.0, delta, 50}});
    REQUIRE(r.stop_index.has_value());
    CHECK(*r.stop_index >= 1);
    CHECK(*r.stop_index <= 4);
    CHECK(r.stop_reason == StopReason::Discrepancy);
    CHECK(min_iterate_sample(p, r) >= -1e-12);
  }
  SUBCASE("vanishing regularization fails loudly") {
    CHECK_THROWS_AS(newton_lm_run(p, init, {true, 1e-300, 0.5, {2.0, 0.0, 5}}), LinearSolveFailure);
  }
  SUBCASE("full Newton also stops by discrepancy") {
    const InversionReport r = newton_lm_run(p, init, {false, std::nullopt, 0.5, {2.0, delta, 10}});
    CHECK(r.stop_reason == StopReason::Discrepancy);
  }
}

TEST_CASE("Landweber") {
  ExperimentConfig c;
  c.noise = 0.001;
  c.truth_amplitude = 0.1;
  const InversionProblem p = make_problem(c);
  const auto init = CoefficientField::zero(p.basis);

  SUBCASE("frozen, auto step: residual non-increasing over 100 iterations") {
    const InversionReport r = landweber_run(p, init, {true, std::nullopt, 0, {2.0, 0.0, 100}});
    REQUIRE(r.residuals.size() == 101);
    for (std::size_t k = 1; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= r.residuals[k - 1]);
    CHECK(r.errors_l2.back() < r.errors_l2.front());
    CHECK(min_iterate_sample(p, r) >= -1e-12);
  }
  SUBCASE("H1 gradient with an explicit step") {
    const InversionReport r = landweber_run(p, init, {true, 50.0, 1, {2.0, 0.0, 20}});
    CHECK(r.residuals.back() < r.residuals.front());
  }
  SUBCASE("oversized step from a good start diverges") {
    InversionProblem q = p;
    q.kappa_max = 0.2;
    const CoefficientField start = CoefficientField::from_samples(q.basis, *q.truth);
    CHECK_THROWS_AS(landweber_run(q, start, {true, 1e5, 0, {2.0, 0.0, 50}}), Divergence);
  }
  SUBCASE("automatic step needs the L2 gradient") {
    CHECK_THROWS_AS(landweber_run(p, init, {true, std::nullopt, 1, {}}), ConfigError);
  }
  SUBCASE("data must reach every solver level") {
    InversionProblem raw = p;
    raw.smoothed.reset();
    CHECK_THROWS_AS(landweber_run(raw, init, {}), GridMismatch);
  }
}

TEST_CASE("non-frozen Landweber descends at the stronger nonlinearity") {
  ExperimentConfig c;  // amplitude 0.3
  c.noise = 0.001;
  const InversionProblem p = make_problem(c);
  const InversionReport r = landweber_run(p, CoefficientField::zero(p.basis), {false, std::nullopt, 0, {2.0, 0.0, 50}});
  for (std::size_t k = 1; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= r.residuals[k - 1]);
}

TEST_CASE("tikhonov_gradient") {
  const ForwardModel m = westinv::testing::manufactured_model(101, 400);
  const auto& g = m.grids;
  const Eigen::VectorXd k0 = 0.05 * (westinv::testing::pi * g.space.nodes().array()).sin().matrix();
  const TimeTrace exact{g.time.times(), solve_forward(m, k0).history(100)};

  SUBCASE("vanishes at the prior with exact data") {
    CHECK(tikhonov_gradient(m, k0, k0, 1.0, exact, 100, 0).samples.cwiseAbs().maxCoeff() < 1e-14);
  }
  Draws draws(8);
  const TimeTrace data{g.time.times(), exact.values + 0.01 * draws.smooth_trace(g.time)};
  const Eigen::VectorXd k = k0 + draws.smooth_profile(g.space, 3, 0.05);

  SUBCASE("alpha = 0 is the negated Landweber direction") {
    const Linearization lin(m, k);
    const TimeTrace misfit{g.time.times(), data.values - lin.base().history(100)};
    const Eigen::VectorXd landweber = lin.adjoint_apply(misfit, 100).samples;
    CHECK((tikhonov_gradient(m, k, k0, 0.0, data, 100, 0).samples + landweber).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("directional derivative of the Tikhonov functional") {
    const double alpha = 0.5;
    const Eigen::VectorXd wt = g.time.weights(), wx = g.space.weights();
    auto functional = [&](const Eigen::VectorXd& kk) {
      const Eigen::VectorXd r = solve_forward(m, kk).history(100) - data.values;
      const Eigen::VectorXd d = kk - k0;
      return 0.5 * (r.array().square() * wt.array()).sum() + 0.5 * alpha * (d.array().square() * wx.array()).sum();
    };
    const Eigen::VectorXd dk = draws.smooth_profile(g.space, 3, 0.2);
    const double pairing = (tikhonov_gradient(m, k, k0, alpha, data, 100, 0).samples.array() * dk.array() *
                            wx.array()).sum();
    const double h = 0.05;
    const double fd = (functional(k + h * dk) - functional(k - h * dk)) / (2 * h);
    CHECK(std::abs(fd - pairing) <= 5e-3 * std::abs(pairing));
  }
}

TEST_CASE("problem validation") {
  ExperimentConfig c;
  c.n_basis = 5;
  InversionProblem p = make_problem(c);
  CHECK_NOTHROW(p.validate());
  InversionProblem bad = p;
  bad.data.values.conservativeResize(10);
  CHECK_THROWS_AS(bad.validate(), GridMismatch);
  bad = p;
  bad.kappa_max = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.basis = std::make_shared<const GridBasis>(BasisSet::hat(5), SpatialGrid(51));
  CHECK_THROWS_AS(bad.validate(), GridMismatch);
  CHECK_THROWS_AS((StoppingRule{1.0, 0.0, 5}).validate(), ConfigError);
}
