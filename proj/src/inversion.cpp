#include "westinv/inversion.hpp"

#include <cmath>
#include <limits>

#include "westinv/errors.hpp"

namespace westinv {

void RegularizationSchedule::validate() const {
  if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
}

void StoppingRule::validate() const {
  if (!(tau > 1.0)) throw ConfigError("tau must exceed 1");
  if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
  if (max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
  if (stagnation_window < 1) throw ConfigError("stagnation window must be positive");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Discrepancy: return "discrepancy";
    case StopReason::MaxIter: return "max-iter";
    case StopReason::Stagnation: return "stagnation";
  }
  return "unknown";
}

std::string to_string(Alpha0Rule rule) { return rule == Alpha0Rule::Spectral ? "spectral" : "residual"; }

Alpha0Rule alpha0_rule_from_string(const std::string& name) {
  if (name == "spectral") return Alpha0Rule::Spectral;
  if (name == "residual") return Alpha0Rule::Residual;
  throw ConfigError("unknown alpha0 rule '" + name + "'");
}

std::optional<int> discrepancy_stop(const std::vector<double>& norms, double delta, double tau) {
  for (std::size_t k = 0; k < norms.size(); ++k)
    if (norms[k] <= tau * delta) return static_cast<int>(k);
  return std::nullopt;
}

Eigen::VectorXd InversionProblem::frozen_point() const {
  if (kappa0.size() == 0) return Eigen::VectorXd::Zero(model.grids.space.size());
  return kappa0;
}

void InversionProblem::validate() const {
  if (!basis) throw ConfigError("inversion problem has no basis");
  if (!(basis->grid() == model.grids.space)) throw GridMismatch("basis grid differs from the solver grid");
  if (data.size() != observation.sampling.size()) throw GridMismatch("data length differs from the sampling");
  if (kappa0.size() != 0 && kappa0.size() != model.grids.space.size()) throw GridMismatch("kappa0 is off the grid");
  if (truth && truth->size() != model.grids.space.size()) throw GridMismatch("truth is off the grid");
  if (smoothed && smoothed->size() != model.grids.time.levels())
    throw GridMismatch("smoothed data must live on the solver time levels");
  if (kappa_max && !(*kappa_max > 0.0)) throw ConfigError("kappa_max must be positive");
}

double admissible_bound(const StateField& base, double epsilon, double margin) {
  const double peak = base.values.cwiseAbs().maxCoeff();
  if (peak == 0.0) return std::numeric_limits<double>::infinity();
  return margin * (1.0 - epsilon) / (2.0 * peak);
}

Eigen::VectorXd predict(const InversionProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& c) {
  return problem.observation(solve_forward(problem.model, problem.basis->synthesize(c)));
}

double error_linf(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double error_l2(const SpatialGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b) {
  return std::sqrt(((a - b).array().square() * grid.weights().array()).sum());
}

Eigen::VectorXd regularized_step(const Eigen::Ref<const Eigen::MatrixXd>& j, const Eigen::Ref<const Eigen::VectorXd>& r,
                                 double alpha) {
  Eigen::MatrixXd normal = j.transpose() * j;
  normal.diagonal().array() += alpha;
  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success || !(llt.rcond() > std::numeric_limits<double>::epsilon()))
    throw LinearSolveFailure("regularized normal matrix is numerically singular");
  return llt.solve(j.transpose() * r);
}

double power_iteration_sigma2(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::Ref<const Eigen::VectorXd>& w,
                              int iterations) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols()).normalized();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd next = m.transpose() * (w.asDiagonal() * (m * v));
    estimate = v.dot(next);
    const double n = next.norm();
    if (n == 0.0) return 0.0;
    v = next / n;
  }
  return estimate;
}

namespace {

// Records iterates and decides when to stop.
class Tracker {
 public:
  Tracker(InversionReport& report, const InversionProblem& problem, const StoppingRule& stop)
      : report_(report), problem_(problem), stop_(stop) {
    report_.threshold = stop.threshold();
  }

  // Returns true when iteration should end after this iterate.
  bool record(const CoefficientField& field, double residual) {
    report_.iterates.push_back(field.coefficients());
    report_.residuals.push_back(residual);
    if (problem_.truth) {
      report_.errors_linf.push_back(error_linf(field.samples(), *problem_.truth));
      report_.errors_l2.push_back(error_l2(problem_.model.grids.space, field.samples(), *problem_.truth));
    }
    const int k = report_.iterations();
    if (residual <= stop_.threshold()) {
      report_.stop_index = k;
      report_.stop_reason = StopReason::Discrepancy;
      return true;
    }
    if (stagnated()) {
      report_.stop_reason = StopReason::Stagnation;
      return true;
    }
    if (k >= stop_.max_iterations) {
      report_.stop_reason = StopReason::MaxIter;
      return true;
    }
    return false;
  }

 private:
  bool stagnated() const {
    const auto& r = report_.residuals;
    const auto window = static_cast<std::size_t>(stop_.stagnation_window);
    if (r.size() <= window) return false;
    for (std::size_t k = r.size() - window; k < r.size(); ++k) {
      const double scale = std::max(r[k - 1], std::numeric_limits<double>::min());
      if (std::abs(r[k] - r[k - 1]) / scale >= stop_.stagnation_tolerance) return false;
    }
    return true;
  }

  InversionReport& report_;
  const InversionProblem& problem_;
  const StoppingRule& stop_;
};

CoefficientField clipped(const std::shared_ptr<const GridBasis>& basis, Eigen::VectorXd c, double upper) {
  return clip_to_bounds(CoefficientField(basis, std::move(c)), upper);
}

double upper_bound(const InversionProblem& problem, const StateField& frozen_base) {
  return problem.kappa_max ? *problem.kappa_max
                           : admissible_bound(frozen_base, problem.model.options.positivity_floor);
}

struct Weighted {
  Eigen::MatrixXd j;
  Eigen::VectorXd sqrt_w;

  Eigen::VectorXd step(const Eigen::MatrixXd& k, const Eigen::VectorXd& r, double alpha) const {
    return regularized_step(sqrt_w.asDiagonal() * k, sqrt_w.cwiseProduct(r), alpha);
  }
};

double default_alpha0(Alpha0Rule rule, const Weighted& wj, const Eigen::VectorXd& r) {
  double a = 0.0;
  if (rule == Alpha0Rule::Residual) {
    a = (wj.j.transpose() * (wj.sqrt_w.array().square().matrix().cwiseProduct(r))).cwiseAbs().maxCoeff();
  } else {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(wj.sqrt_w.asDiagonal() * wj.j);
    if (svd.singularValues().size() > 0) a = svd.singularValues()(0) * svd.singularValues()(0);
  }
  return a > 0.0 ? a : 1.0;
}

}  // namespace

InversionReport newton_lm_run(const InversionProblem& problem, const CoefficientField& init,
                              const NewtonOptions& options) {
  problem.validate();
  options.stop.validate();
  InversionReport report;
  report.method = options.frozen ? "newton-frozen" : "newton";
  Tracker tracker(report, problem, options.stop);
  const auto& sampling = problem.observation.sampling;

  auto jacobian_of = [&](const Linearization& lin) {
    return Weighted{lin.jacobian(problem.observation).values, sampling.weights.cwiseSqrt()};
  };
  const Linearization frozen(problem.model, problem.frozen_point(), problem.basis);
  Weighted wj = jacobian_of(frozen);
  const double upper = upper_bound(problem, frozen.base());

  CoefficientField field = init;
  Eigen::VectorXd r = problem.data.values - predict(problem, field.coefficients());
  if (tracker.record(field, sampling.norm(r))) return report;

  RegularizationSchedule schedule{options.alpha0 ? *options.alpha0 : default_alpha0(options.alpha0_rule, wj, r), options.theta};
  schedule.validate();
  for (int n = 0;; ++n) {
    if (!options.frozen && n > 0) wj = jacobian_of(Linearization(problem.model, field.samples(), problem.basis));
    const Eigen::VectorXd step = wj.step(wj.j, r, schedule.alpha(n));
    field = clipped(problem.basis, field.coefficients() + step, upper);
    r = problem.data.values - predict(problem, field.coefficients());
    if (tracker.record(field, sampling.norm(r))) break;
  }
  return report;
}

InversionReport halley_run(const InversionProblem& problem, const CoefficientField& init,
                           const HalleyOptions& options) {
  problem.validate();
  options.stop.validate();
  InversionReport report;
  report.method = "halley-frozen";
  Tracker tracker(report, problem, options.stop);
  const auto& sampling = problem.observation.sampling;

  const Linearization lin(problem.model, problem.frozen_point(), problem.basis);
  const Weighted wj{lin.jacobian(problem.observation).values, sampling.weights.cwiseSqrt()};
  const double upper = upper_bound(problem, lin.base());

  CoefficientField field = init;
  Eigen::VectorXd r = problem.data.values - predict(problem, field.coefficients());
  if (tracker.record(field, sampling.norm(r))) return report;

  RegularizationSchedule predictor{options.alpha0 ? *options.alpha0 : default_alpha0(options.alpha0_rule, wj, r), options.theta};
  RegularizationSchedule corrector{options.corrector_alpha0.value_or(predictor.alpha0), options.theta};
  predictor.validate();
  corrector.validate();
  for (int n = 0;; ++n) {
    const Eigen::VectorXd d = wj.step(wj.j, r, predictor.alpha(n));
    const Eigen::MatrixXd h = lin.directional_hessian(Direction::from_coefficients(*problem.basis, d),
                                                      problem.observation).values;
    const Eigen::VectorXd step = wj.step(wj.j + 0.5 * h, r, corrector.alpha(n));
    field = clipped(problem.basis, field.coefficients() + step, upper);
    r = problem.data.values - predict(problem, field.coefficients());
    if (tracker.record(field, sampling.norm(r))) break;
  }
  return report;
}

InversionReport landweber_run(const InversionProblem& problem, const CoefficientField& init,
                              const LandweberOptions& options) {
  problem.validate();
  options.stop.validate();
  if (options.step && !(*options.step > 0.0)) throw ConfigError("Landweber step must be positive");
  if (options.smoothing == 1 && !options.step) throw ConfigError("automatic Landweber step requires smoothing 0");

  const auto& model = problem.model;
  const auto& time = model.grids.time;
  const Eigen::Index node = problem.observation.node;
  const auto& sampling = problem.observation.sampling;
  const TimeTrace target = problem.smoothed.value_or(problem.data);
  if (target.size() != time.levels())
    throw GridMismatch("Landweber needs data on every solver level; supply smoothed data");

  InversionReport report;
  report.method = options.frozen ? "landweber-frozen" : "landweber";
  Tracker tracker(report, problem, options.stop);

  const Linearization frozen(model, problem.frozen_point(), problem.basis);
  const double upper = upper_bound(problem, frozen.base());
  // auto step: 0.9 / sigma_max^2 of the Jacobian where the gradient is taken
  const Observation full{node, TraceSampling::all_levels(time)};
  auto auto_step = [&](const Linearization& lin) {
    return 0.9 / power_iteration_sigma2(lin.jacobian(full).values, full.sampling.weights);
  };
  const double frozen_mu = options.step ? *options.step : auto_step(frozen);
  const Eigen::MatrixXd et_w = problem.basis->matrix().transpose() * model.grids.space.weights().asDiagonal();

  CoefficientField field = init;
  double initial = 0.0;
  for (int n = 0;; ++n) {
    std::optional<Linearization> current;
    StateField state;
    if (options.frozen) {
      state = solve_forward(model, field.samples());
    } else {
      current.emplace(model, field.samples(), problem.basis);
      state = current->base();
    }
    const Eigen::VectorXd trace = state.history(node);
    const double res = sampling.norm(problem.data.values - sampling.apply(trace));
    if (n == 0) initial = res;
    if (res > 10.0 * initial && initial > 0.0) throw Divergence("Landweber residual grew tenfold");
    if (tracker.record(field, res)) break;

    const TimeTrace misfit{time.times(), target.values - trace, 0.0, TraceOrigin::Model};
    const Linearization& lin = options.frozen ? frozen : *current;
    const double mu = (options.frozen || options.step) ? frozen_mu : auto_step(lin);
    const Eigen::VectorXd g = lin.adjoint_apply(misfit, node, options.smoothing).samples;
    field = clipped(problem.basis, field.coefficients() + mu * (et_w * g), upper);
  }
  return report;
}

Direction tikhonov_gradient(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa,
                            const Eigen::Ref<const Eigen::VectorXd>& prior, double alpha, const TimeTrace& data,
                            Eigen::Index obs_node, int smoothing) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  if (prior.size() != kappa.size()) throw GridMismatch("prior and kappa differ in size");
  const Linearization lin(model, kappa);
  const TimeTrace misfit{data.times, lin.base().history(obs_node) - data.values, 0.0, TraceOrigin::Model};
  Direction g = lin.adjoint_apply(misfit, obs_node, smoothing);
  g.samples += alpha * (kappa - prior);
  return g;
}

}  // namespace westinv
