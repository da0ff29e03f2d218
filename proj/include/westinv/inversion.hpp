#pragma once

// Iterative regularized reconstruction of kappa from a boundary time trace.

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "westinv/basisrep.hpp"
#include "westinv/tangent_adjoint.hpp"
#include "westinv/trace.hpp"
#include "westinv/westfield.hpp"

namespace westinv {

/// alpha_n = theta^n alpha_0.
struct RegularizationSchedule {
  double alpha0 = 1.0;
  double theta = 0.5;

  double alpha(int n) const { return alpha0 * std::pow(theta, n); }
  void validate() const;
};

struct StoppingRule {
  double tau = 2.0;
  double delta = 0.0;
  int max_iterations = 50;
  double stagnation_tolerance = 1e-10;
  int stagnation_window = 5;

  double threshold() const { return tau * delta; }
  void validate() const;
};

enum class StopReason { Discrepancy, MaxIter, Stagnation };
std::string to_string(StopReason reason);

/// Entry k of every list refers to iterate k; iterate 0 is the initial guess.
struct InversionReport {
  std::string method;
  std::vector<Eigen::VectorXd> iterates;  // coefficient vectors
  std::vector<double> residuals;
  std::vector<double> errors_linf;        // empty without a truth
  std::vector<double> errors_l2;
  std::optional<int> stop_index;          // first k with residual <= tau delta
  StopReason stop_reason = StopReason::MaxIter;
  double threshold = 0.0;

  int iterations() const { return static_cast<int>(iterates.size()) - 1; }
  const Eigen::VectorXd& final_coefficients() const { return iterates.back(); }
};

/// Smallest k with norms[k] <= tau delta.
std::optional<int> discrepancy_stop(const std::vector<double>& norms, double delta, double tau);

/// Everything a reconstruction needs besides the method and its parameters.
struct InversionProblem {
  ForwardModel model;
  std::shared_ptr<const GridBasis> basis;
  Observation observation;           // node plus the measurement sampling
  TimeTrace data;                    // h^delta at the measurement instants
  std::optional<TimeTrace> smoothed; // data on every solver level, used by Landweber
  Eigen::VectorXd kappa0;            // frozen linearization point; empty means zero
  std::optional<Eigen::VectorXd> truth;  // grid samples, for error histories
  std::optional<double> kappa_max;       // iterate upper bound; empty: admissible_bound at the frozen point

  Eigen::VectorXd frozen_point() const;
  void validate() const;
};

/// Upper bound for iterates keeping 1 - 2 kappa p >= epsilon with a safety margin,
/// measured on the state `base`: margin * (1 - epsilon) / (2 max|p|).
double admissible_bound(const StateField& base, double epsilon, double margin = 0.8);

/// Observed trace at the measurement instants for coefficients c.
Eigen::VectorXd predict(const InversionProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& c);

/// Errors on grid samples: max norm and trapezoid L2(0,1) norm.
double error_linf(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);
double error_l2(const SpatialGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b);

struct LandweberOptions {
  bool frozen = true;
  std::optional<double> step;  // auto: 0.9 / sigma_max^2 of the Jacobian at the gradient point, per iteration unless frozen
  int smoothing = 0;
  StoppingRule stop;
};

InversionReport landweber_run(const InversionProblem& problem, const CoefficientField& init,
                              const LandweberOptions& options);

/// How alpha_0 is chosen when not given explicitly.
enum class Alpha0Rule {
  Spectral,  // sigma_1(J)^2, the scale of J^T J
  Residual,  // |J^T r_0|_inf
};
std::string to_string(Alpha0Rule rule);
Alpha0Rule alpha0_rule_from_string(const std::string& name);

struct NewtonOptions {
  bool frozen = true;
  std::optional<double> alpha0;
  double theta = 0.5;
  StoppingRule stop;
  Alpha0Rule alpha0_rule = Alpha0Rule::Spectral;
};

InversionReport newton_lm_run(const InversionProblem& problem, const CoefficientField& init,
                              const NewtonOptions& options);

struct HalleyOptions {
  std::optional<double> alpha0;            // predictor
  std::optional<double> corrector_alpha0;  // defaults to the predictor value
  double theta = 0.5;
  StoppingRule stop;
  Alpha0Rule alpha0_rule = Alpha0Rule::Spectral;
};

/// Frozen Halley: Newton predictor d, then a corrector with system matrix J + H_d / 2.
InversionReport halley_run(const InversionProblem& problem, const CoefficientField& init,
                           const HalleyOptions& options);

/// Solves (J^T J + alpha I) x = J^T r. Throws LinearSolveFailure when the system
/// is numerically singular.
Eigen::VectorXd regularized_step(const Eigen::Ref<const Eigen::MatrixXd>& j, const Eigen::Ref<const Eigen::VectorXd>& r,
                                 double alpha);

/// F'(kappa)^*(F(kappa) - h) + alpha (kappa - prior) for data h on every solver level.
Direction tikhonov_gradient(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa,
                            const Eigen::Ref<const Eigen::VectorXd>& prior, double alpha, const TimeTrace& data,
                            Eigen::Index obs_node, int smoothing);

/// Largest eigenvalue of m^T diag(w) m by power iteration.
double power_iteration_sigma2(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::Ref<const Eigen::VectorXd>& w,
                              int iterations = 200);

}  // namespace westinv
