#pragma once

// First and second derivatives of the forward map kappa -> p(x_obs, .), its
// adjoint, and the dense Jacobian / directional Hessian over a basis.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "westinv/basisrep.hpp"
#include "westinv/westfield.hpp"

namespace westinv {

/// A perturbation d_kappa sampled on the spatial grid.
struct Direction {
  Eigen::VectorXd samples;
  std::optional<Eigen::VectorXd> coefficients;

  static Direction from_coefficients(const GridBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& c) {
    return {basis.synthesize(c), Eigen::VectorXd(c)};
  }
};

/// Linear map from the trace at every solver time level to data samples, plus
/// the quadrature weights defining the data-space inner product.
struct TraceSampling {
  Eigen::MatrixXd op;       // samples x levels
  Eigen::VectorXd weights;  // samples
  Eigen::VectorXd times;

  /// Every time level, trapezoid weights: the L2(0,T) pairing.
  static TraceSampling all_levels(const TimeGrid& time);
  /// `count` equally spaced instants on [0,T] (endpoints included), read by
  /// linear interpolation between levels; unit weights.
  static TraceSampling uniform(const TimeGrid& time, Eigen::Index count);

  Eigen::Index size() const { return op.rows(); }
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& trace) const { return op * trace; }
  double dot(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) const {
    return (a.array() * b.array() * weights.array()).sum();
  }
  double norm(const Eigen::Ref<const Eigen::VectorXd>& v) const { return std::sqrt(dot(v, v)); }
};

/// Where and how the state is observed.
struct Observation {
  Eigen::Index node = 0;
  TraceSampling sampling;

  Eigen::VectorXd operator()(const StateField& state) const { return sampling.apply(state.history(node)); }
};

struct JacobianMatrix {
  Eigen::MatrixXd values;   // samples x basis size
  Eigen::VectorXd kappa0;   // grid samples of the linearization point
};

struct DirectionalHessianMatrix {
  Eigen::MatrixXd values;   // samples x basis size
  Direction direction;
};

/// z = G'(kappa) d_kappa, from ((1 - 2 kappa p) z)_tt + b A z_t + c2 A z = d_kappa (p^2)_tt.
StateField solve_sensitivity(const ForwardModel& model, const StateField& base,
                             const Eigen::Ref<const Eigen::VectorXd>& kappa, const Direction& direction);

/// Adjoint state a for a residual y given on every solver time level:
///   (1 - 2 kappa p) a_tt - b A a_t + c2 A a = 0,  a(T) = a_t(T) = 0,
/// with y entering as a boundary flux at the observation node (weak form
/// right-hand side y * phi(x_obs)). Only boundary observation nodes are supported.
StateField solve_adjoint(const ForwardModel& model, const StateField& base,
                         const Eigen::Ref<const Eigen::VectorXd>& kappa, const TimeTrace& residual,
                         Eigen::Index obs_node);

/// g = \int_0^T (p^2)_tt a dt (trapezoid); for smoothing == 1 returns A^{-1} g.
Direction apply_gradient(const StateField& adjoint, const Eigen::MatrixXd& psq_tt, int smoothing,
                         const Grids& grids, const BoundaryCondition& bc);

/// w = G''(kappa0)[d1, d2] from
///   ((1 - 2 kappa0 p0) w)_tt + b A w_t + c2 A w = 2 (kappa0 z1 z2 + p0 (d1 z2 + d2 z1))_tt.
StateField solve_second_derivative(const ForwardModel& model, const StateField& base,
                                   const Eigen::Ref<const Eigen::VectorXd>& kappa0, const StateField& z1,
                                   const StateField& z2, const Direction& d1, const Direction& d2);

/// Forward state at a fixed kappa together with the derivative solves built on it.
/// Sensitivities of the basis functions are cached on first use.
class Linearization {
 public:
  Linearization(ForwardModel model, Eigen::VectorXd kappa0, std::shared_ptr<const GridBasis> basis = nullptr);

  const ForwardModel& model() const { return model_; }
  const Eigen::VectorXd& kappa() const { return kappa_; }
  const StateField& base() const { return base_; }
  const Eigen::MatrixXd& square_tt() const { return square_tt_; }

  StateField sensitivity(const Direction& d) const { return solve_sensitivity(model_, base_, kappa_, d); }
  StateField adjoint(const TimeTrace& residual, Eigen::Index obs_node) const {
    return solve_adjoint(model_, base_, kappa_, residual, obs_node);
  }
  /// F'(kappa)^* y as an L2 (smoothing 0) or H^1 (smoothing 1) gradient density.
  Direction adjoint_apply(const TimeTrace& residual, Eigen::Index obs_node, int smoothing = 0) const;

  StateField second_derivative(const StateField& z1, const StateField& z2, const Direction& d1,
                               const Direction& d2) const {
    return solve_second_derivative(model_, base_, kappa_, z1, z2, d1, d2);
  }

  const std::vector<StateField>& basis_sensitivities() const;
  JacobianMatrix jacobian(const Observation& obs) const;
  DirectionalHessianMatrix directional_hessian(const Direction& d, const Observation& obs) const;

 private:
  ForwardModel model_;
  Eigen::VectorXd kappa_;
  std::shared_ptr<const GridBasis> basis_;
  StateField base_;
  Eigen::MatrixXd square_tt_;
  mutable std::vector<StateField> basis_states_;
};

JacobianMatrix assemble_jacobian(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa0,
                                 std::shared_ptr<const GridBasis> basis, const Observation& obs);

DirectionalHessianMatrix assemble_directional_hessian(const Direction& d, const ForwardModel& model,
                                                      const Eigen::Ref<const Eigen::VectorXd>& kappa0,
                                                      std::shared_ptr<const GridBasis> basis,
                                                      const Observation& obs);

/// Central differences (F(c0 + h e_j) - F(c0 - h e_j)) / 2h of an arbitrary map.
Eigen::MatrixXd fd_jacobian_oracle(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                                   const Eigen::Ref<const Eigen::VectorXd>& c0, double h);

/// Same oracle on the observed forward map kappa = kappa0 + E c, two nonlinear solves per column.
JacobianMatrix fd_jacobian_oracle(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa0,
                                  const GridBasis& basis, double h, const Observation& obs);

/// Runs body(0..count-1) on up to hardware_concurrency threads.
void parallel_for(Eigen::Index count, const std::function<void(Eigen::Index)>& body);

}  // namespace westinv
