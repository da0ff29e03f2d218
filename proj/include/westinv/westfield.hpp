#pragma once

// Forward solver for the 1-D Westervelt equation in pressure form,
//
//   p_tt - c2 p_xx - b p_xxt = kappa(x) (p^2)_tt + r,   p(.,0) = p_t(.,0) = 0,
//
// advanced in its time-integrated ("parabolic with memory") form
//
//   (p - kappa p^2)_t - b p_xx - c2 \int_0^t p_xx = R,   R = \int_0^t r,
//
// by Crank-Nicolson with a trapezoidal memory integral. The quadratic term is
// resolved each step by a fixed-point loop on the midpoint factor 1 - kappa (p^{n+1} + p^n).

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "westinv/grid.hpp"
#include "westinv/operators.hpp"
#include "westinv/trace.hpp"

namespace westinv {

struct MaterialParams {
  double c2 = 1.0;  // squared sound speed
  double b = 0.1;   // sound diffusivity

  void validate() const;
  bool operator==(const MaterialParams&) const = default;
};

struct SolverOptions {
  double inner_tolerance = 1e-10;
  int inner_max_iterations = 20;
  double positivity_floor = 0.25;  // lower bound enforced on 1 - 2 kappa p

  void validate() const;
};

/// Space-time sampled forcing r(x_i, t_n), one column per time level.
struct SourceTerm {
  Eigen::MatrixXd values;
  std::string tag;  // closed-form description for manufactured sources
};

/// Space-time samples of a PDE solution; columns are time levels.
struct StateField {
  Grids grids;
  Eigen::MatrixXd values;
  Eigen::MatrixXd rate;  // first time derivative, same shape

  Eigen::Index nodes() const { return values.rows(); }
  Eigen::Index levels() const { return values.cols(); }

  /// Time history at spatial node `node`.
  Eigen::VectorXd history(Eigen::Index node) const { return values.row(node).transpose(); }
};

/// A profile f(x) with its first two derivatives.
struct SpatialProfile {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::string tag;

  static SpatialProfile quarter_sine(double amplitude = 1.0);  // A sin(pi x / 2)
  static SpatialProfile half_sine(double amplitude = 1.0);     // A sin(pi x)
  static SpatialProfile raised_cosine(double amplitude = 1.0); // A (1 + cos(pi x) / 2)
  static SpatialProfile by_name(const std::string& name, double amplitude);
};

/// A time profile beta(t) with its first two derivatives.
struct TimeProfile {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::string tag;

  static TimeProfile power(int k);  // t^k, k >= 2 keeps homogeneous initial data
  static TimeProfile zero();
  static TimeProfile by_name(const std::string& name);
};

/// Everything the forward map needs besides kappa.
struct ForwardModel {
  Grids grids;
  MaterialParams params;
  BoundaryCondition bc;
  SourceTerm source;
  SolverOptions options;
};

StateField solve_forward(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa);

TimeTrace observe(const StateField& state, double point);

/// r = f beta'' + A f (c2 beta + b beta') - kappa f^2 (beta^2)'', with A = -d^2/dx^2,
/// so that p = f beta solves the forward problem exactly in the continuum.
SourceTerm manufactured_source(const SpatialProfile& f, const TimeProfile& beta, const MaterialParams& params,
                               const Grids& grids, const BoundaryCondition& bc,
                               const std::optional<Eigen::VectorXd>& kappa = std::nullopt);

/// Discrete (p^2)_tt for every node and time level.
Eigen::MatrixXd second_time_derivative_of_square(const StateField& state);

/// Solves (m u - G)_t = b u_xx + c2 \int_0^t u_xx with u(.,0) = 0 by the integrated
/// Crank-Nicolson step of the forward solver. `mass` and `forcing` hold m and G
/// at every time level.
Eigen::MatrixXd solve_integrated_linear(const Grids& grids, const MaterialParams& params,
                                        const BoundaryCondition& bc, const Eigen::MatrixXd& mass,
                                        const Eigen::MatrixXd& forcing);

/// CSV with header `t,x0,...` and one row per time level.
void write_state_csv(std::ostream& out, const StateField& state);

}  // namespace westinv
