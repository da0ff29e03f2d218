#pragma once

// Spectral diagnostics of the linearized problem: Laplacian eigenvalues,
// resolvent poles and singular-value decay of a Jacobian.

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

#include "westinv/operators.hpp"

namespace westinv {

/// First `count` eigenvalues of A = -d^2/dx^2 on [0, 1], ascending.
/// Dirichlet-Dirichlet and Dirichlet-Neumann (either orientation) only.
std::vector<double> eigenvalues(const BoundaryCondition& bc, int count);

struct PolePair {
  std::complex<double> plus;   // root nearer zero; tends to -c2/b
  std::complex<double> minus;  // tends to -b lambda
};

/// Roots of s^2 + b lambda s + c2 lambda.
PolePair poles(double b, double c2, double lambda);

/// |s^2 + b lambda s + c2 lambda| / max(1, |s|^2).
double pole_residual(std::complex<double> s, double b, double c2, double lambda);

struct SpectralData {
  std::vector<double> lambdas;
  BoundaryCondition bc;
  std::vector<PolePair> pairs;

  static SpectralData compute(const BoundaryCondition& bc, double b, double c2, int count);
};

struct DistinctnessReport {
  bool distinct = true;       // distinct lambdas map to distinct poles
  bool consistent = true;     // equal lambdas map to equal poles
  double max_residual = 0.0;  // worst pole_residual over all pairs
  double min_separation = 0.0;  // smallest scaled |p_j - p_k| over distinct lambdas
};

DistinctnessReport pole_distinctness(const SpectralData& spec, double b, double c2);

struct SvdDecay {
  Eigen::VectorXd singular_values;  // descending
  double rate = 1.0;                // q = exp(slope of log sigma_k)
  Eigen::Index fitted = 0;          // number of values above the noise floor
};

/// Fits log sigma_k against k over sigma_k > floor, where floor defaults to
/// sigma_1 * max(rows, cols) * machine epsilon.
SvdDecay svd_decay(const Eigen::Ref<const Eigen::MatrixXd>& j, std::optional<double> floor = std::nullopt);

/// Laplace transform of the source time profile at s, where it is closed form.
/// Only beta(t) = t is handled: (beta^2)'' = 2, transform 2 / s.
std::optional<std::complex<double>> psi_hat_linear_beta(std::complex<double> s);

}  // namespace westinv
