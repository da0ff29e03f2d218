#pragma once

// Dense/banded kernels shared by every solver: the three-point Laplacian with
// its boundary closures, a tridiagonal (Thomas) solver, and time stencils.

#include <Eigen/Dense>

#include <string>

#include "westinv/errors.hpp"
#include "westinv/grid.hpp"

namespace westinv {

enum class BoundaryKind { Dirichlet, Neumann, Impedance };

struct EndCondition {
  BoundaryKind kind = BoundaryKind::Dirichlet;
  double coefficient = 1.0;  // impedance only: d_nu u + coefficient * u = 0

  bool operator==(const EndCondition&) const = default;
};

struct BoundaryCondition {
  EndCondition left{BoundaryKind::Dirichlet};
  EndCondition right{BoundaryKind::Neumann};

  bool pure_neumann() const {
    return left.kind == BoundaryKind::Neumann && right.kind == BoundaryKind::Neumann;
  }
  bool operator==(const BoundaryCondition&) const = default;
};

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& name);

/// Tridiagonal matrix stored by diagonals. Row i reads
/// lower(i) * u(i-1) + diag(i) * u(i) + upper(i) * u(i+1).
template <typename Scalar>
struct Tridiagonal {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector lower;
  Vector diag;
  Vector upper;

  Tridiagonal() = default;
  explicit Tridiagonal(Eigen::Index n)
      : lower(Vector::Zero(n)), diag(Vector::Zero(n)), upper(Vector::Zero(n)) {}

  Eigen::Index size() const { return diag.size(); }

  template <typename Derived>
  Vector operator*(const Eigen::MatrixBase<Derived>& u) const {
    const Eigen::Index n = size();
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar v = diag(i) * u(i);
      if (i > 0) v += lower(i) * u(i - 1);
      if (i + 1 < n) v += upper(i) * u(i + 1);
      out(i) = v;
    }
    return out;
  }

  /// Thomas algorithm without pivoting; the systems built here are diagonally dominant.
  template <typename Derived>
  Vector solve(const Eigen::MatrixBase<Derived>& rhs) const {
    const Eigen::Index n = size();
    Vector c(n), d(n);
    Scalar denom = diag(0);
    if (denom == Scalar(0)) throw LinearSolveFailure("zero pivot in tridiagonal solve");
    c(0) = upper(0) / denom;
    d(0) = rhs(0) / denom;
    for (Eigen::Index i = 1; i < n; ++i) {
      denom = diag(i) - lower(i) * c(i - 1);
      if (denom == Scalar(0)) throw LinearSolveFailure("zero pivot in tridiagonal solve");
      c(i) = (i + 1 < n) ? upper(i) / denom : Scalar(0);
      d(i) = (rhs(i) - lower(i) * d(i - 1)) / denom;
    }
    Vector x(n);
    x(n - 1) = d(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
    return x;
  }
};

/// Three-point approximation of d^2/dx^2 with ghost-node closures. Dirichlet
/// nodes are pinned: their rows are zero and callers hold those values at 0.
/// The matrix is symmetric in the trapezoid-weighted inner product.
template <typename Scalar = double>
class Laplacian1D {
 public:
  Laplacian1D(const SpatialGrid& grid, const BoundaryCondition& bc) : bc_(bc), matrix_(grid.size()) {
    const Eigen::Index n = grid.size();
    const Scalar h = grid.spacing();
    const Scalar ih2 = Scalar(1) / (h * h);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      matrix_.lower(i) = ih2;
      matrix_.diag(i) = -2 * ih2;
      matrix_.upper(i) = ih2;
    }
    close(bc.left, 0, 1, h);
    close(bc.right, n - 1, -1, h);
  }

  const Tridiagonal<Scalar>& matrix() const { return matrix_; }
  const BoundaryCondition& bc() const { return bc_; }
  Eigen::Index size() const { return matrix_.size(); }

  bool pinned(Eigen::Index i) const {
    return (i == 0 && bc_.left.kind == BoundaryKind::Dirichlet) ||
           (i == size() - 1 && bc_.right.kind == BoundaryKind::Dirichlet);
  }

  template <typename Derived>
  typename Tridiagonal<Scalar>::Vector apply(const Eigen::MatrixBase<Derived>& u) const {
    return matrix_ * u;
  }

  /// Builds diag(mass) - scale * L with pinned rows replaced by identity.
  template <typename Derived>
  Tridiagonal<Scalar> shifted(const Eigen::MatrixBase<Derived>& mass, Scalar scale) const {
    Tridiagonal<Scalar> out(size());
    out.lower = -scale * matrix_.lower;
    out.upper = -scale * matrix_.upper;
    out.diag = mass - scale * matrix_.diag;
    for (Eigen::Index i : {Eigen::Index{0}, size() - 1}) {
      if (pinned(i)) {
        out.lower(i) = 0;
        out.upper(i) = 0;
        out.diag(i) = 1;
      }
    }
    return out;
  }

 private:
  // `inward` is +1 at the left end and -1 at the right end.
  void close(const EndCondition& end, Eigen::Index i, int inward, Scalar h) {
    const Scalar ih2 = Scalar(1) / (h * h);
    Scalar& toward = inward > 0 ? matrix_.upper(i) : matrix_.lower(i);
    Scalar& away = inward > 0 ? matrix_.lower(i) : matrix_.upper(i);
    away = 0;
    switch (end.kind) {
      case BoundaryKind::Dirichlet:
        matrix_.diag(i) = 0;
        toward = 0;
        break;
      case BoundaryKind::Neumann:
        matrix_.diag(i) = -2 * ih2;
        toward = 2 * ih2;
        break;
      case BoundaryKind::Impedance:
        matrix_.diag(i) = -2 * ih2 - 2 * end.coefficient / h;
        toward = 2 * ih2;
        break;
    }
  }

  BoundaryCondition bc_;
  Tridiagonal<Scalar> matrix_;
};

/// Second time derivative of each row of `field` (columns are time levels):
/// central differences inside, second-order one-sided four-point stencils at both ends.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> second_time_difference(
    const Eigen::MatrixBase<Derived>& field, typename Derived::Scalar dt) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index levels = field.cols();
  if (levels < 4) throw GridTooCoarse("second time derivative needs at least 3 time steps");
  const Scalar idt2 = Scalar(1) / (dt * dt);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(field.rows(), levels);
  for (Eigen::Index n = 1; n + 1 < levels; ++n)
    out.col(n) = (field.col(n - 1) - 2 * field.col(n) + field.col(n + 1)) * idt2;
  out.col(0) = (2 * field.col(0) - 5 * field.col(1) + 4 * field.col(2) - field.col(3)) * idt2;
  const Eigen::Index e = levels - 1;
  out.col(e) = (2 * field.col(e) - 5 * field.col(e - 1) + 4 * field.col(e - 2) - field.col(e - 3)) * idt2;
  return out;
}

/// First time derivative: central inside, second-order one-sided at the ends.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> first_time_difference(
    const Eigen::MatrixBase<Derived>& field, typename Derived::Scalar dt) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index levels = field.cols();
  if (levels < 3) throw GridTooCoarse("time derivative needs at least 2 time steps");
  const Scalar i2dt = Scalar(1) / (2 * dt);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(field.rows(), levels);
  for (Eigen::Index n = 1; n + 1 < levels; ++n) out.col(n) = (field.col(n + 1) - field.col(n - 1)) * i2dt;
  out.col(0) = (-3 * field.col(0) + 4 * field.col(1) - field.col(2)) * i2dt;
  const Eigen::Index e = levels - 1;
  out.col(e) = (3 * field.col(e) - 4 * field.col(e - 1) + field.col(e - 2)) * i2dt;
  return out;
}

/// Running trapezoidal integral along time (columns), starting from zero.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> cumulative_trapezoid(
    const Eigen::MatrixBase<Derived>& field, typename Derived::Scalar dt) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(field.rows(), field.cols());
  out.col(0).setZero();
  for (Eigen::Index n = 1; n < field.cols(); ++n)
    out.col(n) = out.col(n - 1) + 0.5 * dt * (field.col(n - 1) + field.col(n));
  return out;
}

}  // namespace westinv
