#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>

#include "westinv/grid.hpp"

namespace westinv {

enum class BasisKind { Gaussian, Hat, Haar };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// Finite family of profiles used to parameterize kappa.
///
/// Gaussian and hat functions are centered at `nodes()`; Haar functions are
/// indicators of the `size()` equal cells between consecutive `breakpoints()`.
class BasisSet {
 public:
  static BasisSet gaussian(Eigen::Index m, std::optional<double> sigma = std::nullopt, double left = 0.0,
                           double right = 1.0);
  static BasisSet hat(Eigen::Index m, double left = 0.0, double right = 1.0);
  static BasisSet haar(Eigen::Index m, double left = 0.0, double right = 1.0);
  static BasisSet make(BasisKind kind, Eigen::Index m, std::optional<double> sigma = std::nullopt);

  BasisKind kind() const { return kind_; }
  Eigen::Index size() const { return size_; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  Eigen::VectorXd breakpoints() const;

  double operator()(Eigen::Index j, double x) const;

 private:
  BasisKind kind_ = BasisKind::Hat;
  Eigen::Index size_ = 1;
  double sigma_ = 0.0;
  double left_ = 0.0;
  double right_ = 1.0;
  Eigen::VectorXd nodes_;
};

/// Matrix E with E(i, j) = b_j(x_i).
Eigen::MatrixXd evaluate_basis(const BasisSet& basis, const SpatialGrid& grid);

struct Projection {
  Eigen::VectorXd coefficients;
  double relative_residual = 0.0;  // |E c - s| / |s|, 0 when s = 0
};

/// A basis evaluated on a grid, with a factorized normal matrix for projections.
class GridBasis {
 public:
  GridBasis(BasisSet basis, SpatialGrid grid);

  const BasisSet& basis() const { return basis_; }
  const SpatialGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  Eigen::Index size() const { return basis_.size(); }

  Eigen::VectorXd synthesize(const Eigen::Ref<const Eigen::VectorXd>& coefficients) const {
    return matrix_ * coefficients;
  }

  /// Least-squares coefficients of `samples`. Throws RankDeficient when the
  /// normal matrix has condition number above 1e12.
  Projection project(const Eigen::Ref<const Eigen::VectorXd>& samples) const;

 private:
  BasisSet basis_;
  SpatialGrid grid_;
  Eigen::MatrixXd matrix_;
  Eigen::LDLT<Eigen::MatrixXd> normal_;
  double condition_ = 0.0;
};

Projection project(const BasisSet& basis, const SpatialGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& samples);

/// kappa as basis coefficients together with its grid samples.
class CoefficientField {
 public:
  CoefficientField(std::shared_ptr<const GridBasis> basis, Eigen::VectorXd coefficients);

  static CoefficientField zero(std::shared_ptr<const GridBasis> basis);
  static CoefficientField from_samples(std::shared_ptr<const GridBasis> basis,
                                       const Eigen::Ref<const Eigen::VectorXd>& samples);

  const std::shared_ptr<const GridBasis>& basis() const { return basis_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& samples() const { return samples_; }

 private:
  std::shared_ptr<const GridBasis> basis_;
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd samples_;
};

/// Truncates negative grid samples to zero and re-represents the result in the
/// basis. The returned field has nonnegative coefficients, hence nonnegative
/// samples for all three basis kinds. Fields that are already nonnegative on
/// the grid are returned unchanged.
CoefficientField clip_nonnegative(const CoefficientField& field);

/// As clip_nonnegative, additionally truncating samples and coefficients above
/// at `upper`. Fields already inside [0, upper] on the grid are returned unchanged.
CoefficientField clip_to_bounds(const CoefficientField& field, double upper);

}  // namespace westinv
