#include "westinv/basisrep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "westinv/errors.hpp"

namespace westinv {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Gaussian: return "gauss";
    case BasisKind::Hat: return "hat";
    case BasisKind::Haar: return "haar";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "gauss" || name == "gaussian") return BasisKind::Gaussian;
  if (name == "hat") return BasisKind::Hat;
  if (name == "haar") return BasisKind::Haar;
  throw ConfigError("unknown basis kind '" + name + "'");
}

BasisSet BasisSet::gaussian(Eigen::Index m, std::optional<double> sigma, double left, double right) {
  BasisSet b = hat(m, left, right);
  b.kind_ = BasisKind::Gaussian;
  if (m == 1) {
    b.sigma_ = sigma.value_or((right - left) * (right - left));
  } else {
    const double spacing = b.nodes_(1) - b.nodes_(0);
    // adjacent bumps cross at exp(-1)
    b.sigma_ = sigma.value_or(spacing * spacing);
  }
  if (!(b.sigma_ > 0.0)) throw ConfigError("gaussian width must be positive");
  return b;
}

BasisSet BasisSet::hat(Eigen::Index m, double left, double right) {
  if (m < 1) throw ConfigError("basis size must be at least 1");
  BasisSet b;
  b.kind_ = BasisKind::Hat;
  b.size_ = m;
  b.left_ = left;
  b.right_ = right;
  if (m == 1)
    b.nodes_ = Eigen::VectorXd::Constant(1, 0.5 * (left + right));
  else
    b.nodes_ = Eigen::VectorXd::LinSpaced(m, left, right);
  return b;
}

BasisSet BasisSet::haar(Eigen::Index m, double left, double right) {
  if (m < 1) throw ConfigError("basis size must be at least 1");
  BasisSet b;
  b.kind_ = BasisKind::Haar;
  b.size_ = m;
  b.left_ = left;
  b.right_ = right;
  const double h = (right - left) / static_cast<double>(m);
  b.nodes_ = Eigen::VectorXd::LinSpaced(m, left + 0.5 * h, right - 0.5 * h);  // cell midpoints
  return b;
}

BasisSet BasisSet::make(BasisKind kind, Eigen::Index m, std::optional<double> sigma) {
  switch (kind) {
    case BasisKind::Gaussian: return gaussian(m, sigma);
    case BasisKind::Hat: return hat(m);
    case BasisKind::Haar: return haar(m);
  }
  throw ConfigError("unknown basis kind");
}

Eigen::VectorXd BasisSet::breakpoints() const {
  if (kind_ == BasisKind::Haar) return Eigen::VectorXd::LinSpaced(size_ + 1, left_, right_);
  return nodes_;
}

double BasisSet::operator()(Eigen::Index j, double x) const {
  switch (kind_) {
    case BasisKind::Gaussian: {
      const double d = x - nodes_(j);
      return std::exp(-d * d / sigma_);
    }
    case BasisKind::Hat: {
      if (size_ == 1) return 1.0;
      const double h = nodes_(1) - nodes_(0);
      return std::max(0.0, 1.0 - std::abs(x - nodes_(j)) / h);
    }
    case BasisKind::Haar: {
      const double h = (right_ - left_) / static_cast<double>(size_);
      auto cell = static_cast<Eigen::Index>(std::floor((x - left_) / h + 1e-9));
      cell = std::clamp<Eigen::Index>(cell, 0, size_ - 1);
      return cell == j ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

Eigen::MatrixXd evaluate_basis(const BasisSet& basis, const SpatialGrid& grid) {
  Eigen::MatrixXd e(grid.size(), basis.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    for (Eigen::Index j = 0; j < basis.size(); ++j) e(i, j) = basis(j, grid.node(i));
  return e;
}

GridBasis::GridBasis(BasisSet basis, SpatialGrid grid)
    : basis_(std::move(basis)), grid_(grid), matrix_(evaluate_basis(basis_, grid_)) {
  const Eigen::MatrixXd gram = matrix_.transpose() * matrix_;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
  normal_.compute(gram);
}

Projection GridBasis::project(const Eigen::Ref<const Eigen::VectorXd>& samples) const {
  if (samples.size() != grid_.size()) throw GridMismatch("samples are not on the basis grid");
  if (grid_.size() < basis_.size()) throw RankDeficient("fewer grid nodes than basis functions");
  if (!(condition_ <= 1e12)) throw RankDeficient("basis normal matrix is numerically singular");
  Projection out;
  out.coefficients = normal_.solve(matrix_.transpose() * samples);
  const double scale = samples.norm();
  out.relative_residual = scale > 0.0 ? (matrix_ * out.coefficients - samples).norm() / scale : 0.0;
  return out;
}

Projection project(const BasisSet& basis, const SpatialGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& samples) {
  return GridBasis(basis, grid).project(samples);
}

CoefficientField::CoefficientField(std::shared_ptr<const GridBasis> basis, Eigen::VectorXd coefficients)
    : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != basis_->size()) throw GridMismatch("coefficient count does not match the basis");
  samples_ = basis_->synthesize(coefficients_);
}

CoefficientField CoefficientField::zero(std::shared_ptr<const GridBasis> basis) {
  const Eigen::Index m = basis->size();
  return CoefficientField(std::move(basis), Eigen::VectorXd::Zero(m));
}

CoefficientField CoefficientField::from_samples(std::shared_ptr<const GridBasis> basis,
                                                const Eigen::Ref<const Eigen::VectorXd>& samples) {
  auto c = basis->project(samples).coefficients;
  return CoefficientField(std::move(basis), std::move(c));
}

CoefficientField clip_nonnegative(const CoefficientField& field) {
  if (field.samples().minCoeff() >= 0.0) return field;
  const Eigen::VectorXd clipped = field.samples().cwiseMax(0.0);
  Eigen::VectorXd c = field.basis()->project(clipped).coefficients.cwiseMax(0.0);
  return CoefficientField(field.basis(), std::move(c));
}

CoefficientField clip_to_bounds(const CoefficientField& field, double upper) {
  if (!(upper > 0.0)) throw ConfigError("upper bound must be positive");
  const Eigen::VectorXd& s = field.samples();
  if (s.minCoeff() >= 0.0 && s.maxCoeff() <= upper) return field;
  const Eigen::VectorXd clipped = s.cwiseMax(0.0).cwiseMin(upper);
  Eigen::VectorXd c = field.basis()->project(clipped).coefficients.cwiseMax(0.0).cwiseMin(upper);
  // overlapping gaussians can still sum past the bound
  const double peak = field.basis()->synthesize(c).maxCoeff();
  if (peak > upper) c *= upper / peak;
  return CoefficientField(field.basis(), std::move(c));
}

}  // namespace westinv
