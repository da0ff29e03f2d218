#include "westinv/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "westinv/errors.hpp"

namespace westinv {

std::vector<double> eigenvalues(const BoundaryCondition& bc, int count) {
  if (count < 1) throw ConfigError("eigenvalue count must be positive");
  const BoundaryKind l = bc.left.kind;
  const BoundaryKind r = bc.right.kind;
  if (l == BoundaryKind::Impedance || r == BoundaryKind::Impedance)
    throw Unsupported("no closed-form eigenvalues for impedance conditions");
  if (bc.pure_neumann()) throw Unsupported("pure Neumann conditions are excluded");

  const double shift = (l == BoundaryKind::Dirichlet && r == BoundaryKind::Dirichlet) ? 0.0 : 0.5;
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) {
    const double root = (j - shift) * std::numbers::pi;
    out[static_cast<std::size_t>(j - 1)] = root * root;
  }
  return out;
}

PolePair poles(double b, double c2, double lambda) {
  if (!(b > 0.0 && c2 > 0.0 && lambda > 0.0)) throw ConfigError("poles need b, c2, lambda > 0");
  const double disc = b * b - 4.0 * c2 / lambda;
  if (disc >= 0.0) {
    // avoid cancellation in -b + sqrt(disc): use the product of roots c2 lambda
    const double q = -b - std::sqrt(disc);
    return {std::complex<double>(2.0 * c2 / q, 0.0), std::complex<double>(0.5 * lambda * q, 0.0)};
  }
  const double re = -0.5 * b * lambda;
  const double im = 0.5 * lambda * std::sqrt(-disc);
  return {{re, im}, {re, -im}};
}

double pole_residual(std::complex<double> s, double b, double c2, double lambda) {
  return std::abs(s * s + b * lambda * s + c2 * lambda) / std::max(1.0, std::norm(s));
}

SpectralData SpectralData::compute(const BoundaryCondition& bc, double b, double c2, int count) {
  SpectralData out;
  out.bc = bc;
  out.lambdas = eigenvalues(bc, count);
  for (double lam : out.lambdas) out.pairs.push_back(poles(b, c2, lam));
  return out;
}

DistinctnessReport pole_distinctness(const SpectralData& spec, double b, double c2) {
  DistinctnessReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();
  const std::size_t n = spec.lambdas.size();
  for (std::size_t j = 0; j < n; ++j) {
    const auto& pj = spec.pairs[j];
    rep.max_residual = std::max({rep.max_residual, pole_residual(pj.plus, b, c2, spec.lambdas[j]),
                                 pole_residual(pj.minus, b, c2, spec.lambdas[j])});
    for (std::size_t k = j + 1; k < n; ++k) {
      const auto& pk = spec.pairs[k];
      const double dp = std::abs(pj.plus - pk.plus) / std::max({1.0, std::abs(pj.plus), std::abs(pk.plus)});
      const double dm = std::abs(pj.minus - pk.minus) / std::max({1.0, std::abs(pj.minus), std::abs(pk.minus)});
      if (spec.lambdas[j] == spec.lambdas[k]) {
        if (dp != 0.0 || dm != 0.0) rep.consistent = false;
        continue;
      }
      rep.min_separation = std::min(rep.min_separation, std::min(dp, dm));
      if (dp <= 1e-10 || dm <= 1e-10) rep.distinct = false;
    }
  }
  return rep;
}

SvdDecay svd_decay(const Eigen::Ref<const Eigen::MatrixXd>& j, std::optional<double> floor) {
  SvdDecay out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  out.singular_values = svd.singularValues();
  const Eigen::Index n = out.singular_values.size();
  if (n == 0 || out.singular_values(0) <= 0.0) return out;

  const double cut = floor.value_or(out.singular_values(0) * static_cast<double>(std::max(j.rows(), j.cols())) *
                                    std::numeric_limits<double>::epsilon());
  while (out.fitted < n && out.singular_values(out.fitted) > cut) ++out.fitted;
  if (out.fitted < 2) {
    out.rate = out.fitted == n ? 1.0 : 0.0;
    return out;
  }
  const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(out.fitted, 0.0, static_cast<double>(out.fitted - 1));
  const Eigen::VectorXd y = out.singular_values.head(out.fitted).array().log();
  const double kbar = k.mean();
  const double ybar = y.mean();
  const double slope = ((k.array() - kbar) * (y.array() - ybar)).sum() / (k.array() - kbar).square().sum();
  out.rate = std::exp(slope);
  return out;
}

std::optional<std::complex<double>> psi_hat_linear_beta(std::complex<double> s) {
  if (std::abs(s) == 0.0) return std::nullopt;
  return 2.0 / s;
}

}  // namespace westinv
