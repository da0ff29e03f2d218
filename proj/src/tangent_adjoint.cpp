#include "westinv/tangent_adjoint.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "westinv/errors.hpp"

namespace westinv {

TraceSampling TraceSampling::all_levels(const TimeGrid& time) {
  TraceSampling s;
  s.op = Eigen::MatrixXd::Identity(time.levels(), time.levels());
  s.weights = time.weights();
  s.times = time.times();
  return s;
}

TraceSampling TraceSampling::uniform(const TimeGrid& time, Eigen::Index count) {
  if (count < 2) throw GridTooCoarse("need at least two trace samples");
  TraceSampling s;
  s.times = Eigen::VectorXd::LinSpaced(count, 0.0, time.horizon());
  s.op = Eigen::MatrixXd::Zero(count, time.levels());
  s.weights = Eigen::VectorXd::Ones(count);
  const double dt = time.step();
  for (Eigen::Index k = 0; k < count; ++k) {
    const double pos = s.times(k) / dt;
    auto lo = static_cast<Eigen::Index>(std::floor(pos + 1e-9));
    lo = std::clamp<Eigen::Index>(lo, 0, time.steps());
    const double frac = std::max(0.0, pos - static_cast<double>(lo));
    if (lo == time.steps() || frac < 1e-9) {
      s.op(k, lo) = 1.0;
    } else {
      s.op(k, lo) = 1.0 - frac;
      s.op(k, lo + 1) = frac;
    }
  }
  return s;
}

namespace {

Eigen::MatrixXd mass_field(const StateField& base, const Eigen::VectorXd& kappa, double floor) {
  Eigen::MatrixXd mass = (1.0 - 2.0 * (base.values.array().colwise() * kappa.array())).matrix();
  if (mass.minCoeff() < floor) throw DegeneracyError("1 - 2 kappa p below the positivity floor");
  return mass;
}

void check_base(const ForwardModel& model, const StateField& base, Eigen::Index kappa_size) {
  if (!(base.grids == model.grids)) throw GridMismatch("base state lives on a different grid");
  if (kappa_size != model.grids.space.size()) throw GridMismatch("kappa is not sampled on the spatial grid");
}

}  // namespace

StateField solve_sensitivity(const ForwardModel& model, const StateField& base,
                             const Eigen::Ref<const Eigen::VectorXd>& kappa_in, const Direction& direction) {
  check_base(model, base, kappa_in.size());
  if (direction.samples.size() != model.grids.space.size()) throw GridMismatch("direction is off the grid");
  const Eigen::VectorXd kappa = kappa_in;
  const Eigen::MatrixXd mass = mass_field(base, kappa, model.options.positivity_floor);
  const Eigen::MatrixXd forcing = (base.values.array().square().colwise() * direction.samples.array()).matrix();

  StateField z{model.grids, solve_integrated_linear(model.grids, model.params, model.bc, mass, forcing), {}};
  z.rate = first_time_difference(z.values, model.grids.time.step());
  return z;
}

StateField solve_adjoint(const ForwardModel& model, const StateField& base,
                         const Eigen::Ref<const Eigen::VectorXd>& kappa_in, const TimeTrace& residual,
                         Eigen::Index obs_node) {
  check_base(model, base, kappa_in.size());
  const auto& [space, time] = model.grids;
  const Eigen::Index nx = space.size();
  const Eigen::Index nl = time.levels();
  if (residual.size() != nl) throw GridMismatch("adjoint residual must be given on every solver time level");
  if (obs_node != 0 && obs_node != nx - 1)
    throw UnsupportedObservation("adjoint is implemented for boundary observation points only");

  const Eigen::VectorXd kappa = kappa_in;
  const Eigen::MatrixXd mass = mass_field(base, kappa, model.options.positivity_floor);
  const Laplacian1D<double> lap(space, model.bc);
  if (lap.pinned(obs_node)) throw UnsupportedObservation("observation node carries a Dirichlet condition");

  // March in reversed time s = T - t, where the equation reads
  //   m a_ss + b A a_s + c2 A a = W^{-1} e_obs y(T - s).
  const double ds = time.step();
  const double c2 = model.params.c2;
  const double beta = 0.5 * ds * (model.params.b + 0.5 * c2 * ds);
  const double flux_scale = 1.0 / space.weights()(obs_node);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nx, nl);
  Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(nx, nl);  // d/ds in reversed time
  Eigen::VectorXd av = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd vv = Eigen::VectorXd::Zero(nx);
  for (Eigen::Index n = 0; n + 1 < nl; ++n) {
    const Eigen::Index lvl = nl - 1 - n;  // forward level of reversed step n
    const Eigen::VectorXd m_mid = 0.5 * (mass.col(lvl) + mass.col(lvl - 1));
    Eigen::VectorXd rhs = m_mid.cwiseProduct(vv) + beta * lap.apply(vv) + ds * c2 * lap.apply(av);
    rhs(obs_node) += ds * flux_scale * 0.5 * (residual.values(lvl) + residual.values(lvl - 1));
    if (lap.pinned(0)) rhs(0) = 0.0;
    if (lap.pinned(nx - 1)) rhs(nx - 1) = 0.0;
    const Eigen::VectorXd v_new = lap.shifted(m_mid, beta).solve(rhs);
    av += 0.5 * ds * (vv + v_new);
    vv = v_new;
    a.col(lvl - 1) = av;
    rate.col(lvl - 1) = -vv;
  }
  return StateField{model.grids, std::move(a), std::move(rate)};
}

Direction apply_gradient(const StateField& adjoint, const Eigen::MatrixXd& psq_tt, int smoothing,
                         const Grids& grids, const BoundaryCondition& bc) {
  if (smoothing != 0 && smoothing != 1) throw ConfigError("smoothing order must be 0 or 1");
  if (!(adjoint.grids == grids) || psq_tt.rows() != adjoint.nodes() || psq_tt.cols() != adjoint.levels())
    throw GridMismatch("gradient inputs live on different grids");

  const Eigen::VectorXd wt = grids.time.weights();
  Eigen::VectorXd g = (psq_tt.array() * adjoint.values.array()).matrix() * wt;
  if (smoothing == 0) return {std::move(g), std::nullopt};

  if (bc.pure_neumann()) throw SingularOperator("A is singular under pure Neumann conditions");
  const Laplacian1D<double> lap(grids.space, bc);
  if (lap.pinned(0)) g(0) = 0.0;
  if (lap.pinned(g.size() - 1)) g(g.size() - 1) = 0.0;
  // A = -L, so solve (0 - 1 * L) u = g
  return {lap.shifted(Eigen::VectorXd::Zero(g.size()), 1.0).solve(g), std::nullopt};
}

StateField solve_second_derivative(const ForwardModel& model, const StateField& base,
                                   const Eigen::Ref<const Eigen::VectorXd>& kappa0_in, const StateField& z1,
                                   const StateField& z2, const Direction& d1, const Direction& d2) {
  check_base(model, base, kappa0_in.size());
  if (!(z1.grids == model.grids) || !(z2.grids == model.grids)) throw GridMismatch("sensitivities off the grid");
  const Eigen::Index nx = model.grids.space.size();
  if (d1.samples.size() != nx || d2.samples.size() != nx) throw GridMismatch("direction is off the grid");

  const Eigen::VectorXd kappa0 = kappa0_in;
  const Eigen::MatrixXd mass = mass_field(base, kappa0, model.options.positivity_floor);
  const Eigen::ArrayXXd cross = (z1.values.array() * z2.values.array()).colwise() * kappa0.array();
  const Eigen::ArrayXXd mixed = z2.values.array().colwise() * d1.samples.array() +
                                z1.values.array().colwise() * d2.samples.array();
  const Eigen::MatrixXd forcing = (2.0 * (cross + base.values.array() * mixed)).matrix();

  StateField w{model.grids, solve_integrated_linear(model.grids, model.params, model.bc, mass, forcing), {}};
  w.rate = first_time_difference(w.values, model.grids.time.step());
  return w;
}

// Linearization ---------------------------------------------------------------

Linearization::Linearization(ForwardModel model, Eigen::VectorXd kappa0, std::shared_ptr<const GridBasis> basis)
    : model_(std::move(model)), kappa_(std::move(kappa0)), basis_(std::move(basis)) {
  base_ = solve_forward(model_, kappa_);
  square_tt_ = second_time_derivative_of_square(base_);
}

Direction Linearization::adjoint_apply(const TimeTrace& residual, Eigen::Index obs_node, int smoothing) const {
  const StateField a = adjoint(residual, obs_node);
  return apply_gradient(a, square_tt_, smoothing, model_.grids, model_.bc);
}

const std::vector<StateField>& Linearization::basis_sensitivities() const {
  if (!basis_) throw ConfigError("linearization has no basis attached");
  if (basis_states_.empty()) {
    std::vector<StateField> states(static_cast<std::size_t>(basis_->size()));
    parallel_for(basis_->size(), [&](Eigen::Index j) {
      states[static_cast<std::size_t>(j)] = sensitivity({basis_->matrix().col(j), std::nullopt});
    });
    basis_states_ = std::move(states);
  }
  return basis_states_;
}

JacobianMatrix Linearization::jacobian(const Observation& obs) const {
  const auto& states = basis_sensitivities();
  JacobianMatrix out{Eigen::MatrixXd(obs.sampling.size(), basis_->size()), kappa_};
  for (Eigen::Index j = 0; j < basis_->size(); ++j) out.values.col(j) = obs(states[static_cast<std::size_t>(j)]);
  return out;
}

DirectionalHessianMatrix Linearization::directional_hessian(const Direction& d, const Observation& obs) const {
  const auto& states = basis_sensitivities();
  const StateField zd = sensitivity(d);
  DirectionalHessianMatrix out{Eigen::MatrixXd(obs.sampling.size(), basis_->size()), d};
  parallel_for(basis_->size(), [&](Eigen::Index j) {
    const Direction ej{basis_->matrix().col(j), std::nullopt};
    out.values.col(j) = obs(second_derivative(zd, states[static_cast<std::size_t>(j)], d, ej));
  });
  return out;
}

JacobianMatrix assemble_jacobian(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa0,
                                 std::shared_ptr<const GridBasis> basis, const Observation& obs) {
  return Linearization(model, kappa0, std::move(basis)).jacobian(obs);
}

DirectionalHessianMatrix assemble_directional_hessian(const Direction& d, const ForwardModel& model,
                                                      const Eigen::Ref<const Eigen::VectorXd>& kappa0,
                                                      std::shared_ptr<const GridBasis> basis,
                                                      const Observation& obs) {
  return Linearization(model, kappa0, std::move(basis)).directional_hessian(d, obs);
}

Eigen::MatrixXd fd_jacobian_oracle(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                                   const Eigen::Ref<const Eigen::VectorXd>& c0, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  const Eigen::Index m = c0.size();
  std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(m));
  parallel_for(m, [&](Eigen::Index j) {
    Eigen::VectorXd plus = c0, minus = c0;
    plus(j) += h;
    minus(j) -= h;
    cols[static_cast<std::size_t>(j)] = (map(plus) - map(minus)) / (2.0 * h);
  });
  Eigen::MatrixXd out(cols.empty() ? 0 : cols.front().size(), m);
  for (Eigen::Index j = 0; j < m; ++j) out.col(j) = cols[static_cast<std::size_t>(j)];
  return out;
}

JacobianMatrix fd_jacobian_oracle(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa0_in,
                                  const GridBasis& basis, double h, const Observation& obs) {
  const Eigen::VectorXd kappa0 = kappa0_in;
  auto map = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
    return obs(solve_forward(model, kappa0 + basis.synthesize(c)));
  };
  return {fd_jacobian_oracle(map, Eigen::VectorXd::Zero(basis.size()), h), kappa0};
}

void parallel_for(Eigen::Index count, const std::function<void(Eigen::Index)>& body) {
  const auto workers = static_cast<Eigen::Index>(std::max(1u, std::thread::hardware_concurrency()));
  if (workers == 1 || count < 2) {
    for (Eigen::Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (Eigen::Index w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (Eigen::Index i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace westinv
