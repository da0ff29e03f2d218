#include "westinv/westfield.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "westinv/csv.hpp"

namespace westinv {

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::Dirichlet: return "dirichlet";
    case BoundaryKind::Neumann: return "neumann";
    case BoundaryKind::Impedance: return "impedance";
  }
  return "unknown";
}

BoundaryKind boundary_kind_from_string(const std::string& name) {
  if (name == "dirichlet") return BoundaryKind::Dirichlet;
  if (name == "neumann") return BoundaryKind::Neumann;
  if (name == "impedance") return BoundaryKind::Impedance;
  throw ConfigError("unknown boundary kind '" + name + "'");
}

std::string to_string(TraceOrigin origin) {
  switch (origin) {
    case TraceOrigin::Model: return "model";
    case TraceOrigin::SyntheticClean: return "synthetic-clean";
    case TraceOrigin::SyntheticNoisy: return "synthetic-noisy";
    case TraceOrigin::Prefiltered: return "prefiltered";
  }
  return "unknown";
}

void MaterialParams::validate() const {
  if (!(c2 > 0.0) || !(b > 0.0)) throw ConfigError("c2 and b must be positive");
}

void SolverOptions::validate() const {
  if (!(inner_tolerance > 0.0)) throw ConfigError("inner tolerance must be positive");
  if (inner_max_iterations < 1) throw ConfigError("inner iteration cap must be at least 1");
  if (!(positivity_floor > 0.0 && positivity_floor < 1.0))
    throw ConfigError("positivity floor must lie in (0, 1)");
}

namespace {

using std::numbers::pi;

void check_shapes(const ForwardModel& model, Eigen::Index kappa_size) {
  const Eigen::Index nx = model.grids.space.size();
  const Eigen::Index nl = model.grids.time.levels();
  if (kappa_size != nx) throw GridMismatch("kappa is not sampled on the spatial grid");
  if (model.source.values.rows() != nx || model.source.values.cols() != nl)
    throw GridMismatch("source term does not match the space-time grid");
}

void check_floor(const Eigen::VectorXd& kappa, const Eigen::VectorXd& p, double floor, double t) {
  const double worst = (1.0 - 2.0 * kappa.array() * p.array()).minCoeff();
  if (worst < floor) {
    std::ostringstream msg;
    msg << "1 - 2 kappa p fell to " << worst << " < " << floor << " at t = " << t;
    throw DegeneracyError(msg.str());
  }
}

void zero_pinned(const Laplacian1D<double>& lap, Eigen::VectorXd& rhs) {
  if (lap.pinned(0)) rhs(0) = 0.0;
  if (lap.pinned(rhs.size() - 1)) rhs(rhs.size() - 1) = 0.0;
}

}  // namespace

StateField solve_forward(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa_in) {
  model.params.validate();
  model.options.validate();
  check_shapes(model, kappa_in.size());

  const Eigen::VectorXd kappa = kappa_in;
  const auto& [space, time] = model.grids;
  const Eigen::Index nx = space.size();
  const Eigen::Index nl = time.levels();
  const double dt = time.step();
  const double c2 = model.params.c2;
  const double beta = 0.5 * dt * (model.params.b + 0.5 * c2 * dt);
  const double floor = model.options.positivity_floor;
  const bool linear = (kappa.array() == 0.0).all();

  const Laplacian1D<double> lap(space, model.bc);
  const Eigen::MatrixXd integrated = cumulative_trapezoid(model.source.values, dt);

  StateField state{model.grids, Eigen::MatrixXd::Zero(nx, nl), Eigen::MatrixXd::Zero(nx, nl)};
  Eigen::VectorXd memory = Eigen::VectorXd::Zero(nx);  // \int_0^t p_xx
  Eigen::VectorXd p_old = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd p_prev = p_old;

  for (Eigen::Index n = 0; n + 1 < nl; ++n) {
    const Eigen::VectorXd lap_old = lap.apply(p_old);
    const Eigen::VectorXd base =
        beta * lap_old + dt * c2 * memory + 0.5 * dt * (integrated.col(n) + integrated.col(n + 1));

    Eigen::VectorXd guess = (n > 0) ? Eigen::VectorXd(2.0 * p_old - p_prev) : p_old;
    Eigen::VectorXd p_new;
    for (int it = 0;; ++it) {
      const Eigen::VectorXd mass = 1.0 - (kappa.array() * (guess + p_old).array());
      Eigen::VectorXd rhs = mass.cwiseProduct(p_old) + base;
      zero_pinned(lap, rhs);
      p_new = lap.shifted(mass, beta).solve(rhs);
      if (linear) break;
      const double change = (p_new - guess).lpNorm<Eigen::Infinity>();
      if (change <= model.options.inner_tolerance * std::max(1.0, p_new.lpNorm<Eigen::Infinity>())) break;
      if (it + 1 >= model.options.inner_max_iterations) {
        std::ostringstream msg;
        msg << "inner fixed-point loop stalled at t = " << time.time(n + 1) << " (change " << change << ")";
        throw NoConvergence(msg.str());
      }
      guess = p_new;
    }
    if (!linear) check_floor(kappa, p_new, floor, time.time(n + 1));

    memory += 0.5 * dt * (lap_old + lap.apply(p_new));
    state.values.col(n + 1) = p_new;
    // (1 - 2 kappa p) p_t = b p_xx + c2 \int p_xx + R
    const Eigen::VectorXd flux = model.params.b * lap.apply(p_new) + c2 * memory + integrated.col(n + 1);
    state.rate.col(n + 1) = flux.array() / (1.0 - 2.0 * kappa.array() * p_new.array());
    if (lap.pinned(0)) state.rate(0, n + 1) = 0.0;
    if (lap.pinned(nx - 1)) state.rate(nx - 1, n + 1) = 0.0;

    p_prev = p_old;
    p_old = p_new;
  }
  return state;
}

TimeTrace observe(const StateField& state, double point) {
  const auto node = state.grids.space.find_node(point);
  if (!node) throw OffGrid("observation point is not a grid node");
  TimeTrace trace;
  trace.times = state.grids.time.times();
  trace.values = state.history(*node);
  trace.origin = TraceOrigin::Model;
  return trace;
}

SourceTerm manufactured_source(const SpatialProfile& f, const TimeProfile& beta, const MaterialParams& params,
                               const Grids& grids, const BoundaryCondition& bc,
                               const std::optional<Eigen::VectorXd>& kappa) {
  params.validate();
  const auto& [space, time] = grids;
  if (kappa && kappa->size() != space.size()) throw GridMismatch("kappa is not sampled on the spatial grid");

  auto check_end = [&](const EndCondition& end, double x, double outward) {
    const double tol = 1e-10;
    double defect = 0.0;
    switch (end.kind) {
      case BoundaryKind::Dirichlet: defect = f.value(x); break;
      case BoundaryKind::Neumann: defect = f.d1(x); break;
      case BoundaryKind::Impedance: defect = outward * f.d1(x) + end.coefficient * f.value(x); break;
    }
    if (std::abs(defect) > tol)
      throw IncompatibleBC("profile '" + f.tag + "' violates the " + to_string(end.kind) + " condition");
  };
  check_end(bc.left, space.left(), -1.0);
  check_end(bc.right, space.right(), 1.0);

  SourceTerm src;
  src.values.resize(space.size(), time.levels());
  src.tag = "manufactured:" + f.tag + "*" + beta.tag + (kappa ? "+kappa" : "");
  for (Eigen::Index n = 0; n < time.levels(); ++n) {
    const double t = time.time(n);
    const double bt = beta.value(t), b1 = beta.d1(t), b2 = beta.d2(t);
    const double square_dd = 2.0 * (b1 * b1 + bt * b2);  // (beta^2)''
    for (Eigen::Index i = 0; i < space.size(); ++i) {
      const double x = space.node(i);
      const double fx = f.value(x);
      double r = fx * b2 - f.d2(x) * (params.c2 * bt + params.b * b1);
      if (kappa) r -= (*kappa)(i) * fx * fx * square_dd;
      src.values(i, n) = r;
    }
  }
  return src;
}

Eigen::MatrixXd second_time_derivative_of_square(const StateField& state) {
  const Eigen::MatrixXd square = state.values.array().square().matrix();
  return second_time_difference(square, state.grids.time.step());
}

Eigen::MatrixXd solve_integrated_linear(const Grids& grids, const MaterialParams& params,
                                        const BoundaryCondition& bc, const Eigen::MatrixXd& mass,
                                        const Eigen::MatrixXd& forcing) {
  const Eigen::Index nx = grids.space.size();
  const Eigen::Index nl = grids.time.levels();
  if (mass.rows() != nx || mass.cols() != nl || forcing.rows() != nx || forcing.cols() != nl)
    throw GridMismatch("coefficient fields do not match the space-time grid");

  const double dt = grids.time.step();
  const double c2 = params.c2;
  const double beta = 0.5 * dt * (params.b + 0.5 * c2 * dt);
  const Laplacian1D<double> lap(grids.space, bc);

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(nx, nl);
  Eigen::VectorXd memory = Eigen::VectorXd::Zero(nx);
  for (Eigen::Index n = 0; n + 1 < nl; ++n) {
    const Eigen::VectorXd lap_old = lap.apply(u.col(n));
    Eigen::VectorXd rhs = mass.col(n).cwiseProduct(u.col(n)) + beta * lap_old + dt * c2 * memory +
                          (forcing.col(n + 1) - forcing.col(n));
    zero_pinned(lap, rhs);
    u.col(n + 1) = lap.shifted(mass.col(n + 1), beta).solve(rhs);
    memory += 0.5 * dt * (lap_old + lap.apply(u.col(n + 1)));
  }
  return u;
}

void write_state_csv(std::ostream& out, const StateField& state) {
  std::vector<std::string> fields(static_cast<std::size_t>(state.nodes() + 1));
  fields[0] = "t";
  for (Eigen::Index i = 0; i < state.nodes(); ++i) fields[i + 1] = "x" + std::to_string(i);
  csv::write_row(out, fields);
  for (Eigen::Index n = 0; n < state.levels(); ++n) {
    fields[0] = csv::format(state.grids.time.time(n));
    for (Eigen::Index i = 0; i < state.nodes(); ++i) fields[i + 1] = csv::format(state.values(i, n));
    csv::write_row(out, fields);
  }
}

// Profiles ------------------------------------------------------------------

SpatialProfile SpatialProfile::quarter_sine(double a) {
  const double k = pi / 2.0;
  return {[=](double x) { return a * std::sin(k * x); }, [=](double x) { return a * k * std::cos(k * x); },
          [=](double x) { return -a * k * k * std::sin(k * x); }, "quarter_sine"};
}

SpatialProfile SpatialProfile::half_sine(double a) {
  return {[=](double x) { return a * std::sin(pi * x); }, [=](double x) { return a * pi * std::cos(pi * x); },
          [=](double x) { return -a * pi * pi * std::sin(pi * x); }, "half_sine"};
}

SpatialProfile SpatialProfile::raised_cosine(double a) {
  return {[=](double x) { return a * (1.0 + 0.5 * std::cos(pi * x)); },
          [=](double x) { return -0.5 * a * pi * std::sin(pi * x); },
          [=](double x) { return -0.5 * a * pi * pi * std::cos(pi * x); }, "raised_cosine"};
}

SpatialProfile SpatialProfile::by_name(const std::string& name, double amplitude) {
  if (name == "quarter_sine") return quarter_sine(amplitude);
  if (name == "half_sine") return half_sine(amplitude);
  if (name == "raised_cosine") return raised_cosine(amplitude);
  throw ConfigError("unknown spatial profile '" + name + "'");
}

TimeProfile TimeProfile::power(int k) {
  if (k < 2) throw ConfigError("time profile t^k needs k >= 2 for homogeneous initial data");
  const double kd = k;
  return {[=](double t) { return std::pow(t, kd); }, [=](double t) { return kd * std::pow(t, kd - 1); },
          [=](double t) { return kd * (kd - 1) * std::pow(t, kd - 2); }, "t^" + std::to_string(k)};
}

TimeProfile TimeProfile::zero() {
  auto z = [](double) { return 0.0; };
  return {z, z, z, "zero"};
}

TimeProfile TimeProfile::by_name(const std::string& name) {
  if (name == "zero") return zero();
  if (name.size() > 2 && name.rfind("t^", 0) == 0) return power(std::stoi(name.substr(2)));
  throw ConfigError("unknown time profile '" + name + "'");
}

}  // namespace westinv
