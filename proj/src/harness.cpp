#include "westinv/harness.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <numbers>

#include "westinv/csv.hpp"
#include "westinv/errors.hpp"
#include "westinv/spectra.hpp"

namespace westinv {

using nlohmann::json;

std::uint64_t SplitMix64::bits(std::uint64_t index) const {
  std::uint64_t z = seed_ + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SyntheticData synthesize_data(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa,
                              const Observation& obs, double noise_level, std::uint64_t seed) {
  if (!(noise_level >= 0.0)) throw ConfigError("noise level must be nonnegative");
  const Eigen::VectorXd h = obs(solve_forward(model, kappa));
  const double eta = noise_level * h.cwiseAbs().maxCoeff();

  SyntheticData out;
  out.clean = {obs.sampling.times, h, 0.0, TraceOrigin::SyntheticClean};
  out.noisy = {obs.sampling.times, h, eta, TraceOrigin::SyntheticNoisy};
  if (eta > 0.0) {
    const SplitMix64 rng(seed);
    for (Eigen::Index i = 0; i < h.size(); ++i)
      out.noisy.values(i) += rng.uniform(static_cast<std::uint64_t>(i), -eta, eta);
  }
  return out;
}

NaturalCubicSpline::NaturalCubicSpline(Eigen::VectorXd x, Eigen::VectorXd y)
    : x_(std::move(x)), y_(std::move(y)), m_(Eigen::VectorXd::Zero(x_.size())) {
  const Eigen::Index n = x_.size();
  if (n != y_.size()) throw GridMismatch("spline knots and values differ in length");
  if (n < 2) throw TooFewSamples("spline needs at least two knots");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(x_(i) > x_(i - 1))) throw GridMismatch("spline knots must be strictly increasing");
  if (n == 2) return;

  const Eigen::Index k = n - 2;
  Tridiagonal<double> sys(k);
  Eigen::VectorXd rhs(k);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double h0 = x_(i) - x_(i - 1);
    const double h1 = x_(i + 1) - x_(i);
    sys.lower(i - 1) = h0 / 6.0;
    sys.diag(i - 1) = (h0 + h1) / 3.0;
    sys.upper(i - 1) = h1 / 6.0;
    rhs(i - 1) = (y_(i + 1) - y_(i)) / h1 - (y_(i) - y_(i - 1)) / h0;
  }
  m_.segment(1, k) = sys.solve(rhs);
}

double NaturalCubicSpline::operator()(double t) const {
  const Eigen::Index n = x_.size();
  const auto* it = std::upper_bound(x_.data(), x_.data() + n, t);
  Eigen::Index i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(it - x_.data()) - 1, 0, n - 2);
  const double h = x_(i + 1) - x_(i);
  const double a = (x_(i + 1) - t) / h;
  const double b = (t - x_(i)) / h;
  return a * y_(i) + b * y_(i + 1) + ((a * a * a - a) * m_(i) + (b * b * b - b) * m_(i + 1)) * h * h / 6.0;
}

Eigen::VectorXd NaturalCubicSpline::operator()(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  Eigen::VectorXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out(i) = (*this)(t(i));
  return out;
}

TimeTrace prefilter(const TimeTrace& raw, const TimeGrid& target) {
  const Eigen::Index n = raw.size();
  if (n < 4) throw TooFewSamples("prefilter needs at least 4 samples");
  if (raw.times.size() != n) throw GridMismatch("trace times and values differ in length");

  Eigen::VectorXd smooth = raw.values;
  for (Eigen::Index i = 1; i + 1 < n; ++i) smooth(i) = (raw.values(i - 1) + raw.values(i) + raw.values(i + 1)) / 3.0;

  const NaturalCubicSpline spline(raw.times, smooth);
  const Eigen::VectorXd t = target.times();
  return {t, spline(t), raw.delta, TraceOrigin::Prefiltered};
}

Eigen::VectorXd truth_profile(const std::string& family, double amplitude, const SpatialGrid& grid) {
  const Eigen::VectorXd x = grid.nodes();
  Eigen::VectorXd k(x.size());
  if (family == "bump") {
    auto g = [](double x, double c, double w) { return std::exp(-(x - c) * (x - c) / (w * w)); };
    for (Eigen::Index i = 0; i < x.size(); ++i) k(i) = g(x(i), 0.55, 0.15) + 0.7 * g(x(i), 0.85, 0.1);
  } else if (family == "tent") {
    for (Eigen::Index i = 0; i < x.size(); ++i) k(i) = std::max(0.0, 1.0 - std::abs(x(i) - 0.65) / 0.3);
  } else if (family == "step") {
    for (Eigen::Index i = 0; i < x.size(); ++i) k(i) = (x(i) >= 0.33 && x(i) < 0.58) ? 1.0 : (x(i) >= 0.68 && x(i) < 0.93) ? 0.6 : 0.0;
  } else {
    throw ConfigError("unknown truth family '" + family + "'");
  }
  return amplitude * k / k.maxCoeff();
}

int exit_code(StopReason reason) {
  switch (reason) {
    case StopReason::Discrepancy: return kExitDiscrepancy;
    case StopReason::MaxIter: return kExitMaxIter;
    case StopReason::Stagnation: return kExitStagnation;
  }
  return kExitSolverFailure;
}

// Configuration -----------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (schema != 1) throw ConfigError("unsupported config schema " + std::to_string(schema));
  params.validate();
  solver.validate();
  if (method != "newton" && method != "halley" && method != "landweber")
    throw ConfigError("unknown method '" + method + "'");
  if (method == "halley" && !frozen) throw ConfigError("only the frozen Halley iteration is available");
  if (!(noise >= 0.0)) throw ConfigError("noise must be nonnegative");
  if (noise > 0.0 && !seed) throw ConfigError("a seed is required for noisy runs");
  if (n_basis < 1) throw ConfigError("n_basis must be positive");
  if (samples < 4) throw ConfigError("at least 4 samples are required");
  if (!(tau > 1.0)) throw ConfigError("tau must exceed 1");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
  if (alpha0 && !(*alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
  if (corrector_alpha0 && !(*corrector_alpha0 > 0.0)) throw ConfigError("corrector alpha0 must be positive");
  if (max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
  if (smoothing != 0 && smoothing != 1) throw ConfigError("smoothing must be 0 or 1");
  if (output.empty()) throw ConfigError("output directory must be set");
  grids();  // grid constructors validate sizes
}

ForwardModel ExperimentConfig::model() const {
  const Grids g = grids();
  return {g, params, bc,
          manufactured_source(SpatialProfile::by_name(source_profile, source_amplitude),
                              TimeProfile::by_name(source_time), params, g, bc),
          solver};
}

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    out.reset();
  else
    out = j.at(key).get<T>();
}

template <typename T>
void read_value(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json end_json(const EndCondition& e) { return {{"kind", to_string(e.kind)}, {"coefficient", e.coefficient}}; }

EndCondition end_from_json(const json& j, EndCondition e) {
  if (j.is_string()) return {boundary_kind_from_string(j.get<std::string>()), e.coefficient};
  if (j.contains("kind")) e.kind = boundary_kind_from_string(j.at("kind").get<std::string>());
  read_value(j, "coefficient", e.coefficient);
  return e;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json to_json(const ExperimentConfig& c) {
  return {
      {"schema", c.schema},
      {"grid", {{"nx", c.nx}, {"nt", c.nt}, {"horizon", c.horizon}}},
      {"material", {{"c2", c.params.c2}, {"b", c.params.b}}},
      {"bc", {{"left", end_json(c.bc.left)}, {"right", end_json(c.bc.right)}}},
      {"source", {{"profile", c.source_profile}, {"amplitude", c.source_amplitude}, {"time", c.source_time}}},
      {"solver",
       {{"inner_tolerance", c.solver.inner_tolerance},
        {"inner_max_iterations", c.solver.inner_max_iterations},
        {"positivity_floor", c.solver.positivity_floor}}},
      {"basis", {{"kind", to_string(c.basis)}, {"m", c.n_basis}, {"sigma", optional_json(c.basis_sigma)}}},
      {"truth", {{"family", c.truth_family}, {"amplitude", c.truth_amplitude}, {"in_span", c.truth_in_span}}},
      {"observation", {{"x", c.observation_x}, {"samples", c.samples}}},
      {"noise", c.noise},
      {"seed", optional_json(c.seed)},
      {"method", c.method},
      {"frozen", c.frozen},
      {"options",
       {{"tau", c.tau},
        {"discrepancy", c.discrepancy},
        {"alpha0", c.alpha0 ? json(*c.alpha0) : json(to_string(c.alpha0_rule))},
        {"corrector_alpha0", optional_json(c.corrector_alpha0)},
        {"theta", c.theta},
        {"max_iter", c.max_iterations},
        {"step", optional_json(c.step)},
        {"smoothing", c.smoothing}}},
      {"diagnostics", c.diagnostics},
      {"output", c.output},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("schema")) throw ConfigError("config is missing \"schema\"");
    c.schema = j.at("schema").get<int>();
    if (c.schema != 1) throw ConfigError("unsupported config schema " + std::to_string(c.schema));
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      read_value(g, "nx", c.nx);
      read_value(g, "nt", c.nt);
      read_value(g, "horizon", c.horizon);
    }
    if (j.contains("material")) {
      read_value(j.at("material"), "c2", c.params.c2);
      read_value(j.at("material"), "b", c.params.b);
    }
    if (j.contains("bc")) {
      const auto& b = j.at("bc");
      if (b.contains("left")) c.bc.left = end_from_json(b.at("left"), c.bc.left);
      if (b.contains("right")) c.bc.right = end_from_json(b.at("right"), c.bc.right);
    }
    if (j.contains("source")) {
      const auto& s = j.at("source");
      read_value(s, "profile", c.source_profile);
      read_value(s, "amplitude", c.source_amplitude);
      read_value(s, "time", c.source_time);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      read_value(s, "inner_tolerance", c.solver.inner_tolerance);
      read_value(s, "inner_max_iterations", c.solver.inner_max_iterations);
      read_value(s, "positivity_floor", c.solver.positivity_floor);
    }
    if (j.contains("basis")) {
      const auto& b = j.at("basis");
      if (b.contains("kind")) c.basis = basis_kind_from_string(b.at("kind").get<std::string>());
      read_value(b, "m", c.n_basis);
      read_optional(b, "sigma", c.basis_sigma);
    }
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      read_value(t, "family", c.truth_family);
      read_value(t, "amplitude", c.truth_amplitude);
      read_value(t, "in_span", c.truth_in_span);
    }
    if (j.contains("observation")) {
      read_value(j.at("observation"), "x", c.observation_x);
      read_value(j.at("observation"), "samples", c.samples);
    }
    read_value(j, "noise", c.noise);
    read_optional(j, "seed", c.seed);
    read_value(j, "method", c.method);
    read_value(j, "frozen", c.frozen);
    if (j.contains("options")) {
      const auto& o = j.at("options");
      read_value(o, "tau", c.tau);
      read_value(o, "discrepancy", c.discrepancy);
      if (o.contains("alpha0") && o.at("alpha0").is_string())
        c.alpha0_rule = alpha0_rule_from_string(o.at("alpha0").get<std::string>());
      else
        read_optional(o, "alpha0", c.alpha0);
      read_optional(o, "corrector_alpha0", c.corrector_alpha0);
      read_value(o, "theta", c.theta);
      read_value(o, "max_iter", c.max_iterations);
      read_optional(o, "step", c.step);
      read_value(o, "smoothing", c.smoothing);
    }
    read_value(j, "diagnostics", c.diagnostics);
    read_value(j, "output", c.output);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json report_to_json(const InversionReport& r) {
  return {
      {"method", r.method},
      {"iterations", r.iterations()},
      {"residuals", r.residuals},
      {"errors_linf", r.errors_linf},
      {"errors_l2", r.errors_l2},
      {"stop_index", optional_json(r.stop_index)},
      {"stop_reason", to_string(r.stop_reason)},
      {"threshold", r.threshold},
      {"final_coefficients", vector_json(r.final_coefficients())},
  };
}

// Experiments -------------------------------------------------------------------

namespace {

struct Setup {
  ForwardModel model;
  std::shared_ptr<const GridBasis> basis;
  Observation obs;
};

Setup setup(const ExperimentConfig& config) {
  config.validate();
  Setup s{config.model(), nullptr, {}};
  const auto& [space, time] = s.model.grids;
  s.basis = std::make_shared<const GridBasis>(BasisSet::make(config.basis, config.n_basis, config.basis_sigma), space);
  const auto node = space.find_node(config.observation_x);
  if (!node) throw OffGrid("observation point is not a grid node");
  s.obs = {*node, TraceSampling::uniform(time, config.samples)};
  return s;
}

void fill_data(const ExperimentConfig& config, const Setup& s, ExperimentResult& out) {
  out.config = config;
  out.truth = truth_profile(config.truth_family, config.truth_amplitude, s.model.grids.space);
  if (config.truth_in_span)
    out.truth = clip_nonnegative(CoefficientField::from_samples(s.basis, out.truth)).samples();
  out.data = synthesize_data(s.model, out.truth, s.obs, config.noise, config.seed.value_or(0));
  out.filtered = prefilter(out.data.noisy, s.model.grids.time);
  out.delta = std::sqrt(static_cast<double>(config.samples)) * out.data.noisy.delta;
}

}  // namespace

ExperimentResult synthesize_experiment(const ExperimentConfig& config) {
  const Setup s = setup(config);
  ExperimentResult out;
  fill_data(config, s, out);
  return out;
}

ExperimentResult execute(const ExperimentConfig& config) {
  const Setup s = setup(config);
  ExperimentResult out;
  fill_data(config, s, out);

  const InversionProblem problem{s.model, s.basis, s.obs, out.data.noisy, out.filtered, {}, out.truth, std::nullopt};
  const CoefficientField init = CoefficientField::zero(s.basis);
  const StoppingRule stop{config.tau, config.discrepancy ? out.delta : 0.0, config.max_iterations};

  if (config.method == "newton") {
    out.report = newton_lm_run(problem, init, {config.frozen, config.alpha0, config.theta, stop, config.alpha0_rule});
  } else if (config.method == "halley") {
    out.report = halley_run(problem, init, {config.alpha0, config.corrector_alpha0, config.theta, stop, config.alpha0_rule});
  } else {
    out.report = landweber_run(problem, init, {config.frozen, config.step, config.smoothing, stop});
  }
  out.reconstruction = s.basis->synthesize(out.report.final_coefficients());

  if (config.diagnostics) out.singular_values = svd_decay(frozen_jacobian(config)).singular_values;
  return out;
}

Eigen::MatrixXd frozen_jacobian(const ExperimentConfig& config) {
  const Setup s = setup(config);
  const Eigen::VectorXd kappa0 = Eigen::VectorXd::Zero(s.model.grids.space.size());
  return assemble_jacobian(s.model, kappa0, s.basis, s.obs).values;
}

std::vector<ConvergenceLevel> convergence_study(const ExperimentConfig& config, double kappa, int levels,
                                                Eigen::Index nx0, Eigen::Index nt0) {
  if (levels < 2) throw ConfigError("a convergence study needs at least two levels");
  const SpatialProfile f = SpatialProfile::by_name(config.source_profile, config.source_amplitude);
  const TimeProfile beta = TimeProfile::by_name(config.source_time);
  std::vector<ConvergenceLevel> rows;
  for (int l = 0; l < levels; ++l) {
    const Eigen::Index scale = Eigen::Index{1} << l;
    const Grids g{SpatialGrid((nx0 - 1) * scale + 1), TimeGrid(nt0 * scale, config.horizon)};
    const Eigen::VectorXd k = Eigen::VectorXd::Constant(g.space.size(), kappa);
    const ForwardModel model{g, config.params, config.bc,
                             manufactured_source(f, beta, config.params, g, config.bc,
                                                 kappa != 0.0 ? std::optional<Eigen::VectorXd>(k) : std::nullopt),
                             config.solver};
    const StateField p = solve_forward(model, k);
    double err = 0.0;
    for (Eigen::Index n = 0; n < g.time.levels(); ++n)
      for (Eigen::Index i = 0; i < g.space.size(); ++i)
        err = std::max(err, std::abs(p.values(i, n) - f.value(g.space.node(i)) * beta.value(g.time.time(n))));
    ConvergenceLevel row{g.space.size(), g.time.steps(), err, std::nullopt};
    if (!rows.empty() && err > 0.0) row.order = std::log2(rows.back().error / err);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_trace(const std::filesystem::path& path, const TimeTrace& trace) {
  auto out = open_output(path);
  csv::write_columns(out, {"t", "h"}, {trace.times, trace.values});
}

}  // namespace

void write_data_outputs(const ExperimentResult& r) {
  const std::filesystem::path dir(r.config.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  open_output(dir / "config.json") << to_json(r.config).dump(2) << '\n';
  write_trace(dir / "trace_clean.csv", r.data.clean);
  write_trace(dir / "trace_noisy.csv", r.data.noisy);
  write_trace(dir / "trace_filtered.csv", r.filtered);
}

void write_outputs(const ExperimentResult& r) {
  write_data_outputs(r);
  const std::filesystem::path dir(r.config.output);

  json report = report_to_json(r.report);
  report["noise"] = {{"level", r.config.noise},
                     {"eta", r.data.noisy.delta},
                     {"norm", "max|h| relative, uniform on [-eta, eta]"},
                     {"delta", r.delta},
                     {"delta_rule", "sqrt(samples) * eta"}};
  open_output(dir / "report.json") << report.dump(2) << '\n';

  {
    auto out = open_output(dir / "history.csv");
    csv::write_row(out, {"iter", "residual", "err_linf", "err_l2"});
    for (std::size_t k = 0; k < r.report.residuals.size(); ++k) {
      const bool has = k < r.report.errors_linf.size();
      csv::write_row(out, {std::to_string(k), csv::format(r.report.residuals[k]),
                           has ? csv::format(r.report.errors_linf[k]) : "",
                           has ? csv::format(r.report.errors_l2[k]) : ""});
    }
  }
  {
    auto out = open_output(dir / "kappa_final.csv");
    csv::write_columns(out, {"x", "kappa_true", "kappa_rec"},
                       {r.config.grids().space.nodes(), r.truth, r.reconstruction});
  }
  if (r.singular_values) {
    auto out = open_output(dir / "svd.csv");
    const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(r.singular_values->size(), 1.0,
                                                         static_cast<double>(r.singular_values->size()));
    csv::write_columns(out, {"k", "sigma_k"}, {k, *r.singular_values});
  }
}

int run_experiment(const ExperimentConfig& config, std::string* message) {
  try {
    const ExperimentResult result = execute(config);
    write_outputs(result);
    if (message) *message = "stopped by " + to_string(result.report.stop_reason);
    return exit_code(result.report.stop_reason);
  } catch (const ConfigError& e) {
    if (message) *message = e.what();
    return kExitConfigError;
  } catch (const IoError& e) {
    if (message) *message = e.what();
    return kExitIoError;
  } catch (const std::exception& e) {
    if (message) *message = e.what();
    return kExitSolverFailure;
  }
}

}  // namespace westinv
