#pragma once

// Synthetic experiments: data generation, prefiltering, configuration and
// persisted runs.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "westinv/basisrep.hpp"
#include "westinv/inversion.hpp"
#include "westinv/trace.hpp"
#include "westinv/westfield.hpp"

namespace westinv {

/// Counter-based SplitMix64: value i depends only on (seed, i).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t index) const;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const { return static_cast<double>(bits(index) >> 11) * 0x1.0p-53; }
  /// Uniform on [lo, hi).
  double uniform(std::uint64_t index, double lo, double hi) const { return lo + (hi - lo) * uniform(index); }

 private:
  std::uint64_t seed_;
};

struct SyntheticData {
  TimeTrace clean;
  TimeTrace noisy;  // delta = eta, the max-norm bound of the added noise
};

/// Forward solve at `kappa`, trace at `obs`, then i.i.d. uniform noise on
/// [-eta, eta] with eta = noise_level * max|h|.
SyntheticData synthesize_data(const ForwardModel& model, const Eigen::Ref<const Eigen::VectorXd>& kappa,
                              const Observation& obs, double noise_level, std::uint64_t seed);

/// Interpolating cubic spline with natural end conditions.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(Eigen::VectorXd x, Eigen::VectorXd y);
  double operator()(double t) const;
  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& t) const;

 private:
  Eigen::VectorXd x_, y_, m_;  // m_: second derivatives at the knots
};

/// Centered 3-point moving average (end samples kept), then a natural cubic
/// spline evaluated on every level of `target`.
TimeTrace prefilter(const TimeTrace& raw, const TimeGrid& target);

/// Truth profiles on [0, 1]: "bump" (two Gaussians), "tent" (piecewise linear),
/// "step" (two-level piecewise constant). Peak value equals `amplitude`.
Eigen::VectorXd truth_profile(const std::string& family, double amplitude, const SpatialGrid& grid);

inline constexpr int kExitDiscrepancy = 0;
inline constexpr int kExitMaxIter = 2;
inline constexpr int kExitStagnation = 3;
inline constexpr int kExitSolverFailure = 4;
inline constexpr int kExitConfigError = 5;
inline constexpr int kExitIoError = 6;

int exit_code(StopReason reason);

struct ExperimentConfig {
  int schema = 1;
  Eigen::Index nx = 101;
  Eigen::Index nt = 392;
  double horizon = 1.0;
  MaterialParams params{1.0, 0.01};
  BoundaryCondition bc;
  std::string source_profile = "quarter_sine";
  double source_amplitude = 1.0;
  std::string source_time = "t^2";
  SolverOptions solver;

  BasisKind basis = BasisKind::Hat;
  Eigen::Index n_basis = 41;
  std::optional<double> basis_sigma;

  std::string truth_family = "bump";
  double truth_amplitude = 0.3;
  bool truth_in_span = false;

  double observation_x = 1.0;
  Eigen::Index samples = 50;
  double noise = 0.01;
  std::optional<std::uint64_t> seed = 1;

  std::string method = "newton";
  bool frozen = true;
  double tau = 2.0;
  bool discrepancy = true;  // false: iterate to max_iter/stagnation, residuals still recorded
  std::optional<double> alpha0;  // explicit value overrides the rule
  Alpha0Rule alpha0_rule = Alpha0Rule::Spectral;
  std::optional<double> corrector_alpha0;
  double theta = 0.5;
  int max_iterations = 50;
  std::optional<double> step;
  int smoothing = 0;

  bool diagnostics = false;
  std::string output = "out";

  void validate() const;
  Grids grids() const { return {SpatialGrid(nx), TimeGrid(nt, horizon)}; }
  ForwardModel model() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json report_to_json(const InversionReport& report);

/// Everything produced by one experiment, before persistence.
struct ExperimentResult {
  ExperimentConfig config;
  SyntheticData data;
  TimeTrace filtered;
  Eigen::VectorXd truth;  // grid samples
  InversionReport report;
  Eigen::VectorXd reconstruction;  // grid samples of the final iterate
  double delta = 0.0;              // discrepancy bound sqrt(Ns) * eta
  std::optional<Eigen::VectorXd> singular_values;
};

/// Truth, synthetic data and prefiltered trace for `config`; the report is left empty.
ExperimentResult synthesize_experiment(const ExperimentConfig& config);

/// Builds the problem from `config`, synthesizes data and runs the method.
ExperimentResult execute(const ExperimentConfig& config);

/// Jacobian frozen at kappa = 0 for the configured basis and sampling.
Eigen::MatrixXd frozen_jacobian(const ExperimentConfig& config);

/// config.json and the three trace CSVs.
void write_data_outputs(const ExperimentResult& result);

/// write_data_outputs plus report.json, history.csv, kappa_final.csv and svd.csv.
void write_outputs(const ExperimentResult& result);

struct ConvergenceLevel {
  Eigen::Index nx = 0;
  Eigen::Index nt = 0;
  double error = 0.0;           // max over all nodes and levels of |p - f beta|
  std::optional<double> order;  // log2 of the error ratio to the previous level
};

/// Manufactured solution p = f beta of the configured source, kappa constant,
/// with dx and dt halved together from (nx0, nt0) over `levels` grids.
std::vector<ConvergenceLevel> convergence_study(const ExperimentConfig& config, double kappa = 0.0, int levels = 4,
                                                Eigen::Index nx0 = 11, Eigen::Index nt0 = 20);

/// execute + write_outputs; returns the process exit code and never throws.
int run_experiment(const ExperimentConfig& config, std::string* message = nullptr);

}  // namespace westinv
