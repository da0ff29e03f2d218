// Command-line front end: synthetic data, reconstructions, diagnostics,
// solver convergence and concurrent parameter sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "westinv/csv.hpp"
#include "westinv/errors.hpp"
#include "westinv/harness.hpp"
#include "westinv/spectra.hpp"

namespace fs = std::filesystem;
using namespace westinv;

namespace {

// Flags shared by every subcommand. Unset flags leave the config file (or the
// built-in defaults) untouched.
struct Overrides {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> basis;
  std::optional<Eigen::Index> n_basis;
  std::optional<double> tau;
  std::optional<std::string> alpha0;
  std::optional<double> theta;
  std::optional<int> max_iter;
  std::optional<std::string> out;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config (schema 1)");
    app.add_option("--method", method, "landweber | newton | halley");
    app.add_option("--noise", noise, "relative noise level, e.g. 0.01");
    app.add_option("--seed", seed, "noise seed");
    app.add_option("--basis", basis, "hat | gauss | haar")->check(CLI::IsMember({"hat", "gauss", "haar"}));
    app.add_option("--n-basis", n_basis, "number of basis functions (default 41)");
    app.add_option("--tau", tau, "discrepancy factor (default 2.0)");
    app.add_option("--alpha0", alpha0, "initial regularization: a number, 'spectral' or 'residual'");
    app.add_option("--theta", theta, "regularization decay (default 0.5)");
    app.add_option("--max-iter", max_iter, "iteration cap");
    app.add_option("--out", out, "output directory");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (method) c.method = *method;
    if (noise) c.noise = *noise;
    if (seed) c.seed = *seed;
    if (basis) c.basis = basis_kind_from_string(*basis);
    if (n_basis) c.n_basis = *n_basis;
    if (tau) c.tau = *tau;
    if (alpha0) {
      if (*alpha0 == "spectral" || *alpha0 == "residual") {
        c.alpha0_rule = alpha0_rule_from_string(*alpha0);
        c.alpha0.reset();
      } else {
        try {
          c.alpha0 = std::stod(*alpha0);
        } catch (const std::exception&) {
          throw ConfigError("--alpha0 expects a number, 'spectral' or 'residual'");
        }
      }
    }
    if (theta) c.theta = *theta;
    if (max_iter) c.max_iterations = *max_iter;
    if (out) c.output = *out;
    c.validate();
    return c;
  }
};

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return dir;
}

std::ofstream open_file(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

int cmd_synth(const Overrides& o) {
  const ExperimentResult r = synthesize_experiment(o.resolve());
  write_data_outputs(r);
  std::cout << "wrote traces to " << r.config.output << " (eta " << r.data.noisy.delta << ")\n";
  return 0;
}

int cmd_reconstruct(const Overrides& o) {
  std::string msg;
  const int code = run_experiment(o.resolve(), &msg);
  (code == kExitDiscrepancy ? std::cout : std::cerr) << msg << '\n';
  return code;
}

int cmd_svd(const Overrides& o) {
  const ExperimentConfig c = o.resolve();
  const SvdDecay decay = svd_decay(frozen_jacobian(c));
  const fs::path dir = prepare_dir(c.output);
  auto f = open_file(dir / "svd.csv");
  const Eigen::Index m = decay.singular_values.size();
  csv::write_columns(f, {"k", "sigma_k"},
                     {Eigen::VectorXd::LinSpaced(m, 1.0, static_cast<double>(m)), decay.singular_values});
  std::cout << "q = " << decay.rate << " over " << decay.fitted << " of " << m << " singular values\n";
  return 0;
}

int cmd_poles(const Overrides& o, int count) {
  const ExperimentConfig c = o.resolve();
  const SpectralData spec = SpectralData::compute(c.bc, c.params.b, c.params.c2, count);
  const DistinctnessReport rep = pole_distinctness(spec, c.params.b, c.params.c2);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j < spec.lambdas.size(); ++j) {
    const auto& p = spec.pairs[j];
    rows.push_back({{"j", j + 1},
                    {"lambda", spec.lambdas[j]},
                    {"p_plus", {p.plus.real(), p.plus.imag()}},
                    {"p_minus", {p.minus.real(), p.minus.imag()}}});
  }
  const nlohmann::json doc = {{"b", c.params.b},
                              {"c2", c.params.c2},
                              {"poles", rows},
                              {"distinct", rep.distinct},
                              {"consistent", rep.consistent},
                              {"max_residual", rep.max_residual},
                              {"min_separation", rep.min_separation}};
  const fs::path dir = prepare_dir(c.output);
  open_file(dir / "poles.json") << doc.dump(2) << '\n';
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_convergence(const Overrides& o, double kappa, int levels) {
  const ExperimentConfig c = o.resolve();
  const auto rows = convergence_study(c, kappa, levels);
  const fs::path dir = prepare_dir(c.output);
  auto f = open_file(dir / "convergence.csv");
  csv::write_row(f, {"nx", "nt", "max_error", "order"});
  for (const auto& r : rows) {
    csv::write_row(f, {std::to_string(r.nx), std::to_string(r.nt), csv::format(r.error),
                       r.order ? csv::format(*r.order) : ""});
    std::cout << r.nx << " x " << r.nt << "  error " << r.error;
    if (r.order) std::cout << "  order " << *r.order;
    std::cout << '\n';
  }
  return 0;
}

// Cartesian product over the listed values; each run writes to its own subdirectory.
int cmd_sweep(const Overrides& o, const std::vector<std::string>& methods, const std::vector<double>& noises,
              const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  const ExperimentConfig base = o.resolve();
  std::vector<ExperimentConfig> runs;
  for (const auto& m : methods.empty() ? std::vector<std::string>{base.method} : methods)
    for (double n : noises.empty() ? std::vector<double>{base.noise} : noises)
      for (std::uint64_t s : seeds.empty() ? std::vector<std::uint64_t>{base.seed.value_or(1)} : seeds) {
        ExperimentConfig c = base;
        c.method = m;
        c.noise = n;
        c.seed = s;
        c.output = (fs::path(base.output) / (m + "_noise" + csv::format(n) + "_seed" + std::to_string(s))).string();
        c.validate();
        runs.push_back(c);
      }

  std::vector<int> codes(runs.size(), 0);
  std::vector<std::string> messages(runs.size());
  std::mutex next_lock;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(next_lock);
        if (next == runs.size()) return;
        i = next++;
      }
      codes[i] = run_experiment(runs[i], &messages[i]);
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<void>> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, runs.size()); ++t) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();

  auto summary = open_file(prepare_dir(base.output) / "sweep.csv");
  csv::write_row(summary, {"dir", "method", "noise", "seed", "exit"});
  int worst = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    csv::write_row(summary, {runs[i].output, runs[i].method, csv::format(runs[i].noise),
                             std::to_string(*runs[i].seed), std::to_string(codes[i])});
    std::cout << runs[i].output << ": " << messages[i] << '\n';
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct the nonlinearity coefficient of a 1-D Westervelt model from a boundary time trace"};
  app.require_subcommand(1);

  Overrides o;
  auto* synth = app.add_subcommand("synth", "forward solve, noisy samples and prefiltered trace");
  o.attach(*synth);
  auto* recon = app.add_subcommand("reconstruct", "full pipeline: data, inversion, artifacts");
  o.attach(*recon);

  auto* diag = app.add_subcommand("diagnose", "ill-posedness diagnostics");
  diag->require_subcommand(1);
  auto* svd = diag->add_subcommand("svd", "singular values of the frozen Jacobian -> svd.csv");
  o.attach(*svd);
  int pole_count = 20;
  auto* poles = diag->add_subcommand("poles", "resolvent pole table -> poles.json");
  o.attach(*poles);
  poles->add_option("--count", pole_count, "number of eigenvalues")->capture_default_str();

  double conv_kappa = 0.0;
  int conv_levels = 4;
  auto* conv = app.add_subcommand("convergence-study", "manufactured-solution refinement -> convergence.csv");
  o.attach(*conv);
  conv->add_option("--kappa", conv_kappa, "constant kappa of the manufactured case")->capture_default_str();
  conv->add_option("--levels", conv_levels, "number of grids")->capture_default_str();

  std::vector<std::string> sweep_methods;
  std::vector<double> sweep_noise;
  std::vector<std::uint64_t> sweep_seeds;
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "independent runs in parallel, one directory each");
  o.attach(*sweep);
  sweep->add_option("--methods", sweep_methods, "methods to sweep")->delimiter(',');
  sweep->add_option("--noise-levels", sweep_noise, "noise levels to sweep")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "seeds to sweep")->delimiter(',');
  sweep->add_option("--jobs", jobs, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*recon) return cmd_reconstruct(o);
    if (*svd) return cmd_svd(o);
    if (*poles) return cmd_poles(o, pole_count);
    if (*conv) return cmd_convergence(o, conv_kappa, conv_levels);
    if (*sweep) return cmd_sweep(o, sweep_methods, sweep_noise, sweep_seeds, jobs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  return kExitConfigError;
}
