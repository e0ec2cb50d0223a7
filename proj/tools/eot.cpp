// Command-line front end: solve, infer, h0test, simulate. Every run prints
// one JSON document to stdout; diagnostics and usage stay on stderr.
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eot/errors.hpp"
#include "eot/json_io.hpp"
#include "eot/inference.hpp"
#include "eot/measure.hpp"
#include "eot/montecarlo.hpp"
#include "eot/sinkhorn.hpp"

namespace {

using nlohmann::json;

eot::MeasureFormat format_of(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0
             ? eot::MeasureFormat::Json
             : eot::MeasureFormat::Csv;
}

eot::DiscreteMeasure load(const std::string& path) {
  return eot::load_measure(path, format_of(path));
}

struct SolveArgs {
  std::string p_file, q_file, xi_out;
  double epsilon = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
};

json run_solve(const SolveArgs& args) {
  const eot::DiscreteMeasure P = load(args.p_file);
  const eot::DiscreteMeasure Q = load(args.q_file);
  const eot::SinkhornSolution sol =
      eot::solve(P, Q, {args.epsilon, args.tol, args.max_iter});
  if (!args.xi_out.empty()) eot::write_matrix_csv(sol.xi, args.xi_out);
  return eot::to_json(sol);
}

struct InferArgs {
  std::string mode, p_file, q_file, eta_file;
  double epsilon = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  double level = 0.95;
  std::optional<double> threshold;
  std::optional<double> lambda;
  std::size_t n = 0;
  std::optional<std::size_t> m;
};

json run_infer(const InferArgs& args) {
  if (args.threshold && args.mode != "rcol")
    throw eot::ConfigError("--t is only valid with --mode rcol");
  if (!args.eta_file.empty() && args.mode != "functional")
    throw eot::ConfigError("--eta is only valid with --mode functional");
  if (args.lambda && !args.m)
    throw eot::ConfigError("--lambda requires --m");
  if (args.mode == "cost" && args.m)
    throw eot::ConfigError(
        "the cost limit is one-sample only; drop --m (see README)");

  const eot::DiscreteMeasure P = load(args.p_file);
  const eot::DiscreteMeasure Q = load(args.q_file);
  const eot::SolveOptions opts{args.epsilon, args.tol, args.max_iter};
  const eot::SampleSizes sizes{args.n, args.m};
  const std::optional<double> lambda =
      args.lambda ? args.lambda : sizes.lambda();

  eot::InferenceReport report;
  if (args.mode == "cost") {
    const eot::SinkhornSolution sol = eot::solve(P, Q, opts);
    report = eot::make_report(sol.cost, eot::cost_variance_one_sample(sol, P),
                              sizes.rate(), args.level, std::nullopt);
  } else if (args.mode == "divergence") {
    const eot::H1Variance h1 =
        eot::divergence_h1_variance(P, Q, lambda, opts);
    if (h1.sigma2 <= 1e-10)
      std::cerr << "warning: H1 variance is degenerate (P = Q?); the "
                   "Gaussian limit does not apply\n";
    report = eot::make_report(h1.divergence.value, h1.sigma2, sizes.rate(),
                              args.level, lambda);
  } else {
    eot::FunctionalSpec eta;
    if (args.mode == "ds") {
      eta = eot::FunctionalSpec::half_squared_distance();
    } else if (args.mode == "rcol") {
      if (!args.threshold) throw eot::ConfigError("--mode rcol requires --t");
      eta = eot::FunctionalSpec::threshold_indicator(*args.threshold);
    } else if (args.mode == "functional") {
      if (args.eta_file.empty())
        throw eot::ConfigError("--mode functional requires --eta FILE");
      eta = eot::FunctionalSpec::explicit_matrix(
          eot::read_matrix_csv(args.eta_file));
    } else {
      throw eot::ConfigError("unknown --mode '" + args.mode + "'");
    }
    // Mirrors functional_ci, with an optional explicit lambda override.
    const eot::SinkhornSolution sol = eot::solve(P, Q, opts);
    const Eigen::MatrixXd eta_values = eta.materialize(P, Q);
    const double estimate =
        P.weights().dot(sol.xi.cwiseProduct(eta_values) * Q.weights());
    const eot::KernelOperators ops = eot::build_operators(sol, P, Q);
    const double sigma2 =
        eot::functional_variance(eta_values, sol, ops, lambda);
    report = eot::make_report(estimate, sigma2, sizes.rate(), args.level,
                              lambda);
  }
  json out = eot::to_json(report);
  out["mode"] = args.mode;
  out["n"] = args.n;
  if (args.m) out["m"] = *args.m;
  return out;
}

struct H0Args {
  std::string p_file, samples_file;
  double epsilon = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  double level = 0.95;
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
};

json run_h0test(const H0Args& args) {
  if (args.samples_file.empty() == !args.n)
    throw eot::ConfigError("h0test needs exactly one of --samples or --n");
  const eot::DiscreteMeasure P = load(args.p_file);
  const eot::SolveOptions opts{args.epsilon, args.tol, args.max_iter};
  eot::Rng rng(args.seed);

  eot::H0TestResult result;
  std::size_t n = 0;
  std::optional<std::size_t> m;
  if (!args.samples_file.empty()) {
    // Raw sample points, one row per draw; equal rows collapse to atoms.
    const Eigen::MatrixXd rows = eot::read_matrix_csv(args.samples_file);
    n = std::size_t(rows.rows());
    const eot::DiscreteMeasure empirical(
        rows, Eigen::VectorXd::Constant(rows.rows(), 1.0 / double(n)));
    result = eot::h0_test_one_sample(empirical, n, P, args.draws, rng, opts);
  } else {
    n = *args.n;
    const eot::DiscreteMeasure pn = eot::empirical_from_sample(P, n, rng);
    if (args.m) {
      m = args.m;
      const eot::DiscreteMeasure qm = eot::empirical_from_sample(P, *m, rng);
      result = eot::h0_test_two_sample(pn, n, qm, *m, args.draws, rng, opts);
    } else {
      result = eot::h0_test_one_sample(pn, n, P, args.draws, rng, opts);
    }
  }

  json out = eot::to_json(result);
  out["n"] = n;
  if (m) out["m"] = *m;
  out["draws"] = args.draws;
  out["seed"] = args.seed;
  out["alpha"] = 1.0 - args.level;
  out["reject"] = result.p_value <= 1.0 - args.level;
  return out;
}

struct SimulateArgs {
  std::string config_file, replicates_out;
};

json run_simulate(const SimulateArgs& args) {
  eot::SimulationConfig cfg = eot::load_simulation_config(args.config_file);
  const bool keep_in_json = cfg.keep_replicates;
  if (!args.replicates_out.empty()) cfg.keep_replicates = true;
  const eot::ReplicationReport report = eot::run_replications(cfg);
  if (!args.replicates_out.empty()) {
    Eigen::MatrixXd column(Eigen::Index(report.replicates.size()), 1);
    for (std::size_t i = 0; i < report.replicates.size(); ++i)
      column(Eigen::Index(i), 0) = report.replicates[i];
    eot::write_matrix_csv(column, args.replicates_out);
  }
  json out = eot::to_json(report);
  if (!keep_in_json) out.erase("replicates");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropic optimal transport: solver, inference, H0 testing "
               "and Monte Carlo validation"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* cmd_solve = app.add_subcommand("solve", "solve the dual problem");
  cmd_solve->add_option("--p", solve_args.p_file, "P measure file")->required();
  cmd_solve->add_option("--q", solve_args.q_file, "Q measure file")->required();
  cmd_solve->add_option("--epsilon", solve_args.epsilon, "regularization")
      ->required();
  cmd_solve->add_option("--tol", solve_args.tol, "convergence tolerance");
  cmd_solve->add_option("--max-iter", solve_args.max_iter, "iteration cap");
  cmd_solve->add_option("--xi-out", solve_args.xi_out,
                        "write the coupling density as CSV");

  InferArgs infer_args;
  CLI::App* cmd_infer =
      app.add_subcommand("infer", "plug-in confidence intervals");
  cmd_infer
      ->add_option("--mode", infer_args.mode,
                   "cost | functional | ds | rcol | divergence")
      ->required();
  cmd_infer->add_option("--p", infer_args.p_file, "P measure file")->required();
  cmd_infer->add_option("--q", infer_args.q_file, "Q measure file")->required();
  cmd_infer->add_option("--epsilon", infer_args.epsilon, "regularization")
      ->required();
  cmd_infer->add_option("--eta", infer_args.eta_file,
                        "dense eta matrix CSV (functional mode)");
  cmd_infer->add_option("--t", infer_args.threshold,
                        "squared-distance threshold (rcol mode)");
  cmd_infer->add_option("--lambda", infer_args.lambda,
                        "P-side weight override in (0,1)");
  cmd_infer->add_option("--level", infer_args.level, "confidence level")
      ->required();
  cmd_infer->add_option("--n", infer_args.n, "P sample size")->required();
  cmd_infer->add_option("--m", infer_args.m,
                        "Q sample size (two-sample regime)");
  cmd_infer->add_option("--tol", infer_args.tol, "solver tolerance");
  cmd_infer->add_option("--max-iter", infer_args.max_iter, "iteration cap");

  H0Args h0_args;
  CLI::App* cmd_h0 =
      app.add_subcommand("h0test", "test H0: the sample comes from P");
  cmd_h0->add_option("--p", h0_args.p_file, "reference measure file")
      ->required();
  cmd_h0->add_option("--samples", h0_args.samples_file,
                     "CSV of raw sample points (one row per draw)");
  cmd_h0->add_option("--n", h0_args.n,
                     "draw a fresh sample of this size from P instead");
  cmd_h0->add_option("--m", h0_args.m,
                     "second sample size (two-sample statistic)");
  cmd_h0->add_option("--epsilon", h0_args.epsilon, "regularization")
      ->required();
  cmd_h0->add_option("--level", h0_args.level, "confidence level");
  cmd_h0->add_option("--draws", h0_args.draws, "mixture Monte Carlo draws");
  cmd_h0->add_option("--seed", h0_args.seed, "RNG seed (default 0)");
  cmd_h0->add_option("--tol", h0_args.tol, "solver tolerance");
  cmd_h0->add_option("--max-iter", h0_args.max_iter, "iteration cap");

  SimulateArgs sim_args;
  CLI::App* cmd_sim =
      app.add_subcommand("simulate", "Monte Carlo limit-law validation");
  cmd_sim->add_option("--config", sim_args.config_file, "JSON config file")
      ->required();
  cmd_sim->add_option("--replicates-out", sim_args.replicates_out,
                      "write per-replicate values as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cout << json{{"schema_version", eot::kSchemaVersion},
                      {"status", "help"}}
                     .dump()
              << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cout << json{{"schema_version", eot::kSchemaVersion},
                      {"status", "error"},
                      {"error", e.get_name()}}
                     .dump()
              << "\n";
    return 1;
  }

  int code = 0;
  json out;
  try {
    if (cmd_solve->parsed()) out = run_solve(solve_args);
    if (cmd_infer->parsed()) out = run_infer(infer_args);
    if (cmd_h0->parsed()) out = run_h0test(h0_args);
    if (cmd_sim->parsed()) out = run_simulate(sim_args);
  } catch (const eot::NoConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    out = json{{"schema_version", eot::kSchemaVersion},
               {"status", "error"},
               {"error", e.what()},
               {"residual", e.residual},
               {"iterations", e.iterations}};
    code = 2;
  } catch (const eot::SingularSystem& e) {
    std::cerr << "error: " << e.what() << "\n";
    out = json{{"schema_version", eot::kSchemaVersion},
               {"status", "error"},
               {"error", e.what()}};
    code = 2;
  } catch (const eot::NonSymmetric& e) {
    std::cerr << "error: " << e.what() << "\n";
    out = json{{"schema_version", eot::kSchemaVersion},
               {"status", "error"},
               {"error", e.what()}};
    code = 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    out = json{{"schema_version", eot::kSchemaVersion},
               {"status", "error"},
               {"error", e.what()}};
    code = 1;
  }
  std::cout << out.dump(2) << "\n";
  return code;
}
