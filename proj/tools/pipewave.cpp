#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pipewave/config.hpp"

namespace pw = pipewave;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON config file")
      ->required();
  cmd->add_option("--set", args.overrides,
                  "Override a config entry, dotted key=value (repeatable)");
  cmd->add_option("-o,--output", args.output, "Output file path");
}

pw::RunConfig load_config(const CommonArgs& args) {
  pw::RunConfig config = pw::RunConfig::load(args.config_path, args.overrides);
  if (!args.output.empty()) config.output = args.output;
  return config;
}

void write_file(const std::string& path, const std::string& content,
                bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write output file '" + path + "'");
  out << content;
}

int cmd_check(const pw::RunConfig& config) {
  const pw::Network network = config.build_network();
  const pw::GlobalSpace space =
      pw::GlobalSpace::build(network, config.discretization);
  const pw::Operators ops = pw::assemble(space);

  bool failed = false;
  const pw::CompatibilityReport compat = pw::check_compatibility(space);
  std::cout << (compat.pass() ? "[pass]" : "[fail]")
            << " compatible pair: derivative image residual "
            << pw::format_significant(compat.image_residual)
            << ", kernel residual "
            << pw::format_significant(compat.kernel_residual) << "\n";
  failed = failed || !compat.pass();

  const pw::NormEquivalenceReport norm =
      pw::certify_norm_equivalence(space, ops);
  std::cout << (norm.satisfied ? "[pass]" : "[fail]")
            << " norm equivalence: lambda in ["
            << pw::format_significant(norm.lambda_min) << ", "
            << pw::format_significant(norm.lambda_max) << "]\n";
  failed = failed || !norm.satisfied;

  const pw::DampingReport damping = pw::check_assumption1(config.damping, 10.0);
  if (damping.satisfies_d0_positive) {
    std::cout << "[pass] damping monotonicity: d0 = "
              << pw::format_significant(damping.d0) << "\n";
  } else {
    std::cout << "[warn] damping monotonicity: d0 = 0 (decay-rate theory "
                 "needs d0 > 0; the experiment proceeds regardless)\n";
  }
  if (!damping.c1_smooth)
    std::cout << "[warn] damping is not C1 at m = 0\n";

  std::cout << (failed ? "check failed\n" : "check passed\n");
  return failed ? 1 : 0;
}

int cmd_steady(const pw::RunConfig& config) {
  const pw::Network network = config.build_network();
  const pw::GlobalSpace space =
      pw::GlobalSpace::build(network, config.discretization);
  const pw::Operators ops = pw::assemble(space);
  const Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(space.n_pressure());
  const Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(space.n_flux());
  const pw::State steady =
      pw::solve_stationary(space, ops, config.damping, zero_f, zero_g,
                           network.boundary_values_final(),
                           config.solver_options());

  std::ostringstream csv;
  csv << "edge,x,p,m\n";
  for (int e = 0; e < network.n_edges(); ++e) {
    const Eigen::VectorXd& nodes = space.edge_space(e).nodes;
    for (int k = 0; k < nodes.size(); ++k) {
      const double x = nodes(k);
      csv << network.edge(e).id << ',' << pw::format_significant(x, 9) << ','
          << pw::format_significant(
                 pw::evaluate_pressure(space, steady.p, e, x), 9)
          << ','
          << pw::format_significant(pw::evaluate_flux(space, steady.m, e, x), 9)
          << '\n';
    }
  }
  const std::string path =
      config.output.empty() ? "steady.csv" : config.output;
  write_file(path, csv.str());
  std::cout << "steady state written to " << path << "\n";
  return 0;
}

int cmd_run(const pw::RunConfig& config) {
  const pw::Network network = config.build_network();
  const pw::GlobalSpace space =
      pw::GlobalSpace::build(network, config.discretization);
  const pw::Operators ops = pw::assemble(space);
  pw::SolverOptions options = config.solver_options();
  const Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(space.n_pressure());
  const Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(space.n_flux());

  const pw::State steady =
      pw::solve_stationary(space, ops, config.damping, zero_f, zero_g,
                           network.boundary_values_final(), options);
  pw::State initial =
      pw::solve_stationary(space, ops, config.damping, zero_f, zero_g,
                           network.boundary_values(0.0), options);
  initial.t = 0.0;

  const int samples = static_cast<int>(
      std::lround(config.time.t_end / config.time.sample_interval));
  for (int k = 0; k <= samples; ++k)
    options.sample_times.push_back(k * config.time.sample_interval);
  const pw::Trajectory trajectory =
      pw::integrate(space, ops, config.damping, initial, options);

  std::ostringstream csv;
  csv << "t,E_state,E_deriv\n";
  std::vector<double> times, energies;
  for (const pw::Sample& sample : trajectory.samples) {
    const double e_state = pw::energy(ops, sample.state.p - steady.p,
                                      sample.state.m - steady.m);
    const double e_deriv = pw::energy(ops, sample.dp, sample.dm);
    times.push_back(sample.state.t);
    energies.push_back(e_state);
    csv << pw::format_significant(sample.state.t, 9) << ','
        << pw::format_significant(e_state, 9) << ','
        << pw::format_significant(e_deriv, 9) << '\n';
  }
  const std::string path = config.output.empty() ? "run.csv" : config.output;
  write_file(path, csv.str());
  std::cout << "trajectory written to " << path << "\n";
  try {
    const double gamma = pw::fit_gamma(times, energies, config.fit_window);
    std::cout << "fitted decay rate gamma = " << pw::format_significant(gamma)
              << "\n";
  } catch (const std::invalid_argument&) {
    std::cout << "fitted decay rate unavailable for this sampling\n";
  }
  return 0;
}

int cmd_table1(const pw::RunConfig& config) {
  const pw::DecayTable table = pw::run_decay_table(config.table_spec());
  std::ostringstream csv;
  pw::write_decay_csv(table, csv);
  const std::string path =
      config.output.empty() ? "table1.csv" : config.output;
  write_file(path, csv.str());
  std::cout << csv.str();
  std::cout << "table written to " << path << "\n";
  return 0;
}

int cmd_reduce(const pw::RunConfig& config, bool evaluate) {
  if (!config.mor)
    throw pw::ConfigError("reduce: the config has no 'mor' fragment");
  const pw::MorConfig& mor = *config.mor;
  const pw::Network network = config.build_network();
  const pw::GlobalSpace space = pw::GlobalSpace::build(network, mor.training);
  const pw::Operators ops = pw::assemble(space);
  pw::SolverOptions options = config.solver_options();
  const Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(space.n_pressure());
  const Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(space.n_flux());

  const pw::State steady =
      pw::solve_stationary(space, ops, config.damping, zero_f, zero_g,
                           network.boundary_values_final(), options);
  pw::State initial =
      pw::solve_stationary(space, ops, config.damping, zero_f, zero_g,
                           network.boundary_values(0.0), options);
  initial.t = 0.0;

  const int samples = static_cast<int>(
      std::lround(config.time.t_end / mor.snapshot_interval));
  for (int k = 0; k <= samples; ++k)
    options.sample_times.push_back(k * mor.snapshot_interval);
  const pw::Trajectory training =
      pw::integrate(space, ops, config.damping, initial, options);
  const pw::SnapshotSet snapshots = pw::collect_snapshots(training, steady);
  pw::ReducedModel model = pw::build_reduced(space, ops, snapshots, mor.n_sv);

  if (mor.quadrature_points > 0) {
    const pw::ReducedQuadratureReport report =
        pw::reduce_quadrature(model, space, ops, mor.quadrature_points);
    std::cout << "reduced quadrature: " << report.point_count
              << " points, certificate lambda in ["
              << pw::format_significant(report.lambda_min) << ", "
              << pw::format_significant(report.lambda_max) << "]\n";
  }
  pw::save_reduced(model, mor.basis_path);
  std::cout << "reduced basis (n_V = " << model.n_V()
            << ", n_Q = " << model.n_Q() << ") written to " << mor.basis_path
            << "\n";

  if (evaluate) {
    pw::DecayTableSpec spec = config.table_spec();
    spec.rows.clear();
    pw::TableRowSpec row;
    row.method = "mor";
    row.param = mor.n_sv;
    row.n_sv = mor.n_sv;
    spec.rows.push_back(row);
    const pw::DecayTable table = pw::run_decay_table(spec);
    const std::string path =
        config.output.empty() ? "table1.csv" : config.output;
    std::ostringstream csv;
    const bool exists = static_cast<bool>(std::ifstream(path));
    if (exists) {
      // Append only the data rows to an existing table.
      for (const pw::DecayRow& r : table.rows) {
        csv << r.method << ',' << pw::format_significant(r.param, 5);
        for (double e : r.energies) csv << ',' << pw::format_significant(e, 5);
        csv << ',' << pw::format_significant(r.gamma, 5) << '\n';
      }
      write_file(path, csv.str(), /*append=*/true);
    } else {
      pw::write_decay_csv(table, csv);
      write_file(path, csv.str());
    }
    std::cout << csv.str();
    std::cout << "reduced rows written to " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pipewave: simulation and model reduction for the damped wave "
      "equation on pipe networks"};
  app.require_subcommand(1);

  CommonArgs check_args, steady_args, run_args, table_args, reduce_args;
  bool evaluate = false;

  add_common(app.add_subcommand(
                 "check", "Verify compatibility, norm equivalence, damping"),
             check_args);
  add_common(app.add_subcommand("steady", "Solve the stationary system"),
             steady_args);
  add_common(app.add_subcommand("run", "Integrate and record energies"),
             run_args);
  add_common(app.add_subcommand("table1", "Run the decay-table experiment"),
             table_args);
  CLI::App* reduce =
      app.add_subcommand("reduce", "Train and persist a reduced basis");
  add_common(reduce, reduce_args);
  reduce->add_flag("--evaluate", evaluate,
                   "Also run the reduced experiment and write its table rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("check")) return cmd_check(load_config(check_args));
    if (app.got_subcommand("steady")) return cmd_steady(load_config(steady_args));
    if (app.got_subcommand("run")) return cmd_run(load_config(run_args));
    if (app.got_subcommand("table1")) return cmd_table1(load_config(table_args));
    if (app.got_subcommand("reduce"))
      return cmd_reduce(load_config(reduce_args), evaluate);
  } catch (const pw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
