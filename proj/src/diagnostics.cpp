#include "pipewave/diagnostics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace pipewave {

double energy(const Operators& ops, const Eigen::VectorXd& dp,
              const Eigen::VectorXd& dm, bool lumped) {
  const auto& Mm = lumped ? ops.Mm : ops.Mm_exact;
  return 0.5 * dp.dot(ops.Mp * dp) + 0.5 * dm.dot(Mm * dm);
}

double fit_gamma(const std::vector<double>& times,
                 const std::vector<double>& energies,
                 std::pair<double, double> window) {
  if (times.size() != energies.size())
    throw std::invalid_argument("fit_gamma: times/energies size mismatch");
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int n = 0;
  for (size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < window.first - 1e-12 || t > window.second + 1e-12) continue;
    if (!(energies[i] > 0.0))
      throw std::invalid_argument(
          "fit_gamma: nonpositive energy inside the fit window");
    const double y = -std::log(energies[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2)
    throw std::invalid_argument(
        "fit_gamma: fewer than two samples inside the fit window");
  const double denom = n * stt - st * st;
  if (denom <= 0.0)
    throw std::invalid_argument("fit_gamma: degenerate sample times");
  return (n * sty - st * sy) / denom;
}

double derivative_energy(const GlobalSpace& space, const Operators& ops,
                         const DampingModel& damping, const State& state,
                         const Eigen::VectorXd& h, const Eigen::VectorXd& f,
                         const Eigen::VectorXd& g) {
  Eigen::VectorXd dp, dm;
  compute_derivatives(space, ops, damping, state, h, dp, dm, f, g);
  return energy(ops, dp, dm);
}

Lemma1Bounds lemma1_bounds(const DampingReport& report, double f_norm,
                           double g_norm, double h_seminorm) {
  Lemma1Bounds bounds;
  if (!(report.d0 > 0.0)) return bounds;  // not applicable
  bounds.applicable = true;
  const double p1 = report.exponent + 1.0;
  bounds.M = (g_norm + h_seminorm + report.d1 * f_norm +
              report.d2 * std::pow(f_norm, p1)) /
                 report.d0 +
             f_norm;
  bounds.p_bound = g_norm + h_seminorm + report.d1 * bounds.M +
                   report.d2 * std::pow(bounds.M, p1);
  return bounds;
}

namespace {

std::vector<double> grid_times(double t_end, double interval) {
  std::vector<double> times;
  const int count = static_cast<int>(std::lround(t_end / interval));
  times.reserve(count + 1);
  for (int k = 0; k <= count; ++k) times.push_back(k * interval);
  return times;
}

// Values of a report's state energies at the requested times.
std::vector<double> pick_energies(const DecayReport& report,
                                  const std::vector<double>& times) {
  std::vector<double> out;
  for (double t : times) {
    double value = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < report.sample_times.size(); ++i)
      if (std::abs(report.sample_times[i] - t) < 1e-9) {
        value = report.energies_state[i];
        break;
      }
    if (std::isnan(value))
      throw std::invalid_argument(
          "decay table: report time " + std::to_string(t) +
          " is not a sample time");
    out.push_back(value);
  }
  return out;
}

struct FullOrderSetup {
  GlobalSpace space;
  Operators ops;
  State steady;
  State initial;
};

FullOrderSetup prepare_full_order(const DecayTableSpec& spec,
                                  const DiscretizationConfig& disc) {
  GlobalSpace space = GlobalSpace::build(spec.network, disc);
  Operators ops = assemble(space);
  SolverOptions options;
  options.newton_tol = spec.newton_tol;
  const Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(space.n_pressure());
  const Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(space.n_flux());
  State steady =
      solve_stationary(space, ops, spec.damping, zero_f, zero_g,
                       spec.network.boundary_values_final(), options);
  State initial =
      solve_stationary(space, ops, spec.damping, zero_f, zero_g,
                       spec.network.boundary_values(0.0), options);
  initial.t = 0.0;
  return {std::move(space), std::move(ops), std::move(steady),
          std::move(initial)};
}

DecayRow run_full_row(const DecayTableSpec& spec, const TableRowSpec& row) {
  FullOrderSetup setup = prepare_full_order(spec, row.disc);
  SolverOptions options;
  options.newton_tol = spec.newton_tol;
  options.dt = spec.dt;
  options.t_end = spec.t_end;
  options.sample_times = grid_times(spec.t_end, spec.sample_interval);
  const Trajectory trajectory =
      integrate(setup.space, setup.ops, spec.damping, setup.initial, options);

  DecayRow out;
  out.method = row.method;
  out.param = row.param;
  out.report.fit_window = spec.fit_window;
  for (const Sample& sample : trajectory.samples) {
    out.report.sample_times.push_back(sample.state.t);
    out.report.energies_state.push_back(energy(
        setup.ops, sample.state.p - setup.steady.p,
        sample.state.m - setup.steady.m));
    out.report.energies_derivative.push_back(
        energy(setup.ops, sample.dp, sample.dm));
  }
  out.report.gamma = fit_gamma(out.report.sample_times,
                               out.report.energies_state, spec.fit_window);
  out.gamma = out.report.gamma;
  out.energies = pick_energies(out.report, spec.report_times);
  return out;
}

struct TrainingData {
  FullOrderSetup setup;
  SnapshotSet snapshots;
};

TrainingData run_training(const DecayTableSpec& spec) {
  FullOrderSetup setup = prepare_full_order(spec, spec.training);
  SolverOptions options;
  options.newton_tol = spec.newton_tol;
  options.dt = spec.dt;
  options.t_end = spec.t_end;
  options.sample_times = grid_times(spec.t_end, spec.snapshot_interval);
  const Trajectory trajectory =
      integrate(setup.space, setup.ops, spec.damping, setup.initial, options);
  SnapshotSet snapshots = collect_snapshots(trajectory, setup.steady);
  return {std::move(setup), std::move(snapshots)};
}

DecayRow run_reduced_row(const DecayTableSpec& spec, const TableRowSpec& row,
                         const TrainingData& training) {
  const FullOrderSetup& setup = training.setup;
  const ReducedModel model =
      build_reduced(setup.space, setup.ops, training.snapshots, row.n_sv);

  SolverOptions options;
  options.newton_tol = spec.newton_tol;
  options.dt = spec.dt;
  options.t_end = spec.t_end;
  options.sample_times = grid_times(spec.t_end, spec.sample_interval);
  const State reduced_initial = restrict_state(model, setup.ops, setup.initial);
  const Trajectory trajectory =
      simulate_reduced(model, setup.space, setup.ops, spec.damping,
                       reduced_initial, options);

  DecayRow out;
  out.method = row.method;
  out.param = row.param;
  out.report.fit_window = spec.fit_window;
  for (const Sample& sample : trajectory.samples) {
    out.report.sample_times.push_back(sample.state.t);
    // Reduced coordinates are deviations from the steady centering state.
    out.report.energies_state.push_back(
        reduced_energy(model, sample.state.p, sample.state.m));
    out.report.energies_derivative.push_back(
        reduced_energy(model, sample.dp, sample.dm));
  }
  out.report.gamma = fit_gamma(out.report.sample_times,
                               out.report.energies_state, spec.fit_window);
  out.gamma = out.report.gamma;
  out.energies = pick_energies(out.report, spec.report_times);
  return out;
}

int thread_budget(const DecayTableSpec& spec) {
  if (spec.max_threads > 0) return spec.max_threads;
  if (const char* env = std::getenv("PIPEWAVE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

DecayTable run_decay_table(const DecayTableSpec& spec) {
  DecayTable table;
  table.report_times = spec.report_times;
  table.rows.resize(spec.rows.size());

  bool has_reduced = false;
  for (const TableRowSpec& row : spec.rows)
    if (row.n_sv > 0) has_reduced = true;
  // The training run is shared by every reduced row; reduced rows then cost
  // almost nothing, so they are evaluated inline after training.
  std::unique_ptr<TrainingData> training;
  if (has_reduced) training = std::make_unique<TrainingData>(run_training(spec));

  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= spec.rows.size()) return;
      try {
        const TableRowSpec& row = spec.rows[i];
        table.rows[i] = row.n_sv > 0 ? run_reduced_row(spec, row, *training)
                                     : run_full_row(spec, row);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const int n_threads =
      std::min<int>(thread_budget(spec), static_cast<int>(spec.rows.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return table;
}

std::string format_significant(double value, int digits) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

void write_decay_csv(const DecayTable& table, std::ostream& out) {
  out << "method,param";
  for (double t : table.report_times)
    out << ",E" << format_significant(t, 5);
  out << ",gamma\n";
  for (const DecayRow& row : table.rows) {
    out << row.method << ',' << format_significant(row.param, 5);
    for (double e : row.energies) out << ',' << format_significant(e, 5);
    out << ',' << format_significant(row.gamma, 5) << '\n';
  }
}

}  // namespace pipewave
