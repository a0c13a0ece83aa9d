#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pipewave/mor.hpp"

namespace pipewave {

// Energy 1/2 ||dp||^2 + 1/2 ||dm||^2 of a deviation, using the exact
// (consistent) mass matrices by default; `lumped` switches the flux norm to
// the quadrature mass used by the time stepper.
double energy(const Operators& ops, const Eigen::VectorXd& dp,
              const Eigen::VectorXd& dm, bool lumped = false);

// Least-squares slope of -log E(t) over the samples with t inside `window`.
// Throws std::invalid_argument on fewer than two positive samples in the
// window or on nonpositive energies inside it.
double fit_gamma(const std::vector<double>& times,
                 const std::vector<double>& energies,
                 std::pair<double, double> window = {10.0, 50.0});

// Energy of the time derivatives defined by the semidiscrete system at the
// given state with boundary values h (and optional constant loads).
double derivative_energy(const GlobalSpace& space, const Operators& ops,
                         const DampingModel& damping, const State& state,
                         const Eigen::VectorXd& h,
                         const Eigen::VectorXd& f = {},
                         const Eigen::VectorXd& g = {});

// Sampled decay data of one trajectory.
struct DecayReport {
  std::vector<double> sample_times;
  std::vector<double> energies_state;       // E(p - p_bar, m - m_bar)
  std::vector<double> energies_derivative;  // E(dp/dt, dm/dt)
  double gamma = 0.0;
  std::pair<double, double> fit_window{10.0, 50.0};
};

// A-priori bound evaluation with the generic constant normalized to c = 1:
//   M       = (1/d0) (g + h1 + d1 f + d2 f^{sigma+1}) + f
//   p_bound = g + h1 + d1 M + d2 M^{sigma+1}
// where f, g are data norms and h1 the l1 norm of the boundary values.
// Not applicable when the damping infimum d0 vanishes.
struct Lemma1Bounds {
  bool applicable = false;
  double M = 0.0;
  double p_bound = 0.0;
};

Lemma1Bounds lemma1_bounds(const DampingReport& report, double f_norm,
                           double g_norm, double h_seminorm);

// Decay-table experiment: for each row, compute the steady state for the
// final boundary data, start from the stationary solution for the initial
// boundary data, integrate to t_end, and report energies at the requested
// times plus the fitted decay rate.
struct TableRowSpec {
  std::string method;          // "fem" | "spectral" | "mor" (printed label)
  double param = 0.0;          // printed resolution parameter (h, order, n_sv)
  DiscretizationConfig disc;   // full-order rows
  int n_sv = 0;                // > 0: reduced row using the shared training run
};

struct DecayTableSpec {
  Network network = Network::diamond();
  DampingModel damping = DampingModel::power_abs(1.0, 1.0);
  std::vector<TableRowSpec> rows;

  double dt = 0.01;
  double t_end = 50.0;
  double sample_interval = 1.0;
  std::vector<double> report_times = {0.0, 10.0, 20.0, 30.0, 40.0, 50.0};
  std::pair<double, double> fit_window{10.0, 50.0};
  double newton_tol = 1e-10;

  // Reduced rows: full-order training discretization and snapshot spacing.
  DiscretizationConfig training{Method::fem, 0.005, 3};
  double snapshot_interval = 0.1;

  int max_threads = 0;  // 0: PIPEWAVE_THREADS env var, else hardware
};

struct DecayRow {
  std::string method;
  double param = 0.0;
  std::vector<double> energies;  // at report_times
  double gamma = 0.0;
  DecayReport report;            // full per-sample data
};

struct DecayTable {
  std::vector<DecayRow> rows;
  std::vector<double> report_times;
};

DecayTable run_decay_table(const DecayTableSpec& spec);

// CSV: header `method,param,E0,...,E50,gamma`, values at 5 significant
// digits, locale independent.
void write_decay_csv(const DecayTable& table, std::ostream& out);

// printf "%.<digits>g" formatting (locale independent).
std::string format_significant(double value, int digits = 5);

}  // namespace pipewave
