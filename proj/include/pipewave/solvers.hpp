#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pipewave/operators.hpp"

namespace pipewave {

struct SolverOptions {
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double dt = 0.01;
  double t_end = 50.0;
  // Output times; must lie on the step grid. Empty = record every step.
  std::vector<double> sample_times;
};

struct State {
  Eigen::VectorXd p;
  Eigen::VectorXd m;
  double t = 0.0;
};

struct NewtonStats {
  std::vector<double> residuals;  // residual norm per iteration, including entry
  int iterations = 0;
  bool converged = false;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& message, double residual, int step = -1)
      : std::runtime_error(message), residual(residual), step(step) {}
  double residual;
  int step;
};

struct Sample {
  State state;
  Eigen::VectorXd dp;  // time derivatives defined by the semidiscrete system
  Eigen::VectorXd dm;
};

struct Trajectory {
  std::vector<Sample> samples;
};

// Stationary system
//   G m = f
//   -G^T p + D(m) m = g - B h
// solved by Newton with the exact damping Jacobian in saddle-point form,
// warm-started from the linear-damping problem (flux mass as Jacobian) and
// globalized by backtracking.
State solve_stationary(const GlobalSpace& space, const Operators& ops,
                       const DampingModel& damping, const Eigen::VectorXd& f,
                       const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                       const SolverOptions& options = {},
                       NewtonStats* stats = nullptr);

// Max-norm residual of the stationary system at the given state.
double steady_residual(const GlobalSpace& space, const Operators& ops,
                       const DampingModel& damping, const State& state,
                       const Eigen::VectorXd& h);

// Compatible discrete initialization: solves the stationary system with the
// data induced by the fields (p0, m0), i.e. f = (dx m0, q) and
// g = (d(m0), v)_h - (p0, dx v) + B h (the boundary term is folded into the
// load so that discrete stationary fields are reproduced exactly).
State initial_data(const GlobalSpace& space, const Operators& ops,
                   const DampingModel& damping, const EdgeFunction& p0,
                   const EdgeFunction& m0, const Eigen::VectorXd& h,
                   const SolverOptions& options = {});

// One implicit-midpoint step from `state` over dt (dt may be negative); the
// damping is evaluated at the midpoint state and the boundary ramp at the
// midpoint time. f and g are constant-in-time loads (empty = zero).
State midpoint_step(const GlobalSpace& space, const Operators& ops,
                    const DampingModel& damping, const State& state, double dt,
                    const SolverOptions& options,
                    const Eigen::VectorXd& f = {}, const Eigen::VectorXd& g = {});

// Implicit-midpoint integration from initial.t to options.t_end; boundary
// values come from the network's ramps. Records states and the
// equation-defined derivatives at the sample times.
Trajectory integrate(const GlobalSpace& space, const Operators& ops,
                     const DampingModel& damping, const State& initial,
                     const SolverOptions& options,
                     const Eigen::VectorXd& f = {}, const Eigen::VectorXd& g = {});

// Time derivatives defined by the semidiscrete system at the given state.
void compute_derivatives(const GlobalSpace& space, const Operators& ops,
                         const DampingModel& damping, const State& state,
                         const Eigen::VectorXd& h, Eigen::VectorXd& dp,
                         Eigen::VectorXd& dm, const Eigen::VectorXd& f = {},
                         const Eigen::VectorXd& g = {});

}  // namespace pipewave
