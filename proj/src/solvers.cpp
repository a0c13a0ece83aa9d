#include "pipewave/solvers.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace pipewave {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Saddle-point block matrix [[A11, c12*G], [-c12*G^T, A22]]; A11 may be
// empty (zero block).
SparseMatrix saddle_matrix(const SparseMatrix& G, const SparseMatrix& A11,
                           const SparseMatrix& A22, double c12) {
  const int np = static_cast<int>(G.rows());
  const int nf = static_cast<int>(G.cols());
  Triplets triplets;
  triplets.reserve(A11.nonZeros() + A22.nonZeros() + 2 * G.nonZeros());
  if (A11.size() > 0)
    for (int k = 0; k < A11.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A11, k); it; ++it)
        triplets.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < A22.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A22, k); it; ++it)
      triplets.emplace_back(np + it.row(), np + it.col(), it.value());
  for (int k = 0; k < G.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(G, k); it; ++it) {
      triplets.emplace_back(it.row(), np + it.col(), c12 * it.value());
      triplets.emplace_back(np + it.col(), it.row(), -c12 * it.value());
    }
  SparseMatrix A(np + nf, np + nf);
  A.setFromTriplets(triplets.begin(), triplets.end());
  return A;
}

Eigen::VectorXd zero_or(const Eigen::VectorXd& v, int size) {
  if (v.size() == 0) return Eigen::VectorXd::Zero(size);
  return v;
}

// Newton iteration with backtracking on a residual/Jacobian pair.
template <typename ResidualFn, typename JacobianFn>
bool newton_solve(Eigen::VectorXd& z, const ResidualFn& residual,
                  const JacobianFn& jacobian, double tol, int max_iter,
                  Eigen::SparseLU<SparseMatrix>* solver, bool* analyzed,
                  NewtonStats* stats) {
  Eigen::VectorXd r = residual(z);
  double rnorm = r.norm();
  if (stats) stats->residuals.push_back(rnorm);
  for (int it = 0; it < max_iter; ++it) {
    if (rnorm < tol) {
      if (stats) {
        stats->iterations = it;
        stats->converged = true;
      }
      return true;
    }
    SparseMatrix J = jacobian(z);
    if (!*analyzed) {
      solver->analyzePattern(J);
      *analyzed = true;
    }
    solver->factorize(J);
    if (solver->info() != Eigen::Success) {
      // Degenerate damping (d' vanishing on the whole support) makes the
      // flux block singular; nudge the diagonal and retry once.
      const double shift = 1e-8 * (1.0 + J.coeffs().cwiseAbs().maxCoeff());
      SparseMatrix I(J.rows(), J.cols());
      I.setIdentity();
      J = J + shift * I;
      solver->analyzePattern(J);
      solver->factorize(J);
      *analyzed = false;  // pattern changed; re-analyze on the next iteration
      if (solver->info() != Eigen::Success) return false;
    }
    const Eigen::VectorXd dz = solver->solve(-r);
    double step = 1.0;
    Eigen::VectorXd z_best = z + dz;
    Eigen::VectorXd r_best = residual(z_best);
    double rnorm_best = r_best.norm();
    for (int ls = 0; ls < 20 && rnorm_best >= rnorm; ++ls) {
      step *= 0.5;
      Eigen::VectorXd z_try = z + step * dz;
      Eigen::VectorXd r_try = residual(z_try);
      if (r_try.norm() < rnorm_best) {
        z_best = std::move(z_try);
        r_best = std::move(r_try);
        rnorm_best = r_best.norm();
      }
    }
    z = std::move(z_best);
    r = std::move(r_best);
    rnorm = rnorm_best;
    if (stats) stats->residuals.push_back(rnorm);
  }
  if (stats) {
    stats->iterations = max_iter;
    stats->converged = rnorm < tol;
  }
  return rnorm < tol;
}

}  // namespace

State solve_stationary(const GlobalSpace& space, const Operators& ops,
                       const DampingModel& damping, const Eigen::VectorXd& f,
                       const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                       const SolverOptions& options, NewtonStats* stats) {
  const int np = space.n_pressure();
  const int nf = space.n_flux();
  const Eigen::VectorXd fv = zero_or(f, np);
  const Eigen::VectorXd gv = zero_or(g, nf);
  const Eigen::VectorXd rhs_m = gv - ops.B * h;

  // Warm start from the linear-damping problem (flux mass as damping).
  Eigen::VectorXd z(np + nf);
  {
    Eigen::SparseLU<SparseMatrix> lu;
    const SparseMatrix A = saddle_matrix(ops.G, SparseMatrix(), ops.Mm, 1.0);
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw SolverError("stationary warm-start factorization failed", -1.0);
    Eigen::VectorXd rhs(np + nf);
    rhs.head(np) = fv;
    rhs.tail(nf) = rhs_m;
    z = lu.solve(rhs);
  }

  auto residual = [&](const Eigen::VectorXd& zz) {
    Eigen::VectorXd r(np + nf);
    r.head(np) = ops.G * zz.tail(nf) - fv;
    r.tail(nf) = -ops.G.transpose() * zz.head(np) +
                 apply_damping(space, ops, damping, zz.tail(nf)) - rhs_m;
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& zz) {
    return saddle_matrix(ops.G, SparseMatrix(),
                         damping_jacobian(space, ops, damping, zz.tail(nf)), 1.0);
  };

  const double scale = 1.0 + fv.norm() + rhs_m.norm();
  const double tol = std::max(options.newton_tol, 1e-14 * scale);
  Eigen::SparseLU<SparseMatrix> solver;
  bool analyzed = false;
  if (!newton_solve(z, residual, jacobian, tol, options.newton_max_iter,
                    &solver, &analyzed, stats)) {
    throw SolverError("stationary Newton did not converge; final residual " +
                          std::to_string(residual(z).norm()),
                      residual(z).norm());
  }
  State state;
  state.p = z.head(np);
  state.m = z.tail(nf);
  state.t = 0.0;
  return state;
}

double steady_residual(const GlobalSpace& space, const Operators& ops,
                       const DampingModel& damping, const State& state,
                       const Eigen::VectorXd& h) {
  const Eigen::VectorXd r1 = ops.G * state.m;
  const Eigen::VectorXd r2 = -ops.G.transpose() * state.p +
                             apply_damping(space, ops, damping, state.m) +
                             ops.B * h;
  return std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());
}

State initial_data(const GlobalSpace& space, const Operators& ops,
                   const DampingModel& damping, const EdgeFunction& p0,
                   const EdgeFunction& m0, const Eigen::VectorXd& h,
                   const SolverOptions& options) {
  const Eigen::VectorXd f = divergence_load(space, m0);
  // The grad-adjoint pairing -(p0, dx v) already carries the boundary
  // behavior of p0, so the boundary term is folded into the load; the
  // stationary solve then reproduces stationary fields exactly.
  const Eigen::VectorXd g = damping_load(space, ops, damping, m0) -
                            grad_adjoint_load(space, p0) + ops.B * h;
  return solve_stationary(space, ops, damping, f, g, h, options);
}

namespace {

// Shared implicit-midpoint stage solve; keeps the sparse LU symbolic
// factorization across steps.
class MidpointStepper {
 public:
  MidpointStepper(const GlobalSpace& space, const Operators& ops,
                  const DampingModel& damping, const Eigen::VectorXd& f,
                  const Eigen::VectorXd& g)
      : space_(space),
        ops_(ops),
        damping_(damping),
        f_(zero_or(f, space.n_pressure())),
        g_(zero_or(g, space.n_flux())) {}

  State step(const State& state, double dt, const SolverOptions& options,
             int step_index) {
    const int np = space_.n_pressure();
    const int nf = space_.n_flux();
    const double t_mid = state.t + dt / 2.0;
    const Eigen::VectorXd h = space_.network().boundary_values(t_mid);
    const Eigen::VectorXd rhs_m = g_ - ops_.B * h;

    auto residual = [&](const Eigen::VectorXd& z1) {
      const auto p1 = z1.head(np);
      const auto m1 = z1.tail(nf);
      const Eigen::VectorXd ph = 0.5 * (state.p + p1);
      const Eigen::VectorXd mh = 0.5 * (state.m + m1);
      Eigen::VectorXd r(np + nf);
      r.head(np) = ops_.Mp * (p1 - state.p) / dt + ops_.G * mh - f_;
      r.tail(nf) = ops_.Mm * (m1 - state.m) / dt - ops_.G.transpose() * ph +
                   apply_damping(space_, ops_, damping_, mh) - rhs_m;
      return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& z1) {
      const Eigen::VectorXd mh = 0.5 * (state.m + z1.tail(nf));
      const SparseMatrix DJ = damping_jacobian(space_, ops_, damping_, mh);
      return saddle_matrix(ops_.G, SparseMatrix(ops_.Mp / dt),
                           SparseMatrix(ops_.Mm / dt + 0.5 * DJ), 0.5);
    };

    Eigen::VectorXd z(np + nf);
    z.head(np) = state.p;
    z.tail(nf) = state.m;
    const double scale =
        1.0 + f_.norm() + rhs_m.norm() +
        (ops_.Mp * state.p).norm() / std::abs(dt) +
        (ops_.Mm * state.m).norm() / std::abs(dt);
    const double tol = std::max(options.newton_tol, 1e-14 * scale);
    if (!newton_solve(z, residual, jacobian, tol, options.newton_max_iter,
                      &solver_, &analyzed_, nullptr)) {
      throw SolverError("implicit midpoint Newton did not converge at step " +
                            std::to_string(step_index) + " (t = " +
                            std::to_string(state.t) + ")",
                        residual(z).norm(), step_index);
    }
    State next;
    next.p = z.head(np);
    next.m = z.tail(nf);
    next.t = state.t + dt;
    return next;
  }

 private:
  const GlobalSpace& space_;
  const Operators& ops_;
  const DampingModel& damping_;
  Eigen::VectorXd f_, g_;
  Eigen::SparseLU<SparseMatrix> solver_;
  bool analyzed_ = false;
};

}  // namespace

State midpoint_step(const GlobalSpace& space, const Operators& ops,
                    const DampingModel& damping, const State& state, double dt,
                    const SolverOptions& options, const Eigen::VectorXd& f,
                    const Eigen::VectorXd& g) {
  MidpointStepper stepper(space, ops, damping, f, g);
  return stepper.step(state, dt, options, -1);
}

void compute_derivatives(const GlobalSpace& space, const Operators& ops,
                         const DampingModel& damping, const State& state,
                         const Eigen::VectorXd& h, Eigen::VectorXd& dp,
                         Eigen::VectorXd& dm, const Eigen::VectorXd& f,
                         const Eigen::VectorXd& g) {
  const Eigen::VectorXd fv = zero_or(f, space.n_pressure());
  const Eigen::VectorXd gv = zero_or(g, space.n_flux());
  dp = (fv - ops.G * state.m).cwiseQuotient(ops.Mp.diagonal());
  const Eigen::VectorXd rhs = ops.G.transpose() * state.p -
                              apply_damping(space, ops, damping, state.m) +
                              gv - ops.B * h;
  Eigen::SimplicialLLT<SparseMatrix> llt(ops.Mm);
  dm = llt.solve(rhs);
}

Trajectory integrate(const GlobalSpace& space, const Operators& ops,
                     const DampingModel& damping, const State& initial,
                     const SolverOptions& options, const Eigen::VectorXd& f,
                     const Eigen::VectorXd& g) {
  if (!(options.dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  const double duration = options.t_end - initial.t;
  const int n_steps = static_cast<int>(std::lround(duration / options.dt));
  if (n_steps < 0 || std::abs(initial.t + n_steps * options.dt - options.t_end) >
                         1e-9 * std::max(1.0, std::abs(options.t_end)))
    throw std::invalid_argument("integrate: dt must divide t_end - t0");

  // Map sample times onto the step grid.
  std::vector<char> record(n_steps + 1, options.sample_times.empty() ? 1 : 0);
  for (double s : options.sample_times) {
    const int idx = static_cast<int>(std::lround((s - initial.t) / options.dt));
    if (idx < 0 || idx > n_steps ||
        std::abs(initial.t + idx * options.dt - s) > 1e-9 * std::max(1.0, std::abs(s)))
      throw std::invalid_argument("integrate: sample time " + std::to_string(s) +
                                  " is not on the step grid");
    record[idx] = 1;
  }

  Trajectory trajectory;
  MidpointStepper stepper(space, ops, damping, f, g);
  State state = initial;
  auto record_sample = [&](const State& s) {
    Sample sample;
    sample.state = s;
    compute_derivatives(space, ops, damping, s,
                        space.network().boundary_values(s.t), sample.dp,
                        sample.dm, f, g);
    trajectory.samples.push_back(std::move(sample));
  };
  if (record[0]) record_sample(state);
  for (int n = 0; n < n_steps; ++n) {
    state = stepper.step(state, options.dt, options, n);
    state.t = initial.t + (n + 1) * options.dt;  // avoid accumulation drift
    if (record[n + 1]) record_sample(state);
  }
  return trajectory;
}

}  // namespace pipewave
