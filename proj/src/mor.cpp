#include "pipewave/mor.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pipewave {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

// POD modes of the snapshot columns in the M inner product, via the
// Cholesky factor trick; returns up to n_sv M-orthonormal modes and reports
// the numerical snapshot rank.
Eigen::MatrixXd weighted_pod(const SparseMatrix& M, const Eigen::MatrixXd& S,
                             int n_sv, int* rank_out) {
  Eigen::SimplicialLLT<SparseMatrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("weighted_pod: mass matrix not positive definite");
  const Eigen::MatrixXd Y = llt.matrixU() * (llt.permutationP() * S);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Y, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) ++rank;
  if (rank_out) *rank_out = rank;
  const int keep = std::min(n_sv, rank);
  Eigen::MatrixXd modes(S.rows(), keep);
  for (int i = 0; i < keep; ++i) {
    const Eigen::VectorXd z =
        llt.matrixU().solve(svd.matrixU().col(i).eval());
    modes.col(i) = llt.permutationPinv() * z;
  }
  return modes;
}

// Modified Gram-Schmidt (with reorthogonalization) in the M inner product;
// drops columns whose orthogonal remainder falls below the rank tolerance.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& candidates,
                               const SparseMatrix& M, double rank_tol = 1e-12) {
  const auto m_norm = [&](const Eigen::VectorXd& v) {
    return std::sqrt(std::max(v.dot(M * v), 0.0));
  };
  double scale = 0.0;
  for (int c = 0; c < candidates.cols(); ++c)
    scale = std::max(scale, m_norm(candidates.col(c)));
  std::vector<Eigen::VectorXd> basis;
  for (int c = 0; c < candidates.cols(); ++c) {
    Eigen::VectorXd v = candidates.col(c);
    for (int pass = 0; pass < 2; ++pass)
      for (const Eigen::VectorXd& b : basis) v -= b.dot(M * v) * b;
    const double norm = m_norm(v);
    if (norm > rank_tol * scale) basis.push_back(v / norm);
  }
  Eigen::MatrixXd result(candidates.rows(), static_cast<int>(basis.size()));
  for (size_t i = 0; i < basis.size(); ++i)
    result.col(static_cast<int>(i)) = basis[i];
  return result;
}

// Edgewise antiderivative of a pressure coefficient vector, returned as a
// junction-balanced reduced flux vector: per-edge integration plus the
// minimum-norm edge constants restoring the vertex balance.
Eigen::VectorXd feasible_antiderivative(const GlobalSpace& space,
                                        const Eigen::VectorXd& pressure) {
  const Network& network = space.network();
  Eigen::VectorXd local(space.n_flux_local());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const double length = network.edge(e).length;
    const int fo = space.flux_offset(e);
    const int po = space.pressure_offset(e);
    if (es.method == Method::fem) {
      const double hc = length / es.cells;
      local(fo) = 0.0;
      for (int c = 0; c < es.cells; ++c)
        local(fo + c + 1) = local(fo + c) + pressure(po + c) * hc;
    } else {
      for (int n = 0; n < es.n_flux; ++n) {
        double value = 0.0;
        for (int k = 0; k < es.n_pressure; ++k)
          value += pressure(po + k) * legendre_antiderivative(k, es.nodes(n));
        local(fo + n) = length * value;
      }
    }
  }

  const auto& interior = network.interior_vertices();
  if (!interior.empty()) {
    Eigen::MatrixXd A =
        Eigen::MatrixXd::Zero(static_cast<int>(interior.size()), network.n_edges());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<int>(interior.size()));
    for (size_t i = 0; i < interior.size(); ++i)
      for (const auto& inc : network.incident(interior[i])) {
        A(static_cast<int>(i), inc.edge) += inc.sign;
        r(static_cast<int>(i)) +=
            inc.sign * local(space.endpoint_dof(inc.edge, inc.sign));
      }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    const Eigen::VectorXd constants = cod.solve(-r);
    for (int e = 0; e < network.n_edges(); ++e)
      local.segment(space.flux_offset(e), space.edge_space(e).n_flux)
          .array() += constants(e);
  }
  return space.reduce(local);
}

Eigen::VectorXd reduced_damping_vector(const ReducedModel& model,
                                       const Operators& ops,
                                       const DampingModel& damping,
                                       const Eigen::VectorXd& m_hat) {
  if (!model.reduced_quadrature) {
    Eigen::VectorXd local = model.m_ref_local + model.V_local * m_hat;
    for (int i = 0; i < local.size(); ++i)
      local(i) = ops.weights(i) * damping.value(local(i));
    return model.V_local.transpose() * local;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.n_V());
  for (size_t k = 0; k < model.quad_nodes.size(); ++k) {
    const int n = model.quad_nodes[k];
    const double mv = model.m_ref_local(n) + model.V_local.row(n).dot(m_hat);
    out += model.quad_weights(static_cast<int>(k)) * damping.value(mv) *
           model.V_local.row(n).transpose();
  }
  return out;
}

Eigen::MatrixXd reduced_damping_jacobian(const ReducedModel& model,
                                         const Operators& ops,
                                         const DampingModel& damping,
                                         const Eigen::VectorXd& m_hat) {
  if (!model.reduced_quadrature) {
    const Eigen::VectorXd local = model.m_ref_local + model.V_local * m_hat;
    Eigen::VectorXd diag(local.size());
    for (int i = 0; i < local.size(); ++i)
      diag(i) = ops.weights(i) * damping.derivative(local(i));
    return model.V_local.transpose() * diag.asDiagonal() * model.V_local;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(model.n_V(), model.n_V());
  for (size_t k = 0; k < model.quad_nodes.size(); ++k) {
    const int n = model.quad_nodes[k];
    const double mv = model.m_ref_local(n) + model.V_local.row(n).dot(m_hat);
    out += model.quad_weights(static_cast<int>(k)) * damping.derivative(mv) *
           (model.V_local.row(n).transpose() * model.V_local.row(n));
  }
  return out;
}

// Constant reduced loads entering the deviation-form dynamics.
struct ReducedLoads {
  Eigen::VectorXd ap;  // Q^T (f - G m_ref)
  Eigen::VectorXd am;  // V^T (G^T p_ref + g)
};

ReducedLoads reduced_loads(const ReducedModel& model, const Operators& ops,
                           const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  ReducedLoads loads;
  Eigen::VectorXd f_full =
      f.size() ? f : Eigen::VectorXd::Zero(ops.G.rows());
  Eigen::VectorXd g_full =
      g.size() ? g : Eigen::VectorXd::Zero(ops.G.cols());
  loads.ap = model.Q.transpose() * (f_full - ops.G * model.m_ref);
  loads.am = model.V.transpose() *
             (ops.G.transpose() * model.p_ref + g_full);
  return loads;
}

// Dense Newton with backtracking (reduced systems are small).
template <typename ResidualFn, typename JacobianFn>
bool dense_newton(Eigen::VectorXd& z, const ResidualFn& residual,
                  const JacobianFn& jacobian, double tol, int max_iter,
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
    const Eigen::VectorXd dz = Eigen::PartialPivLU<Eigen::MatrixXd>(jacobian(z))
                                   .solve(-r);
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

void write_matrix(std::ostream& out, const std::string& name,
                  const Eigen::MatrixXd& M) {
  out << name << ' ' << M.rows() << ' ' << M.cols() << '\n';
  char buffer[32];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", M(i, j));
      out << buffer << (j + 1 < M.cols() ? ' ' : '\n');
    }
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expected) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> name >> rows >> cols) || name != expected)
    throw std::runtime_error("reduced model file: expected section '" + expected + "'");
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> M(i, j)))
        throw std::runtime_error("reduced model file: truncated section '" + expected + "'");
  return M;
}

}  // namespace

SnapshotSet collect_snapshots(const Trajectory& trajectory, const State& steady) {
  if (trajectory.samples.empty())
    throw std::invalid_argument("collect_snapshots: empty trajectory");
  SnapshotSet set;
  const int count = static_cast<int>(trajectory.samples.size());
  set.p.resize(steady.p.size(), count);
  set.m.resize(steady.m.size(), count);
  for (int k = 0; k < count; ++k) {
    const Sample& sample = trajectory.samples[k];
    set.times.push_back(sample.state.t);
    set.p.col(k) = sample.state.p - steady.p;
    set.m.col(k) = sample.state.m - steady.m;
  }
  set.p_ref = steady.p;
  set.m_ref = steady.m;
  return set;
}

ReducedModel build_reduced(const GlobalSpace& space, const Operators& ops,
                           const SnapshotSet& snapshots, int n_sv) {
  if (n_sv < 1) throw std::invalid_argument("build_reduced: n_sv must be >= 1");
  int rank_m = 0, rank_p = 0;
  const Eigen::MatrixXd flux_modes =
      weighted_pod(ops.Mm, snapshots.m, n_sv, &rank_m);
  const Eigen::MatrixXd pressure_modes =
      weighted_pod(ops.Mp, snapshots.p, n_sv, &rank_p);
  const int rank = std::min(rank_m, rank_p);
  if (n_sv > rank)
    throw std::invalid_argument("build_reduced: n_sv = " + std::to_string(n_sv) +
                                " exceeds the snapshot rank " + std::to_string(rank));

  // Flux space: POD modes, feasible antiderivatives of the pressure modes,
  // and the divergence-free constant fields.
  const Eigen::MatrixXd kernel = space.constant_flux_kernel();
  Eigen::MatrixXd candidates(space.n_flux(),
                             flux_modes.cols() + pressure_modes.cols() + kernel.cols());
  candidates.leftCols(flux_modes.cols()) = flux_modes;
  for (int c = 0; c < pressure_modes.cols(); ++c)
    candidates.col(flux_modes.cols() + c) =
        feasible_antiderivative(space, pressure_modes.col(c));
  candidates.rightCols(kernel.cols()) = kernel;

  ReducedModel model;
  model.n_sv = n_sv;
  model.V = orthonormalize(candidates, ops.Mm);

  // Pressure space: derivatives of the flux basis. A truncated SVD in the
  // Mp inner product keeps exactly the directions with real derivative
  // content; Gram-Schmidt would normalize roundoff-level remainders into
  // spurious basis vectors.
  const Eigen::VectorXd mp_sqrt =
      Eigen::VectorXd(ops.Mp.diagonal()).cwiseSqrt();
  const Eigen::MatrixXd scaled_derivatives =
      mp_sqrt.cwiseInverse().asDiagonal() * (ops.G * model.V);
  Eigen::JacobiSVD<Eigen::MatrixXd> deriv_svd(scaled_derivatives,
                                              Eigen::ComputeThinU);
  int n_q = 0;
  for (int i = 0; i < deriv_svd.singularValues().size(); ++i)
    if (deriv_svd.singularValues()(i) >
        1e-10 * deriv_svd.singularValues()(0))
      ++n_q;
  model.Q = mp_sqrt.cwiseInverse().asDiagonal() *
            deriv_svd.matrixU().leftCols(n_q);

  model.p_ref = snapshots.p_ref;
  model.m_ref = snapshots.m_ref;
  model.Gr = model.Q.transpose() * (ops.G * model.V);
  model.Br = model.V.transpose() * ops.B;
  model.Mm_energy = model.V.transpose() * ops.Mm_exact * model.V;
  model.V_local = space.expansion() * model.V;
  model.m_ref_local = space.expand(model.m_ref);
  return model;
}

State restrict_state(const ReducedModel& model, const Operators& ops,
                     const State& full) {
  State reduced;
  reduced.p = model.Q.transpose() * (ops.Mp * (full.p - model.p_ref));
  reduced.m = model.V.transpose() * (ops.Mm * (full.m - model.m_ref));
  reduced.t = full.t;
  return reduced;
}

State lift_state(const ReducedModel& model, const State& reduced) {
  State full;
  full.p = model.p_ref + model.Q * reduced.p;
  full.m = model.m_ref + model.V * reduced.m;
  full.t = reduced.t;
  return full;
}

State solve_reduced_stationary(const ReducedModel& model, const GlobalSpace& space,
                               const Operators& ops, const DampingModel& damping,
                               const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& h,
                               const SolverOptions& options, NewtonStats* stats) {
  (void)space;
  const int nq = model.n_Q();
  const int nv = model.n_V();
  const ReducedLoads loads = reduced_loads(model, ops, f, g);
  const Eigen::VectorXd bh = model.Br * h;

  auto residual = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd r(nq + nv);
    r.head(nq) = model.Gr * z.tail(nv) - loads.ap;
    r.tail(nv) = -model.Gr.transpose() * z.head(nq) +
                 reduced_damping_vector(model, ops, damping, z.tail(nv)) -
                 loads.am + bh;
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& z) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nq + nv, nq + nv);
    J.topRightCorner(nq, nv) = model.Gr;
    J.bottomLeftCorner(nv, nq) = -model.Gr.transpose();
    J.bottomRightCorner(nv, nv) =
        reduced_damping_jacobian(model, ops, damping, z.tail(nv));
    return J;
  };

  // Warm start from the linear-damping system (identity reduced mass).
  Eigen::VectorXd z(nq + nv);
  {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nq + nv, nq + nv);
    A.topRightCorner(nq, nv) = model.Gr;
    A.bottomLeftCorner(nv, nq) = -model.Gr.transpose();
    A.bottomRightCorner(nv, nv).setIdentity();
    Eigen::VectorXd rhs(nq + nv);
    rhs.head(nq) = loads.ap;
    rhs.tail(nv) = loads.am - bh;
    z = Eigen::FullPivLU<Eigen::MatrixXd>(A).solve(rhs);
  }

  const double scale = 1.0 + loads.ap.norm() + (loads.am - bh).norm();
  const double tol = std::max(options.newton_tol, 1e-14 * scale);
  if (!dense_newton(z, residual, jacobian, tol, options.newton_max_iter, stats))
    throw SolverError("reduced stationary Newton did not converge",
                      residual(z).norm());
  State state;
  state.p = z.head(nq);
  state.m = z.tail(nv);
  state.t = 0.0;
  return state;
}

Trajectory simulate_reduced(const ReducedModel& model, const GlobalSpace& space,
                            const Operators& ops, const DampingModel& damping,
                            const State& reduced_initial,
                            const SolverOptions& options,
                            const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  if (!(options.dt > 0.0))
    throw std::invalid_argument("simulate_reduced: dt must be positive");
  const int nq = model.n_Q();
  const int nv = model.n_V();
  const ReducedLoads loads = reduced_loads(model, ops, f, g);
  const Network& network = space.network();

  const double duration = options.t_end - reduced_initial.t;
  const int n_steps = static_cast<int>(std::lround(duration / options.dt));
  if (n_steps < 0 ||
      std::abs(reduced_initial.t + n_steps * options.dt - options.t_end) >
          1e-9 * std::max(1.0, std::abs(options.t_end)))
    throw std::invalid_argument("simulate_reduced: dt must divide t_end - t0");
  std::vector<char> record(n_steps + 1, options.sample_times.empty() ? 1 : 0);
  for (double s : options.sample_times) {
    const int idx =
        static_cast<int>(std::lround((s - reduced_initial.t) / options.dt));
    if (idx < 0 || idx > n_steps ||
        std::abs(reduced_initial.t + idx * options.dt - s) >
            1e-9 * std::max(1.0, std::abs(s)))
      throw std::invalid_argument("simulate_reduced: sample time " +
                                  std::to_string(s) + " is not on the step grid");
    record[idx] = 1;
  }

  Trajectory trajectory;
  auto record_sample = [&](const State& s) {
    Sample sample;
    sample.state = s;
    const Eigen::VectorXd h = network.boundary_values(s.t);
    sample.dp = loads.ap - model.Gr * s.m;
    sample.dm = model.Gr.transpose() * s.p -
                reduced_damping_vector(model, ops, damping, s.m) + loads.am -
                model.Br * h;
    trajectory.samples.push_back(std::move(sample));
  };

  State state = reduced_initial;
  if (record[0]) record_sample(state);
  for (int n = 0; n < n_steps; ++n) {
    const double t_mid = state.t + options.dt / 2.0;
    const Eigen::VectorXd bh = model.Br * network.boundary_values(t_mid);
    const State& s0 = state;
    auto residual = [&](const Eigen::VectorXd& z1) {
      const auto p1 = z1.head(nq);
      const auto m1 = z1.tail(nv);
      const Eigen::VectorXd ph = 0.5 * (s0.p + p1);
      const Eigen::VectorXd mh = 0.5 * (s0.m + m1);
      Eigen::VectorXd r(nq + nv);
      r.head(nq) = (p1 - s0.p) / options.dt + model.Gr * mh - loads.ap;
      r.tail(nv) = (m1 - s0.m) / options.dt - model.Gr.transpose() * ph +
                   reduced_damping_vector(model, ops, damping, mh) - loads.am +
                   bh;
      return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& z1) {
      const Eigen::VectorXd mh = 0.5 * (s0.m + z1.tail(nv));
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nq + nv, nq + nv);
      J.topLeftCorner(nq, nq) =
          Eigen::MatrixXd::Identity(nq, nq) / options.dt;
      J.topRightCorner(nq, nv) = 0.5 * model.Gr;
      J.bottomLeftCorner(nv, nq) = -0.5 * model.Gr.transpose();
      J.bottomRightCorner(nv, nv) =
          Eigen::MatrixXd::Identity(nv, nv) / options.dt +
          0.5 * reduced_damping_jacobian(model, ops, damping, mh);
      return J;
    };
    Eigen::VectorXd z(nq + nv);
    z.head(nq) = state.p;
    z.tail(nv) = state.m;
    const double scale = 1.0 + loads.ap.norm() + (loads.am - bh).norm() +
                         (state.p.norm() + state.m.norm()) / options.dt;
    const double tol = std::max(options.newton_tol, 1e-14 * scale);
    if (!dense_newton(z, residual, jacobian, tol, options.newton_max_iter,
                      nullptr))
      throw SolverError("reduced midpoint Newton did not converge at step " +
                            std::to_string(n),
                        residual(z).norm(), n);
    state.p = z.head(nq);
    state.m = z.tail(nv);
    state.t = reduced_initial.t + (n + 1) * options.dt;
    if (record[n + 1]) record_sample(state);
  }
  return trajectory;
}

double reduced_energy(const ReducedModel& model, const Eigen::VectorXd& dp,
                      const Eigen::VectorXd& dm) {
  return 0.5 * dp.squaredNorm() + 0.5 * dm.dot(model.Mm_energy * dm);
}

CompatibilityReport check_reduced_compatibility(const ReducedModel& model,
                                                const GlobalSpace& space,
                                                const Operators& ops) {
  CompatibilityReport report;
  const Eigen::VectorXd mp_diag = ops.Mp.diagonal();

  // Both inclusions between the reduced pressure space and the image of the
  // reduced derivative map, checked by Mp-orthogonal projection.
  Eigen::MatrixXd derivatives = ops.G * model.V;
  for (int c = 0; c < derivatives.cols(); ++c)
    derivatives.col(c).array() /= mp_diag.array();

  double image_residual = 0.0;
  for (int c = 0; c < model.n_V(); ++c) {
    const Eigen::VectorXd t = derivatives.col(c);
    const double norm2 = t.dot(ops.Mp * t);
    if (norm2 < 1e-24) continue;  // derivative-free (kernel) direction
    const Eigen::VectorXd defect =
        t - model.Q * (model.Q.transpose() * (ops.Mp * t));
    image_residual = std::max(
        image_residual, std::sqrt(std::max(defect.dot(ops.Mp * defect), 0.0) / norm2));
  }
  // Reverse inclusion: every Q direction is a derivative of a reduced flux.
  const Eigen::VectorXd mp_sqrt = mp_diag.cwiseSqrt();
  const Eigen::MatrixXd A = mp_sqrt.asDiagonal() * derivatives;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  for (int c = 0; c < model.n_Q(); ++c) {
    const Eigen::VectorXd b = mp_sqrt.asDiagonal() * model.Q.col(c);
    const double defect = (A * qr.solve(b) - b).norm();  // ||q|| = 1 in Mp
    image_residual = std::max(image_residual, defect);
  }
  report.image_residual = image_residual;
  // Same gate as the full-order check: well above roundoff and the SVD
  // truncation level, far below any genuine incompatibility.
  report.derivative_image_equals_Q = image_residual < 1e-6;

  const Eigen::MatrixXd kernel = space.constant_flux_kernel();
  double kernel_residual = 0.0;
  for (int c = 0; c < kernel.cols(); ++c) {
    const Eigen::VectorXd k = kernel.col(c);
    const double norm2 = k.dot(ops.Mm * k);
    const Eigen::VectorXd defect =
        k - model.V * (model.V.transpose() * (ops.Mm * k));
    kernel_residual = std::max(
        kernel_residual, std::sqrt(std::max(defect.dot(ops.Mm * defect), 0.0) / norm2));
  }
  report.kernel_residual = kernel_residual;
  report.kernel_contained = kernel.cols() > 0 && kernel_residual < 1e-10;
  return report;
}

namespace {

// Lawson-Hanson nonnegative least squares.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(A.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<char> passive(n, 0);
  const double tol = 1e-12 * A.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff();
  const int max_outer = 3 * n + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    int best = -1;
    double best_w = tol;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[best] = 1;
    for (int inner = 0; inner < max_outer; ++inner) {
      std::vector<int> idx;
      for (int j = 0; j < n; ++j)
        if (passive[j]) idx.push_back(j);
      Eigen::MatrixXd Ap(A.rows(), static_cast<int>(idx.size()));
      for (size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<int>(k)) = A.col(idx[k]);
      const Eigen::VectorXd z =
          Ap.colPivHouseholderQr().solve(b);
      bool feasible = true;
      for (int k = 0; k < z.size(); ++k)
        if (z(k) <= 0.0) feasible = false;
      if (feasible) {
        x.setZero();
        for (size_t k = 0; k < idx.size(); ++k) x(idx[k]) = z(static_cast<int>(k));
        break;
      }
      double alpha = 1.0;
      for (size_t k = 0; k < idx.size(); ++k)
        if (z(static_cast<int>(k)) <= 0.0) {
          const double xi = x(idx[k]);
          alpha = std::min(alpha, xi / (xi - z(static_cast<int>(k))));
        }
      for (size_t k = 0; k < idx.size(); ++k) {
        const int j = idx[k];
        x(j) += alpha * (z(static_cast<int>(k)) - x(j));
        if (x(j) <= 1e-14) {
          x(j) = 0.0;
          passive[j] = 0;
        }
      }
    }
  }
  return x;
}

}  // namespace

ReducedQuadratureReport reduce_quadrature(ReducedModel& model,
                                          const GlobalSpace& space,
                                          const Operators& ops,
                                          int target_point_count) {
  const int nv = model.n_V();
  const int n_local = static_cast<int>(model.V_local.rows());
  if (target_point_count < nv)
    throw std::invalid_argument(
        "reduce_quadrature: target point count " +
        std::to_string(target_point_count) +
        " is below the reduced flux dimension " + std::to_string(nv));

  std::vector<int> nodes;
  Eigen::VectorXd weights;
  if (target_point_count >= n_local) {
    // Keep the original rule.
    nodes.resize(n_local);
    for (int i = 0; i < n_local; ++i) nodes[i] = i;
    weights = ops.weights;
  } else {
    // Match the quadrature Gram moments of the reduced basis products with
    // nonnegative weights; the full rule is feasible, so the minimum is zero
    // and the active-set solution is sparse.
    const int n_pairs = nv * (nv + 1) / 2;
    Eigen::MatrixXd A(n_pairs, n_local);
    Eigen::VectorXd b(n_pairs);
    int row = 0;
    for (int i = 0; i < nv; ++i)
      for (int j = i; j < nv; ++j, ++row) {
        A.row(row) = model.V_local.col(i).cwiseProduct(model.V_local.col(j));
        double moment = 0.0;
        for (int n = 0; n < n_local; ++n)
          moment += ops.weights(n) * model.V_local(n, i) * model.V_local(n, j);
        b(row) = moment;
      }
    const Eigen::VectorXd w = nnls(A, b);
    const double residual = (A * w - b).norm();
    if (residual > 1e-8 * std::max(1.0, b.norm()))
      throw std::runtime_error(
          "reduce_quadrature: moment matching failed (residual " +
          std::to_string(residual) + ")");
    for (int n = 0; n < n_local; ++n)
      if (w(n) > 0.0) nodes.push_back(n);
    if (static_cast<int>(nodes.size()) > target_point_count)
      throw std::runtime_error(
          "reduce_quadrature: moment matching needs " +
          std::to_string(nodes.size()) + " points, more than the requested " +
          std::to_string(target_point_count));
    weights.resize(static_cast<int>(nodes.size()));
    for (size_t k = 0; k < nodes.size(); ++k)
      weights(static_cast<int>(k)) = w(nodes[k]);
  }

  // Certificate: the exact Gram against the reduced-rule Gram on the flux
  // basis must stay within the norm-equivalence gate.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nv, nv);
  for (size_t k = 0; k < nodes.size(); ++k)
    gram += weights(static_cast<int>(k)) *
            (model.V_local.row(nodes[k]).transpose() *
             model.V_local.row(nodes[k]));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      model.Mm_energy, gram);
  ReducedQuadratureReport report;
  report.point_count = static_cast<int>(nodes.size());
  report.lambda_min = eig.eigenvalues().minCoeff();
  report.lambda_max = eig.eigenvalues().maxCoeff();
  report.certified =
      eig.info() == Eigen::Success && report.lambda_min >= 0.25 - 1e-12 &&
      report.lambda_max <= 2.25 + 1e-12;
  if (!report.certified)
    throw std::runtime_error(
        "reduce_quadrature: norm-equivalence certificate failed (lambda in [" +
        std::to_string(report.lambda_min) + ", " +
        std::to_string(report.lambda_max) + "])");
  model.reduced_quadrature = true;
  model.quad_nodes = nodes;
  model.quad_weights = weights;
  (void)space;
  return report;
}

void save_reduced(const ReducedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reduced model file '" + path + "'");
  out << "pipewave-reduced-model 1\n";
  out << "n_sv " << model.n_sv << '\n';
  write_matrix(out, "V", model.V);
  write_matrix(out, "Q", model.Q);
  write_matrix(out, "p_ref", model.p_ref);
  write_matrix(out, "m_ref", model.m_ref);
  write_matrix(out, "Gr", model.Gr);
  write_matrix(out, "Br", model.Br);
  write_matrix(out, "Mm_energy", model.Mm_energy);
}

ReducedModel load_reduced(const std::string& path, const GlobalSpace& space) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reduced model file '" + path + "'");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "pipewave-reduced-model" || version != 1)
    throw std::runtime_error("'" + path + "' is not a reduced model file");
  ReducedModel model;
  std::string key;
  in >> key >> model.n_sv;
  if (key != "n_sv") throw std::runtime_error("reduced model file: missing n_sv");
  model.V = read_matrix(in, "V");
  model.Q = read_matrix(in, "Q");
  model.p_ref = read_matrix(in, "p_ref");
  model.m_ref = read_matrix(in, "m_ref");
  model.Gr = read_matrix(in, "Gr");
  model.Br = read_matrix(in, "Br");
  model.Mm_energy = read_matrix(in, "Mm_energy");
  if (model.V.rows() != space.n_flux() || model.Q.rows() != space.n_pressure())
    throw std::runtime_error("reduced model file does not match the space dimensions");
  model.V_local = space.expansion() * model.V;
  model.m_ref_local = space.expand(model.m_ref);
  return model;
}

}  // namespace pipewave
