#include "pipewave/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pipewave {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Exact local divergence block (n_pressure x n_flux) on the reference
// interval; entries are length-independent because (dx v, q) transforms
// with weight 1.
Eigen::MatrixXd local_divergence(const EdgeSpace& es) {
  Eigen::MatrixXd Gl = Eigen::MatrixXd::Zero(es.n_pressure, es.n_flux);
  if (es.method == Method::fem) {
    for (int c = 0; c < es.cells; ++c) {
      Gl(c, c) = -1.0;
      Gl(c, c + 1) = 1.0;
    }
  } else {
    // (P_k, l_j') integrated with the Lobatto rule, exact since the
    // integrand has degree <= 2*order - 1.
    const Eigen::MatrixXd D = lagrange_derivative_matrix(es.nodes);
    for (int k = 0; k < es.n_pressure; ++k)
      for (int j = 0; j < es.n_flux; ++j) {
        double entry = 0.0;
        for (int n = 0; n < es.n_flux; ++n)
          entry += es.lumping.weights(n) * legendre(k, es.nodes(n)) * D(n, j);
        Gl(k, j) = entry;
      }
  }
  return Gl;
}

// Consistent local flux mass (physical scale).
Eigen::MatrixXd local_flux_mass(const EdgeSpace& es, double length) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(es.n_flux, es.n_flux);
  if (es.method == Method::fem) {
    const double hc = length / es.cells;
    for (int c = 0; c < es.cells; ++c) {
      M(c, c) += hc / 3.0;
      M(c + 1, c + 1) += hc / 3.0;
      M(c, c + 1) += hc / 6.0;
      M(c + 1, c) += hc / 6.0;
    }
  } else {
    const QuadratureRule gauss = gauss_legendre_rule(es.order + 1);
    for (int q = 0; q < gauss.points.size(); ++q) {
      const Eigen::VectorXd values = lagrange_values(es.nodes, gauss.points(q));
      M += (length * gauss.weights(q)) * values * values.transpose();
    }
  }
  return M;
}

}  // namespace

Operators assemble(const GlobalSpace& space) {
  const Network& network = space.network();
  Operators ops;

  Triplets mp, gl, mc;
  ops.weights.resize(space.n_flux_local());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const double length = network.edge(e).length;
    const int po = space.pressure_offset(e);
    const int fo = space.flux_offset(e);

    if (es.method == Method::fem) {
      const double hc = length / es.cells;
      for (int c = 0; c < es.n_pressure; ++c) mp.emplace_back(po + c, po + c, hc);
    } else {
      for (int k = 0; k < es.n_pressure; ++k)
        mp.emplace_back(po + k, po + k, length / (2 * k + 1));
    }

    const Eigen::MatrixXd Gl = local_divergence(es);
    for (int i = 0; i < es.n_pressure; ++i)
      for (int j = 0; j < es.n_flux; ++j)
        if (Gl(i, j) != 0.0) gl.emplace_back(po + i, fo + j, Gl(i, j));

    ops.weights.segment(fo, es.n_flux) = length * es.lumping.weights;

    const Eigen::MatrixXd Mc = local_flux_mass(es, length);
    for (int i = 0; i < es.n_flux; ++i)
      for (int j = 0; j < es.n_flux; ++j)
        if (Mc(i, j) != 0.0) mc.emplace_back(fo + i, fo + j, Mc(i, j));
  }

  ops.Mp.resize(space.n_pressure(), space.n_pressure());
  ops.Mp.setFromTriplets(mp.begin(), mp.end());

  const Eigen::SparseMatrix<double>& R = space.expansion();

  Eigen::SparseMatrix<double> G_local(space.n_pressure(), space.n_flux_local());
  G_local.setFromTriplets(gl.begin(), gl.end());
  ops.G = G_local * R;

  Eigen::SparseMatrix<double> W(space.n_flux_local(), space.n_flux_local());
  Triplets wt;
  for (int i = 0; i < space.n_flux_local(); ++i)
    wt.emplace_back(i, i, ops.weights(i));
  W.setFromTriplets(wt.begin(), wt.end());
  ops.Mm = R.transpose() * W * R;

  Eigen::SparseMatrix<double> Mc_local(space.n_flux_local(), space.n_flux_local());
  Mc_local.setFromTriplets(mc.begin(), mc.end());
  ops.Mm_exact = R.transpose() * Mc_local * R;

  const auto& boundary = network.boundary_vertices();
  Eigen::SparseMatrix<double> E(space.n_flux_local(),
                                static_cast<int>(boundary.size()));
  Triplets bt;
  for (size_t j = 0; j < boundary.size(); ++j) {
    const auto& inc = network.incident(boundary[j]).front();
    bt.emplace_back(space.endpoint_dof(inc.edge, inc.sign),
                    static_cast<int>(j), static_cast<double>(inc.sign));
  }
  E.setFromTriplets(bt.begin(), bt.end());
  ops.B = R.transpose() * E;

  return ops;
}

Eigen::VectorXd apply_damping(const GlobalSpace& space, const Operators& ops,
                              const DampingModel& damping,
                              const Eigen::VectorXd& m_reduced) {
  Eigen::VectorXd local = space.expand(m_reduced);
  for (int i = 0; i < local.size(); ++i)
    local(i) = ops.weights(i) * damping.value(local(i));
  return space.expansion().transpose() * local;
}

Eigen::SparseMatrix<double> damping_jacobian(const GlobalSpace& space,
                                             const Operators& ops,
                                             const DampingModel& damping,
                                             const Eigen::VectorXd& m_reduced) {
  const Eigen::VectorXd local = space.expand(m_reduced);
  Eigen::SparseMatrix<double> D(space.n_flux_local(), space.n_flux_local());
  Triplets dt;
  for (int i = 0; i < local.size(); ++i)
    dt.emplace_back(i, i, ops.weights(i) * damping.derivative(local(i)));
  D.setFromTriplets(dt.begin(), dt.end());
  const Eigen::SparseMatrix<double>& R = space.expansion();
  return Eigen::SparseMatrix<double>(R.transpose() * D * R);
}

CompatibilityReport check_compatibility(const GlobalSpace& space) {
  const Operators ops = assemble(space);
  const Network& network = space.network();
  CompatibilityReport report;

  // Image test: rank of the divergence map must equal the pressure
  // dimension, and every flux basis derivative must project onto the
  // pressure space without defect.
  const Eigen::MatrixXd G = Eigen::MatrixXd(ops.G);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
  qr.setThreshold(1e-10);
  const bool full_rank = qr.rank() == space.n_pressure();

  const Eigen::VectorXd mp_diag = ops.Mp.diagonal();
  double image_residual = 0.0;
  for (int r = 0; r < space.n_flux(); ++r) {
    const Eigen::VectorXd local =
        space.expand(Eigen::VectorXd::Unit(space.n_flux(), r));
    // ||dx v||^2 over the network and the norm of its pressure projection.
    double deriv_norm2 = 0.0;
    for (int e = 0; e < network.n_edges(); ++e) {
      const EdgeSpace& es = space.edge_space(e);
      const double length = network.edge(e).length;
      const auto nodal = local.segment(space.flux_offset(e), es.n_flux);
      if (es.method == Method::fem) {
        const double hc = length / es.cells;
        for (int c = 0; c < es.cells; ++c) {
          const double slope = (nodal(c + 1) - nodal(c)) / hc;
          deriv_norm2 += slope * slope * hc;
        }
      } else {
        const Eigen::MatrixXd D = lagrange_derivative_matrix(es.nodes);
        const Eigen::VectorXd deriv_nodal = D * nodal;  // reference derivative
        const QuadratureRule gauss = gauss_legendre_rule(es.order + 1);
        for (int q = 0; q < gauss.points.size(); ++q) {
          const double dv =
              lagrange_values(es.nodes, gauss.points(q)).dot(deriv_nodal);
          deriv_norm2 += gauss.weights(q) * dv * dv / length;
        }
      }
    }
    const Eigen::VectorXd g_col = G.col(r);
    const Eigen::VectorXd projection = g_col.array() / mp_diag.array();
    const double projected2 = projection.dot(g_col);
    const double defect2 = std::max(deriv_norm2 - projected2, 0.0);
    if (deriv_norm2 > 1e-28)
      image_residual =
          std::max(image_residual, std::sqrt(defect2 / deriv_norm2));
  }
  report.image_residual = image_residual;
  // The defect is formed as a difference of squares, so a compatible pair
  // still shows residuals near sqrt(machine eps); the gate 1e-6 corresponds
  // to a defect energy fraction of 1e-12, while an incompatible pair
  // produces O(1) residuals.
  report.derivative_image_equals_Q = full_rank && image_residual < 1e-6;

  // Kernel test: the divergence-free edgewise-constant fields must be
  // representable in the flux space (constant nodal values per edge,
  // junction-balanced, and annihilated by G).
  const Eigen::MatrixXd kernel = space.constant_flux_kernel();
  double kernel_residual = 0.0;
  for (int c = 0; c < kernel.cols(); ++c) {
    const Eigen::VectorXd reduced = kernel.col(c);
    const Eigen::VectorXd local = space.expand(reduced);
    for (int e = 0; e < network.n_edges(); ++e) {
      const EdgeSpace& es = space.edge_space(e);
      const auto nodal = local.segment(space.flux_offset(e), es.n_flux);
      kernel_residual = std::max(
          kernel_residual, (nodal.array() - nodal(0)).abs().maxCoeff());
    }
    kernel_residual = std::max(kernel_residual, space.balance_violation(reduced));
    kernel_residual =
        std::max(kernel_residual, (ops.G * reduced).cwiseAbs().maxCoeff());
  }
  report.kernel_residual = kernel_residual;
  report.kernel_contained = kernel.cols() > 0 && kernel_residual < 1e-10;

  return report;
}

NormEquivalenceReport certify_norm_equivalence(const GlobalSpace& space,
                                               const Operators& ops) {
  const Eigen::MatrixXd exact = Eigen::MatrixXd(ops.Mm_exact);
  const Eigen::MatrixXd lumped = Eigen::MatrixXd(ops.Mm);
  Eigen::LLT<Eigen::MatrixXd> llt(exact);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "certify_norm_equivalence: consistent flux mass is not positive "
        "definite (broken basis)");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(exact, lumped);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("certify_norm_equivalence: eigensolver failed");
  NormEquivalenceReport report;
  report.lambda_min = eig.eigenvalues().minCoeff();
  report.lambda_max = eig.eigenvalues().maxCoeff();
  report.satisfied =
      report.lambda_min >= 0.25 - 1e-12 && report.lambda_max <= 2.25 + 1e-12;
  return report;
}

Eigen::VectorXd pressure_load(const GlobalSpace& space, const EdgeFunction& f) {
  const Network& network = space.network();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.n_pressure());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const double length = network.edge(e).length;
    const int po = space.pressure_offset(e);
    if (es.method == Method::fem) {
      const QuadratureRule gauss = gauss_legendre_rule(5);
      const double href = 1.0 / es.cells;
      for (int c = 0; c < es.cells; ++c)
        for (int q = 0; q < gauss.points.size(); ++q) {
          const double x = (c + gauss.points(q)) * href;
          load(po + c) += length * href * gauss.weights(q) * f(e, x);
        }
    } else {
      const QuadratureRule gauss = gauss_legendre_rule(es.order + 4);
      for (int q = 0; q < gauss.points.size(); ++q) {
        const double x = gauss.points(q);
        const double fv = length * gauss.weights(q) * f(e, x);
        for (int k = 0; k < es.n_pressure; ++k)
          load(po + k) += fv * legendre(k, x);
      }
    }
  }
  return load;
}

Eigen::VectorXd flux_load(const GlobalSpace& space, const EdgeFunction& g) {
  const Network& network = space.network();
  Eigen::VectorXd local = Eigen::VectorXd::Zero(space.n_flux_local());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const double length = network.edge(e).length;
    const int fo = space.flux_offset(e);
    if (es.method == Method::fem) {
      const QuadratureRule gauss = gauss_legendre_rule(5);
      const double href = 1.0 / es.cells;
      for (int c = 0; c < es.cells; ++c)
        for (int q = 0; q < gauss.points.size(); ++q) {
          const double s = gauss.points(q);
          const double x = (c + s) * href;
          const double gv = length * href * gauss.weights(q) * g(e, x);
          local(fo + c) += gv * (1.0 - s);
          local(fo + c + 1) += gv * s;
        }
    } else {
      const QuadratureRule gauss = gauss_legendre_rule(es.order + 4);
      for (int q = 0; q < gauss.points.size(); ++q) {
        const double x = gauss.points(q);
        const double gv = length * gauss.weights(q) * g(e, x);
        local.segment(fo, es.n_flux) += gv * lagrange_values(es.nodes, x);
      }
    }
  }
  return space.expansion().transpose() * local;
}

Eigen::VectorXd divergence_load(const GlobalSpace& space, const EdgeFunction& m0) {
  const Network& network = space.network();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.n_pressure());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const int po = space.pressure_offset(e);
    if (es.method == Method::fem) {
      // (dx m0, 1_cell) = m0(b) - m0(a), independent of the edge length.
      const double href = 1.0 / es.cells;
      for (int c = 0; c < es.cells; ++c)
        load(po + c) += m0(e, (c + 1) * href) - m0(e, c * href);
    } else {
      // Integration by parts: (dx m0, P_k) = [m0 P_k] - int m0 P_k'.
      const QuadratureRule gauss = gauss_legendre_rule(es.order + 4);
      for (int k = 0; k < es.n_pressure; ++k) {
        double value = m0(e, 1.0) * legendre(k, 1.0) - m0(e, 0.0) * legendre(k, 0.0);
        for (int q = 0; q < gauss.points.size(); ++q)
          value -= gauss.weights(q) * m0(e, gauss.points(q)) *
                   legendre_derivative(k, gauss.points(q));
        load(po + k) += value;
      }
    }
  }
  return load;
}

Eigen::VectorXd grad_adjoint_load(const GlobalSpace& space, const EdgeFunction& p0) {
  const Network& network = space.network();
  Eigen::VectorXd local = Eigen::VectorXd::Zero(space.n_flux_local());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const int fo = space.flux_offset(e);
    if (es.method == Method::fem) {
      // (p0, dx v) on a cell: the hat slopes are -+cells in the reference
      // coordinate and the transform weight cancels the 1/length.
      const QuadratureRule gauss = gauss_legendre_rule(5);
      const double href = 1.0 / es.cells;
      for (int c = 0; c < es.cells; ++c)
        for (int q = 0; q < gauss.points.size(); ++q) {
          const double x = (c + gauss.points(q)) * href;
          const double pv = gauss.weights(q) * href * p0(e, x);
          local(fo + c) += pv * (-es.cells);
          local(fo + c + 1) += pv * es.cells;
        }
    } else {
      const Eigen::MatrixXd D = lagrange_derivative_matrix(es.nodes);
      const QuadratureRule gauss = gauss_legendre_rule(es.order + 4);
      for (int q = 0; q < gauss.points.size(); ++q) {
        const double x = gauss.points(q);
        const Eigen::VectorXd deriv_values =
            D.transpose() * lagrange_values(es.nodes, x);
        local.segment(fo, es.n_flux) +=
            gauss.weights(q) * p0(e, x) * deriv_values;
      }
    }
  }
  return space.expansion().transpose() * local;
}

Eigen::VectorXd damping_load(const GlobalSpace& space, const Operators& ops,
                             const DampingModel& damping, const EdgeFunction& m0) {
  const Network& network = space.network();
  Eigen::VectorXd local(space.n_flux_local());
  for (int e = 0; e < network.n_edges(); ++e) {
    const EdgeSpace& es = space.edge_space(e);
    const int fo = space.flux_offset(e);
    for (int n = 0; n < es.n_flux; ++n)
      local(fo + n) = ops.weights(fo + n) * damping.value(m0(e, es.nodes(n)));
  }
  return space.expansion().transpose() * local;
}

}  // namespace pipewave
