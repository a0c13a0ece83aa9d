#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pipewave/network.hpp"
#include "pipewave/quadrature.hpp"

namespace pipewave {

// Discretization backends. `fem` pairs piecewise constants (pressure) with
// continuous piecewise linears (flux) and trapezoidal lumping; `spectral`
// pairs Legendre polynomials of degree order-1 (pressure) with Lagrange
// polynomials of degree order at Gauss-Lobatto points (flux).
// `spectral_unpaired` is a deliberately incompatible test pair with pressure
// degree equal to the flux degree.
enum class Method { fem, spectral, spectral_unpaired };

struct DiscretizationConfig {
  Method method = Method::fem;
  double h = 0.1;  // fem mesh width per unit length; 1/h must be an integer
  int order = 3;   // spectral flux polynomial degree, >= 1
};

struct EdgeSpace {
  Method method = Method::fem;
  int cells = 1;  // fem subdivisions; 1 for spectral
  int order = 1;  // flux polynomial degree per cell/edge
  Eigen::VectorXd nodes;  // flux nodal points in the reference interval [0,1]
  QuadratureRule lumping; // collocated rule at `nodes` (reference interval)
  int n_flux = 0;
  int n_pressure = 0;
};

// Global degree-of-freedom management. Flux unknowns are nodal values per
// edge with the junction balance sum_e sign_e * m^e(v) = 0 eliminated
// strongly at interior vertices: one endpoint value per interior vertex is
// expressed through the remaining incident endpoint values, giving the
// sparse expansion matrix R (local nodal dofs x reduced dofs). Pressure
// unknowns are stacked per-edge modal/cellwise coefficients.
class GlobalSpace {
 public:
  static GlobalSpace build(const Network& network, const DiscretizationConfig& config);

  const Network& network() const { return network_; }
  const DiscretizationConfig& config() const { return config_; }
  const EdgeSpace& edge_space(int e) const { return edges_[e]; }

  int n_flux() const { return n_flux_; }
  int n_flux_local() const { return n_flux_local_; }
  int n_pressure() const { return n_pressure_; }

  int flux_offset(int e) const { return flux_offsets_[e]; }
  int pressure_offset(int e) const { return pressure_offsets_[e]; }
  // Local nodal index of the endpoint of edge e at vertex-side `sign`
  // (-1: tail / x=0, +1: head / x=1).
  int endpoint_dof(int e, int sign) const;

  const Eigen::SparseMatrix<double>& expansion() const { return expansion_; }
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const {
    return expansion_ * reduced;
  }
  // Inverse of expand on constraint-satisfying local vectors (picks the
  // retained nodal entries).
  Eigen::VectorXd reduce(const Eigen::VectorXd& local) const;

  // Largest junction-balance violation of the expanded field.
  double balance_violation(const Eigen::VectorXd& reduced) const;

  // Reduced-coordinate basis of the edgewise-constant, junction-balanced
  // flux fields (the divergence-free kernel; cycle space of the graph plus
  // one global constant per boundary-free direction).
  Eigen::MatrixXd constant_flux_kernel() const;

 private:
  Network network_ = Network::single_pipe(0.0, 0.0);
  DiscretizationConfig config_;
  std::vector<EdgeSpace> edges_;
  std::vector<int> flux_offsets_, pressure_offsets_;
  std::vector<int> kept_;         // reduced index -> local nodal dof
  std::vector<int> local_to_red_; // local dof -> reduced index, -1 if eliminated
  Eigen::SparseMatrix<double> expansion_;
  int n_flux_ = 0, n_flux_local_ = 0, n_pressure_ = 0;
};

// Point evaluation of coefficient vectors, x in the reference interval of
// edge e.
double evaluate_flux(const GlobalSpace& space, const Eigen::VectorXd& m_reduced,
                     int e, double x);
double evaluate_pressure(const GlobalSpace& space, const Eigen::VectorXd& p,
                         int e, double x);

std::string to_string(Method method);

}  // namespace pipewave
