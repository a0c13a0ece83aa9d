#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pipewave/solvers.hpp"

namespace pipewave {

// Trajectory snapshots centered by the steady state (fluctuation snapshots).
struct SnapshotSet {
  std::vector<double> times;
  Eigen::MatrixXd p;  // n_pressure x count
  Eigen::MatrixXd m;  // n_flux x count
  Eigen::VectorXd p_ref, m_ref;  // centering state
};

SnapshotSet collect_snapshots(const Trajectory& trajectory, const State& steady);

// Reduced-order model preserving the compatible-pair structure: the flux
// basis contains the snapshot POD modes, the junction-feasible edgewise
// antiderivatives of the pressure POD modes, and the divergence-free
// constant fields; the pressure basis is the span of the flux-basis
// derivatives. Bases are orthonormal in the full-order mass inner products,
// so the reduced mass matrices are identities.
struct ReducedModel {
  Eigen::MatrixXd V;  // full flux dim x n_V, Mm-orthonormal
  Eigen::MatrixXd Q;  // full pressure dim x n_Q, Mp-orthonormal
  Eigen::VectorXd p_ref, m_ref;  // centering state (training steady state)
  Eigen::MatrixXd Gr;            // n_Q x n_V
  Eigen::MatrixXd Br;            // n_V x n_boundary
  Eigen::MatrixXd Mm_energy;     // V^T Mm_exact V (exact-norm flux energy)
  int n_sv = 0;

  // Optional reduced quadrature for the damping term: a subset of the local
  // flux nodes with reweighted nonnegative weights.
  bool reduced_quadrature = false;
  std::vector<int> quad_nodes;
  Eigen::VectorXd quad_weights;

  // Cached expansions (recomputed on load).
  Eigen::MatrixXd V_local;        // expansion * V
  Eigen::VectorXd m_ref_local;    // expansion * m_ref

  int n_V() const { return static_cast<int>(V.cols()); }
  int n_Q() const { return static_cast<int>(Q.cols()); }
};

ReducedModel build_reduced(const GlobalSpace& space, const Operators& ops,
                           const SnapshotSet& snapshots, int n_sv);

// Mass-orthogonal projection of a full state into reduced coordinates, and
// the lift back.
State restrict_state(const ReducedModel& model, const Operators& ops,
                     const State& full);
State lift_state(const ReducedModel& model, const State& reduced);

// Reduced stationary solve; f and g are full-order load vectors (empty =
// zero), h the boundary values.
State solve_reduced_stationary(const ReducedModel& model, const GlobalSpace& space,
                               const Operators& ops, const DampingModel& damping,
                               const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& h,
                               const SolverOptions& options = {},
                               NewtonStats* stats = nullptr);

// Implicit-midpoint integration in reduced coordinates, same contract as
// solvers::integrate. The damping term is evaluated on the full quadrature
// grid unless a reduced quadrature is installed.
Trajectory simulate_reduced(const ReducedModel& model, const GlobalSpace& space,
                            const Operators& ops, const DampingModel& damping,
                            const State& reduced_initial,
                            const SolverOptions& options,
                            const Eigen::VectorXd& f = {},
                            const Eigen::VectorXd& g = {});

// Energy of a reduced deviation (exact mass norms; the pressure factor is
// the identity by orthonormality).
double reduced_energy(const ReducedModel& model, const Eigen::VectorXd& dp,
                      const Eigen::VectorXd& dm);

// Compatible-pair check on the reduced spaces: derivatives of the flux basis
// span the pressure basis (in the Mp inner product) and the constant
// divergence-free fields are contained in the flux basis.
CompatibilityReport check_reduced_compatibility(const ReducedModel& model,
                                                const GlobalSpace& space,
                                                const Operators& ops);

struct ReducedQuadratureReport {
  int point_count = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool certified = false;
};

// Selects a nonnegative-weight subset of the lumping nodes that reproduces
// the quadrature Gram matrix of the reduced flux basis, certifies the norm
// equivalence gate lambda in [1/4, 9/4] against the exact Gram, and installs
// it on the model. Throws if the requested budget is infeasible or the
// certificate fails.
ReducedQuadratureReport reduce_quadrature(ReducedModel& model,
                                          const GlobalSpace& space,
                                          const Operators& ops,
                                          int target_point_count);

void save_reduced(const ReducedModel& model, const std::string& path);
ReducedModel load_reduced(const std::string& path, const GlobalSpace& space);

}  // namespace pipewave
