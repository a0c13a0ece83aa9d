#include "pipewave/space.hpp"

#include <cmath>
#include <stdexcept>

namespace pipewave {

namespace {

EdgeSpace make_edge_space(const Edge& edge, const DiscretizationConfig& config) {
  EdgeSpace es;
  es.method = config.method;
  if (config.method == Method::fem) {
    const double cells_exact = edge.length / config.h;
    const int cells = static_cast<int>(std::lround(cells_exact));
    if (cells < 1 || std::abs(cells_exact - cells) > 1e-9 * std::max(1.0, cells_exact))
      throw std::invalid_argument(
          "mesh width " + std::to_string(config.h) + " does not divide edge '" +
          edge.id + "' of length " + std::to_string(edge.length));
    es.cells = cells;
    es.order = 1;
    es.nodes = Eigen::VectorXd::LinSpaced(cells + 1, 0.0, 1.0);
    es.lumping = trapezoid_rule(cells);
    es.n_flux = cells + 1;
    es.n_pressure = cells;
  } else {
    if (config.order < 1)
      throw std::invalid_argument("spectral order must be >= 1");
    es.cells = 1;
    es.order = config.order;
    es.lumping = gauss_lobatto_rule(config.order);
    es.nodes = es.lumping.points;
    es.n_flux = config.order + 1;
    es.n_pressure =
        (config.method == Method::spectral_unpaired) ? config.order + 1 : config.order;
  }
  return es;
}

}  // namespace

GlobalSpace GlobalSpace::build(const Network& network,
                               const DiscretizationConfig& config) {
  GlobalSpace space;
  space.network_ = network;
  space.config_ = config;

  int flux_local = 0;
  int pressure = 0;
  for (int e = 0; e < network.n_edges(); ++e) {
    space.edges_.push_back(make_edge_space(network.edge(e), config));
    space.flux_offsets_.push_back(flux_local);
    space.pressure_offsets_.push_back(pressure);
    flux_local += space.edges_.back().n_flux;
    pressure += space.edges_.back().n_pressure;
  }
  space.n_flux_local_ = flux_local;
  space.n_pressure_ = pressure;

  // One eliminated endpoint value per interior vertex: the first incident
  // endpoint is expressed through the remaining ones so that the junction
  // balance holds identically.
  struct Elimination {
    std::vector<std::pair<int, double>> terms;  // (local dof, coefficient)
  };
  std::vector<int> eliminated(flux_local, -1);
  std::vector<Elimination> eliminations;
  for (int v : network.interior_vertices()) {
    const auto& incident = network.incident(v);
    const auto& lead = incident.front();
    const int lead_dof = space.endpoint_dof(lead.edge, lead.sign);
    Elimination elim;
    for (size_t i = 1; i < incident.size(); ++i) {
      const int dof = space.endpoint_dof(incident[i].edge, incident[i].sign);
      elim.terms.emplace_back(dof, -static_cast<double>(lead.sign) * incident[i].sign);
    }
    eliminated[lead_dof] = static_cast<int>(eliminations.size());
    eliminations.push_back(std::move(elim));
  }

  space.local_to_red_.assign(flux_local, -1);
  for (int dof = 0; dof < flux_local; ++dof) {
    if (eliminated[dof] < 0) {
      space.local_to_red_[dof] = static_cast<int>(space.kept_.size());
      space.kept_.push_back(dof);
    }
  }
  space.n_flux_ = static_cast<int>(space.kept_.size());

  std::vector<Eigen::Triplet<double>> triplets;
  for (int dof = 0; dof < flux_local; ++dof) {
    if (eliminated[dof] < 0) {
      triplets.emplace_back(dof, space.local_to_red_[dof], 1.0);
    } else {
      for (const auto& [other, coef] : eliminations[eliminated[dof]].terms)
        triplets.emplace_back(dof, space.local_to_red_[other], coef);
    }
  }
  space.expansion_.resize(flux_local, space.n_flux_);
  space.expansion_.setFromTriplets(triplets.begin(), triplets.end());
  return space;
}

int GlobalSpace::endpoint_dof(int e, int sign) const {
  return flux_offsets_[e] + (sign < 0 ? 0 : edges_[e].n_flux - 1);
}

Eigen::VectorXd GlobalSpace::reduce(const Eigen::VectorXd& local) const {
  Eigen::VectorXd reduced(n_flux_);
  for (int i = 0; i < n_flux_; ++i) reduced(i) = local(kept_[i]);
  return reduced;
}

double GlobalSpace::balance_violation(const Eigen::VectorXd& reduced) const {
  const Eigen::VectorXd local = expand(reduced);
  double worst = 0.0;
  for (int v : network_.interior_vertices()) {
    double balance = 0.0;
    for (const auto& inc : network_.incident(v))
      balance += inc.sign * local(endpoint_dof(inc.edge, inc.sign));
    worst = std::max(worst, std::abs(balance));
  }
  return worst;
}

Eigen::MatrixXd GlobalSpace::constant_flux_kernel() const {
  const int n_edges = network_.n_edges();
  const auto& interior = network_.interior_vertices();
  Eigen::MatrixXd edge_kernel;
  if (interior.empty()) {
    edge_kernel = Eigen::MatrixXd::Identity(n_edges, n_edges);
  } else {
    Eigen::MatrixXd constraints =
        Eigen::MatrixXd::Zero(static_cast<int>(interior.size()), n_edges);
    for (size_t i = 0; i < interior.size(); ++i)
      for (const auto& inc : network_.incident(interior[i]))
        constraints(static_cast<int>(i), inc.edge) += inc.sign;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(constraints);
    lu.setThreshold(1e-12);
    edge_kernel = lu.kernel();
    if (lu.dimensionOfKernel() == 0)
      return Eigen::MatrixXd::Zero(n_flux_, 0);
  }

  Eigen::MatrixXd kernel(n_flux_, edge_kernel.cols());
  for (int c = 0; c < edge_kernel.cols(); ++c) {
    Eigen::VectorXd local(n_flux_local_);
    for (int e = 0; e < n_edges; ++e)
      local.segment(flux_offsets_[e], edges_[e].n_flux).setConstant(edge_kernel(e, c));
    kernel.col(c) = reduce(local);
    kernel.col(c).normalize();
  }
  return kernel;
}

double evaluate_flux(const GlobalSpace& space, const Eigen::VectorXd& m_reduced,
                     int e, double x) {
  const EdgeSpace& es = space.edge_space(e);
  const Eigen::VectorXd local = space.expand(m_reduced);
  const auto nodal = local.segment(space.flux_offset(e), es.n_flux);
  if (es.method == Method::fem) {
    const int cell = std::min(static_cast<int>(x * es.cells), es.cells - 1);
    const double s = x * es.cells - cell;
    return (1.0 - s) * nodal(cell) + s * nodal(cell + 1);
  }
  return lagrange_values(es.nodes, x).dot(nodal);
}

double evaluate_pressure(const GlobalSpace& space, const Eigen::VectorXd& p,
                         int e, double x) {
  const EdgeSpace& es = space.edge_space(e);
  const auto coeffs = p.segment(space.pressure_offset(e), es.n_pressure);
  if (es.method == Method::fem) {
    const int cell = std::min(static_cast<int>(x * es.cells), es.cells - 1);
    return coeffs(cell);
  }
  double value = 0.0;
  for (int k = 0; k < es.n_pressure; ++k) value += coeffs(k) * legendre(k, x);
  return value;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::fem: return "fem";
    case Method::spectral: return "spectral";
    case Method::spectral_unpaired: return "spectral_unpaired";
  }
  return "unknown";
}

}  // namespace pipewave
