#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace pipewave {

// Time-dependent boundary pressure: base + amplitude * max(1 - t/ramp_time, 0).
// ramp_time = 0 means a time-invariant value.
struct BoundaryRamp {
  double base = 0.0;
  double amplitude = 0.0;
  double ramp_time = 0.0;

  double value(double t) const {
    if (ramp_time <= 0.0) return base;
    return base + amplitude * std::max(1.0 - t / ramp_time, 0.0);
  }
};

struct Vertex {
  std::string id;
  // Present exactly for boundary vertices; interior vertices carry none.
  std::optional<BoundaryRamp> ramp;

  bool is_boundary() const { return ramp.has_value(); }
};

struct Edge {
  std::string id;
  std::string from;
  std::string to;
  double length = 1.0;
};

enum class NetworkFault {
  duplicate_id,
  unknown_endpoint,
  self_loop,
  nonpositive_length,
  boundary_degree,
  interior_dead_end,
  disconnected,
};

class NetworkError : public std::runtime_error {
 public:
  NetworkError(NetworkFault fault, const std::string& message)
      : std::runtime_error(message), fault_(fault) {}
  NetworkFault fault() const { return fault_; }

 private:
  NetworkFault fault_;
};

// Directed pipe network. Incidence sign is -1 at an edge's tail (`from`)
// and +1 at its head (`to`), so the junction balance at an interior vertex v
// reads sum over incident edges of sign * m^e(v) = 0.
class Network {
 public:
  Network(std::vector<Vertex> vertices, std::vector<Edge> edges,
          bool allow_dead_ends = false);

  // Six-vertex, seven-pipe diamond benchmark: unit pipe lengths, inlet
  // pressure ramping 100 -> 90 over [0, 1], outlet pressure fixed at 70.
  static Network diamond();

  // Single unit pipe v0 -> v1 with boundary pressures h0, h1.
  static Network single_pipe(double h0, double h1, double ramp_amplitude = 0.0,
                             double ramp_time = 0.0);

  static Network from_json(const nlohmann::json& j, bool allow_dead_ends = false);
  static Network load(const std::string& path, bool allow_dead_ends = false);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  const Vertex& vertex(int v) const { return vertices_[v]; }
  const Edge& edge(int e) const { return edges_[e]; }
  int vertex_index(std::string_view id) const;

  int edge_tail(int e) const { return tail_[e]; }
  int edge_head(int e) const { return head_[e]; }
  // -1 at tail, +1 at head, 0 if not an endpoint.
  int incidence(int e, int v) const;
  int degree(int v) const { return static_cast<int>(incident_[v].size()); }

  struct Incident {
    int edge;
    int sign;  // -1 tail endpoint, +1 head endpoint
  };
  const std::vector<Incident>& incident(int v) const { return incident_[v]; }

  const std::vector<int>& interior_vertices() const { return interior_; }
  const std::vector<int>& boundary_vertices() const { return boundary_; }

  // Boundary pressure values at time t, ordered like boundary_vertices().
  Eigen::VectorXd boundary_values(double t) const;
  // Values after all ramps have finished.
  Eigen::VectorXd boundary_values_final() const;
  double max_ramp_time() const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<int> tail_, head_;
  std::vector<std::vector<Incident>> incident_;
  std::vector<int> interior_, boundary_;
};

}  // namespace pipewave
