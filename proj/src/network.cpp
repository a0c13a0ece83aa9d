#include "pipewave/network.hpp"

#include <fstream>
#include <queue>
#include <unordered_map>

namespace pipewave {

Network::Network(std::vector<Vertex> vertices, std::vector<Edge> edges,
                 bool allow_dead_ends)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
  std::unordered_map<std::string, int> index;
  for (int v = 0; v < n_vertices(); ++v) {
    if (!index.emplace(vertices_[v].id, v).second)
      throw NetworkError(NetworkFault::duplicate_id,
                         "duplicate vertex id '" + vertices_[v].id + "'");
  }
  std::unordered_map<std::string, int> edge_ids;
  for (int e = 0; e < n_edges(); ++e) {
    if (!edge_ids.emplace(edges_[e].id, e).second)
      throw NetworkError(NetworkFault::duplicate_id,
                         "duplicate edge id '" + edges_[e].id + "'");
  }

  tail_.resize(n_edges());
  head_.resize(n_edges());
  incident_.resize(n_vertices());
  for (int e = 0; e < n_edges(); ++e) {
    const Edge& edge = edges_[e];
    auto a = index.find(edge.from);
    auto b = index.find(edge.to);
    if (a == index.end() || b == index.end())
      throw NetworkError(NetworkFault::unknown_endpoint,
                         "edge '" + edge.id + "' references an unknown vertex");
    if (a->second == b->second)
      throw NetworkError(NetworkFault::self_loop,
                         "edge '" + edge.id + "' is a self-loop");
    if (!(edge.length > 0.0))
      throw NetworkError(NetworkFault::nonpositive_length,
                         "edge '" + edge.id + "' has nonpositive length");
    tail_[e] = a->second;
    head_[e] = b->second;
    incident_[a->second].push_back({e, -1});
    incident_[b->second].push_back({e, +1});
  }

  for (int v = 0; v < n_vertices(); ++v) {
    if (vertices_[v].is_boundary()) {
      if (degree(v) != 1)
        throw NetworkError(NetworkFault::boundary_degree,
                           "boundary vertex '" + vertices_[v].id +
                               "' must have degree 1, has degree " +
                               std::to_string(degree(v)));
      boundary_.push_back(v);
    } else {
      if (degree(v) == 1 && !allow_dead_ends)
        throw NetworkError(NetworkFault::interior_dead_end,
                           "interior vertex '" + vertices_[v].id +
                               "' is a dead end (degree 1); the junction "
                               "balance forces m = 0 there");
      interior_.push_back(v);
    }
  }

  // Connectivity (undirected reachability from vertex 0).
  if (n_vertices() > 0) {
    std::vector<char> seen(n_vertices(), 0);
    std::queue<int> queue;
    queue.push(0);
    seen[0] = 1;
    int count = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      for (const Incident& inc : incident_[v]) {
        const int w = (inc.sign < 0) ? head_[inc.edge] : tail_[inc.edge];
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          queue.push(w);
        }
      }
    }
    if (count != n_vertices())
      throw NetworkError(NetworkFault::disconnected, "network graph is disconnected");
  }
}

Network Network::diamond() {
  std::vector<Vertex> vertices = {
      {"v1", BoundaryRamp{90.0, 10.0, 1.0}},
      {"v2", std::nullopt},
      {"v3", std::nullopt},
      {"v4", std::nullopt},
      {"v5", std::nullopt},
      {"v6", BoundaryRamp{70.0, 0.0, 0.0}},
  };
  std::vector<Edge> edges = {
      {"e1", "v1", "v2", 1.0}, {"e2", "v2", "v3", 1.0}, {"e3", "v2", "v4", 1.0},
      {"e4", "v3", "v4", 1.0}, {"e5", "v3", "v5", 1.0}, {"e6", "v4", "v5", 1.0},
      {"e7", "v5", "v6", 1.0},
  };
  return Network(std::move(vertices), std::move(edges));
}

Network Network::single_pipe(double h0, double h1, double ramp_amplitude,
                             double ramp_time) {
  std::vector<Vertex> vertices = {
      {"v0", BoundaryRamp{h0, ramp_amplitude, ramp_time}},
      {"v1", BoundaryRamp{h1, 0.0, 0.0}},
  };
  std::vector<Edge> edges = {{"e0", "v0", "v1", 1.0}};
  return Network(std::move(vertices), std::move(edges));
}

Network Network::from_json(const nlohmann::json& j, bool allow_dead_ends) {
  std::vector<Vertex> vertices;
  for (const auto& jv : j.at("vertices")) {
    Vertex v;
    v.id = jv.at("id").get<std::string>();
    if (jv.contains("boundary")) {
      const auto& jb = jv.at("boundary");
      BoundaryRamp ramp;
      ramp.base = jb.at("base").get<double>();
      ramp.amplitude = jb.value("amplitude", 0.0);
      ramp.ramp_time = jb.value("ramp_time", 0.0);
      if (ramp.ramp_time < 0.0)
        throw NetworkError(NetworkFault::nonpositive_length,
                           "vertex '" + v.id + "': ramp_time must be nonnegative");
      v.ramp = ramp;
    }
    vertices.push_back(std::move(v));
  }
  std::vector<Edge> edges;
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.id = je.at("id").get<std::string>();
    e.from = je.at("from").get<std::string>();
    e.to = je.at("to").get<std::string>();
    e.length = je.value("length", 1.0);
    edges.push_back(std::move(e));
  }
  return Network(std::move(vertices), std::move(edges), allow_dead_ends);
}

Network Network::load(const std::string& path, bool allow_dead_ends) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file '" + path + "'");
  nlohmann::json j;
  in >> j;
  return from_json(j, allow_dead_ends);
}

int Network::vertex_index(std::string_view id) const {
  for (int v = 0; v < n_vertices(); ++v)
    if (vertices_[v].id == id) return v;
  throw std::out_of_range("unknown vertex id '" + std::string(id) + "'");
}

int Network::incidence(int e, int v) const {
  if (tail_[e] == v) return -1;
  if (head_[e] == v) return +1;
  return 0;
}

Eigen::VectorXd Network::boundary_values(double t) const {
  Eigen::VectorXd values(static_cast<Eigen::Index>(boundary_.size()));
  for (size_t i = 0; i < boundary_.size(); ++i)
    values(static_cast<Eigen::Index>(i)) = vertices_[boundary_[i]].ramp->value(t);
  return values;
}

Eigen::VectorXd Network::boundary_values_final() const {
  return boundary_values(max_ramp_time());
}

double Network::max_ramp_time() const {
  double t = 0.0;
  for (int v : boundary_) t = std::max(t, vertices_[v].ramp->ramp_time);
  return t;
}

}  // namespace pipewave
