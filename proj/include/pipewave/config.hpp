#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipewave/diagnostics.hpp"

namespace pipewave {

// Invalid or missing configuration; mapped to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeConfig {
  double dt = 0.01;
  double t_end = 50.0;
  double sample_interval = 1.0;
};

struct NewtonConfig {
  double tol = 1e-10;
  int max_iter = 50;
};

struct MorConfig {
  int n_sv = 10;
  DiscretizationConfig training{Method::fem, 0.005, 3};
  double snapshot_interval = 0.1;
  int quadrature_points = 0;  // > 0: install a reduced damping quadrature
  std::string basis_path = "reduced_basis.txt";
};

// One experiment configuration, read from a JSON file with optional dotted
// `--set key=value` overrides. The network is either the builtin benchmark
// ("diamond", alias "paper") or an external JSON file.
struct RunConfig {
  std::string network_builtin = "diamond";
  std::string network_path;  // nonempty: load from file instead

  DampingModel damping = DampingModel::power_abs(1.0, 1.0);
  DiscretizationConfig discretization{Method::fem, 0.2, 3};
  TimeConfig time;
  NewtonConfig newton;
  std::optional<MorConfig> mor;

  std::vector<TableRowSpec> table_rows;  // empty: default four-row table
  std::pair<double, double> fit_window{10.0, 50.0};
  std::string output;  // output file path; empty = subcommand default

  Network build_network() const;
  SolverOptions solver_options() const;
  DecayTableSpec table_spec() const;

  static RunConfig from_json(const nlohmann::json& j);
  // Load `path` and apply `key=value` overrides (dotted keys; values parsed
  // as JSON when possible, as strings otherwise).
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides = {});
};

DiscretizationConfig discretization_from_json(const nlohmann::json& j);

}  // namespace pipewave
