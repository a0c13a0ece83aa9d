#include "pipewave/config.hpp"

#include <fstream>

namespace pipewave {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) known = true;
    if (!known) fail(where + ": unknown key '" + it.key() + "'");
  }
}

Method method_from_string(const std::string& name) {
  if (name == "fem") return Method::fem;
  if (name == "spectral") return Method::spectral;
  if (name == "spectral_unpaired") return Method::spectral_unpaired;
  fail("discretization.method: unknown method '" + name + "'");
}

}  // namespace

DiscretizationConfig discretization_from_json(const json& j) {
  if (!j.is_object()) fail("discretization: expected an object");
  check_keys(j, "discretization", {"method", "h", "order"});
  DiscretizationConfig disc;
  disc.method = method_from_string(j.value("method", "fem"));
  disc.h = j.value("h", 0.1);
  disc.order = j.value("order", 3);
  if (!(disc.h > 0.0)) fail("discretization.h must be positive");
  if (disc.order < 1) fail("discretization.order must be >= 1");
  return disc;
}

namespace {

TimeConfig time_from_json(const json& j) {
  check_keys(j, "time", {"dt", "t_end", "sample_interval"});
  TimeConfig time;
  time.dt = j.value("dt", time.dt);
  time.t_end = j.value("t_end", time.t_end);
  time.sample_interval = j.value("sample_interval", time.sample_interval);
  if (!(time.dt > 0.0)) fail("time.dt must be positive");
  if (!(time.t_end > 0.0)) fail("time.t_end must be positive");
  if (!(time.sample_interval > 0.0)) fail("time.sample_interval must be positive");
  return time;
}

NewtonConfig newton_from_json(const json& j) {
  check_keys(j, "newton", {"tol", "max_iter"});
  NewtonConfig newton;
  newton.tol = j.value("tol", newton.tol);
  newton.max_iter = j.value("max_iter", newton.max_iter);
  if (!(newton.tol > 0.0)) fail("newton.tol must be positive");
  if (newton.max_iter < 1) fail("newton.max_iter must be >= 1");
  return newton;
}

MorConfig mor_from_json(const json& j) {
  check_keys(j, "mor",
             {"n_sv", "training", "snapshot_interval", "quadrature_points",
              "basis_path"});
  MorConfig mor;
  mor.n_sv = j.value("n_sv", mor.n_sv);
  if (j.contains("training")) mor.training = discretization_from_json(j["training"]);
  mor.snapshot_interval = j.value("snapshot_interval", mor.snapshot_interval);
  mor.quadrature_points = j.value("quadrature_points", mor.quadrature_points);
  mor.basis_path = j.value("basis_path", mor.basis_path);
  if (mor.n_sv < 1) fail("mor.n_sv must be >= 1");
  if (!(mor.snapshot_interval > 0.0)) fail("mor.snapshot_interval must be positive");
  if (mor.quadrature_points < 0) fail("mor.quadrature_points must be >= 0");
  return mor;
}

TableRowSpec row_from_json(const json& j, const DiscretizationConfig& base) {
  if (!j.is_object()) fail("table.rows: expected objects");
  check_keys(j, "table.rows", {"method", "h", "order", "n_sv"});
  TableRowSpec row;
  row.method = j.value("method", "fem");
  row.disc = base;
  if (row.method == "fem") {
    row.disc.method = Method::fem;
    row.disc.h = j.value("h", row.disc.h);
    row.param = row.disc.h;
    if (!(row.disc.h > 0.0)) fail("table.rows: h must be positive");
  } else if (row.method == "spectral") {
    row.disc.method = Method::spectral;
    row.disc.order = j.value("order", row.disc.order);
    row.param = row.disc.order;
    if (row.disc.order < 1) fail("table.rows: order must be >= 1");
  } else if (row.method == "mor") {
    row.n_sv = j.value("n_sv", 0);
    row.param = row.n_sv;
    if (row.n_sv < 1) fail("table.rows: mor rows need n_sv >= 1");
  } else {
    fail("table.rows: unknown method '" + row.method + "'");
  }
  return row;
}

json apply_overrides(json j, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      fail("--set expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // plain string
    }
    json* node = &j;
    size_t pos = 0;
    for (;;) {
      const size_t dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot - pos);
      if (part.empty()) fail("--set: empty path component in '" + key + "'");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      if (!node->is_object() && !node->is_null())
        fail("--set: '" + key.substr(0, dot) + "' is not an object");
      pos = dot + 1;
    }
  }
  return j;
}

}  // namespace

Network RunConfig::build_network() const {
  if (!network_path.empty()) return Network::load(network_path);
  if (network_builtin == "diamond" || network_builtin == "paper")
    return Network::diamond();
  fail("network.builtin: unknown builtin '" + network_builtin + "'");
}

SolverOptions RunConfig::solver_options() const {
  SolverOptions options;
  options.newton_tol = newton.tol;
  options.newton_max_iter = newton.max_iter;
  options.dt = time.dt;
  options.t_end = time.t_end;
  return options;
}

DecayTableSpec RunConfig::table_spec() const {
  DecayTableSpec spec;
  spec.network = build_network();
  spec.damping = damping;
  spec.dt = time.dt;
  spec.t_end = time.t_end;
  spec.sample_interval = time.sample_interval;
  spec.fit_window = fit_window;
  spec.newton_tol = newton.tol;
  if (mor) {
    spec.training = mor->training;
    spec.snapshot_interval = mor->snapshot_interval;
  }
  if (!table_rows.empty()) {
    spec.rows = table_rows;
  } else {
    for (double h : {0.2, 0.05}) {
      TableRowSpec row;
      row.method = "fem";
      row.param = h;
      row.disc = {Method::fem, h, 3};
      spec.rows.push_back(row);
    }
    for (int order : {3, 10}) {
      TableRowSpec row;
      row.method = "spectral";
      row.param = order;
      row.disc = {Method::spectral, 0.1, order};
      spec.rows.push_back(row);
    }
  }
  return spec;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) fail("config: expected a JSON object");
  check_keys(j, "config",
             {"network", "damping", "discretization", "time", "newton", "mor",
              "table", "output"});
  RunConfig config;
  if (j.contains("network")) {
    const json& n = j["network"];
    if (n.is_string()) {
      config.network_builtin = n.get<std::string>();
    } else if (n.is_object()) {
      check_keys(n, "network", {"builtin", "path"});
      const bool has_builtin = n.contains("builtin");
      const bool has_path = n.contains("path");
      if (has_builtin == has_path)
        fail("network: exactly one of 'builtin' or 'path' is required");
      if (has_builtin) {
        config.network_builtin = n["builtin"].get<std::string>();
      } else {
        config.network_path = n["path"].get<std::string>();
        config.network_builtin.clear();
      }
    } else {
      fail("network: expected a string or an object");
    }
  }
  if (j.contains("damping")) {
    try {
      config.damping = DampingModel::from_json(j["damping"]);
    } catch (const std::exception& e) {
      fail(std::string("damping: ") + e.what());
    }
  }
  if (j.contains("discretization"))
    config.discretization = discretization_from_json(j["discretization"]);
  if (j.contains("time")) config.time = time_from_json(j["time"]);
  if (j.contains("newton")) config.newton = newton_from_json(j["newton"]);
  if (j.contains("mor")) config.mor = mor_from_json(j["mor"]);
  if (j.contains("table")) {
    const json& t = j["table"];
    check_keys(t, "table", {"rows", "fit_window"});
    if (t.contains("rows"))
      for (const json& r : t["rows"])
        config.table_rows.push_back(row_from_json(r, config.discretization));
    if (t.contains("fit_window")) {
      const json& w = t["fit_window"];
      if (!w.is_array() || w.size() != 2)
        fail("table.fit_window: expected [t_lo, t_hi]");
      config.fit_window = {w[0].get<double>(), w[1].get<double>()};
      if (!(config.fit_window.first < config.fit_window.second))
        fail("table.fit_window: t_lo must be below t_hi");
    }
  }
  if (j.contains("output")) config.output = j["output"].get<std::string>();

  // Builtin name is validated eagerly so errors surface as config errors.
  if (config.network_path.empty()) (void)config.build_network();
  return config;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail("config file '" + path + "': " + e.what());
  }
  return from_json(apply_overrides(std::move(j), overrides));
}

}  // namespace pipewave
