#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "pipewave/config.hpp"

using namespace pipewave;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path(name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("defaults and full parse") {
  const nlohmann::json j = {
      {"network", {{"builtin", "paper"}}},
      {"damping", {{"family", "power_abs"}, {"alpha", 1.0}, {"sigma", 1.0}}},
      {"discretization", {{"method", "spectral"}, {"order", 5}}},
      {"time", {{"dt", 0.02}, {"t_end", 10.0}, {"sample_interval", 0.5}}},
      {"newton", {{"tol", 1e-12}, {"max_iter", 30}}},
      {"mor",
       {{"n_sv", 4},
        {"training", {{"method", "fem"}, {"h", 0.05}}},
        {"snapshot_interval", 0.25},
        {"basis_path", "basis.txt"}}},
      {"output", "out.csv"}};
  const RunConfig config = RunConfig::from_json(j);
  CHECK(config.network_builtin == "paper");
  CHECK(config.damping.family == DampingFamily::power_abs);
  CHECK(config.discretization.method == Method::spectral);
  CHECK(config.discretization.order == 5);
  CHECK(config.time.dt == doctest::Approx(0.02));
  CHECK(config.newton.tol == doctest::Approx(1e-12));
  REQUIRE(config.mor.has_value());
  CHECK(config.mor->n_sv == 4);
  CHECK(config.mor->training.h == doctest::Approx(0.05));
  CHECK(config.output == "out.csv");
  CHECK(config.build_network().n_edges() == 7);

  // Empty config: everything defaulted.
  const RunConfig defaults = RunConfig::from_json(nlohmann::json::object());
  CHECK(defaults.network_builtin == "diamond");
  CHECK(defaults.time.dt == doctest::Approx(0.01));
  CHECK_FALSE(defaults.mor.has_value());
}

TEST_CASE("builtin aliases and network files") {
  CHECK(RunConfig::from_json({{"network", "diamond"}}).build_network().n_edges() == 7);
  CHECK(RunConfig::from_json({{"network", "paper"}}).build_network().n_edges() == 7);
  CHECK_THROWS_AS(RunConfig::from_json({{"network", "bogus"}}), ConfigError);

  const TempFile net("cfg_test_net.json", R"({
    "vertices": [
      {"id": "a", "boundary": {"base": 1.0}},
      {"id": "b", "boundary": {"base": 0.0}}],
    "edges": [{"id": "e", "from": "a", "to": "b", "length": 2.0}]
  })");
  const RunConfig config =
      RunConfig::from_json({{"network", {{"path", net.path}}}});
  CHECK(config.build_network().n_edges() == 1);
}

TEST_CASE("validation failures raise ConfigError") {
  CHECK_THROWS_AS(RunConfig::from_json({{"time", {{"dt", 0.0}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"time", {{"t_end", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"unknown_key", 1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"discretization", {{"method", "huh"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"discretization", {{"h", -0.1}}}}),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"mor", {{"n_sv", 0}}}}), ConfigError);
  CHECK_THROWS_AS(
      RunConfig::from_json({{"network", {{"builtin", "paper"}, {"path", "x"}}}}),
      ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"newton", {{"tol", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("definitely_missing.json"), ConfigError);
}

TEST_CASE("dotted overrides") {
  const TempFile cfg("cfg_test_base.json", R"({
    "time": {"dt": 0.01, "t_end": 50.0},
    "damping": {"family": "power_abs", "alpha": 1.0, "sigma": 1.0}
  })");
  const RunConfig config = RunConfig::load(
      cfg.path, {"time.dt=0.005", "discretization.method=spectral",
                 "discretization.order=7", "output=result.csv"});
  CHECK(config.time.dt == doctest::Approx(0.005));
  CHECK(config.discretization.method == Method::spectral);
  CHECK(config.discretization.order == 7);
  CHECK(config.output == "result.csv");

  CHECK_THROWS_AS(RunConfig::load(cfg.path, {"nonsense"}), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(cfg.path, {"time.dt=0"}), ConfigError);
}

TEST_CASE("table rows") {
  const nlohmann::json j = {
      {"table",
       {{"rows",
         {{{"method", "fem"}, {"h", 0.2}},
          {{"method", "spectral"}, {"order", 3}},
          {{"method", "mor"}, {"n_sv", 2}}}},
        {"fit_window", {10.0, 50.0}}}}};
  const RunConfig config = RunConfig::from_json(j);
  REQUIRE(config.table_rows.size() == 3);
  CHECK(config.table_rows[0].disc.h == doctest::Approx(0.2));
  CHECK(config.table_rows[1].disc.order == 3);
  CHECK(config.table_rows[2].n_sv == 2);

  const DecayTableSpec spec = config.table_spec();
  CHECK(spec.rows.size() == 3);
  CHECK(spec.fit_window.first == doctest::Approx(10.0));

  // Default table: the four standard full-order rows.
  const DecayTableSpec default_spec =
      RunConfig::from_json(nlohmann::json::object()).table_spec();
  CHECK(default_spec.rows.size() == 4);

  CHECK_THROWS_AS(
      RunConfig::from_json({{"table", {{"rows", {{{"method", "mor"}}}}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      RunConfig::from_json({{"table", {{"fit_window", {50.0, 10.0}}}}}),
      ConfigError);
}
