#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pipewave/diagnostics.hpp"

using namespace pipewave;

TEST_CASE("energy of simple deviations") {
  const Network net = Network::single_pipe(1.0, 0.0);
  const GlobalSpace space = GlobalSpace::build(net, {Method::fem, 0.25, 1});
  const Operators ops = assemble(space);

  const Eigen::VectorXd zp = Eigen::VectorXd::Zero(space.n_pressure());
  const Eigen::VectorXd zm = Eigen::VectorXd::Zero(space.n_flux());
  CHECK(energy(ops, zp, zm) == 0.0);

  // p = 1, m = 0 on a unit pipe: E = 1/2 ||1||^2 = 1/2.
  const Eigen::VectorXd ones_p = Eigen::VectorXd::Ones(space.n_pressure());
  CHECK(energy(ops, ones_p, zm) == doctest::Approx(0.5));

  // Quadratic scaling.
  const Eigen::VectorXd dp = Eigen::VectorXd::Random(space.n_pressure());
  const Eigen::VectorXd dm = Eigen::VectorXd::Random(space.n_flux());
  CHECK(energy(ops, 2.0 * dp, 2.0 * dm) ==
        doctest::Approx(4.0 * energy(ops, dp, dm)));

  // The lumped flux norm differs from the exact one for nonconstant fields.
  Eigen::VectorXd hat = zm;
  hat(1) = 1.0;
  CHECK(energy(ops, zp, hat, /*lumped=*/true) > energy(ops, zp, hat));
}

TEST_CASE("gamma fit on synthetic data") {
  std::vector<double> times, energies, scaled;
  for (int k = 0; k <= 50; ++k) {
    times.push_back(k);
    energies.push_back(5.0 * std::exp(-0.3 * k));
    scaled.push_back(37.0 * 5.0 * std::exp(-0.3 * k));
  }
  CHECK(fit_gamma(times, energies, {0.0, 50.0}) ==
        doctest::Approx(0.3).epsilon(1e-12));
  // Invariant under E -> c E.
  CHECK(fit_gamma(times, scaled, {0.0, 50.0}) ==
        doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("gamma fit on the published reference samples") {
  const std::vector<double> times = {10, 20, 30, 40, 50};
  const std::vector<double> energies = {23.693, 6.943, 2.051, 0.607, 0.180};
  CHECK(fit_gamma(times, energies, {10.0, 50.0}) ==
        doctest::Approx(0.122).epsilon(0.01));
  // Two-sample window: the direct log ratio.
  CHECK(fit_gamma(times, energies, {40.0, 50.0}) ==
        doctest::Approx(std::log(0.607 / 0.180) / 10.0).epsilon(1e-12));
}

TEST_CASE("gamma fit input validation") {
  CHECK_THROWS_AS(fit_gamma({1.0}, {2.0}, {0.0, 10.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gamma({1.0, 2.0}, {1.0, -2.0}, {0.0, 10.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_gamma({100.0, 200.0}, {1.0, 2.0}, {0.0, 10.0}),
                  std::invalid_argument);
}

TEST_CASE("derivative energy vanishes at a matched steady state") {
  const Network net = Network::diamond();
  const GlobalSpace space = GlobalSpace::build(net, {Method::fem, 0.25, 1});
  const Operators ops = assemble(space);
  const DampingModel damping = DampingModel::power_abs(1.0, 1.0);
  const Eigen::VectorXd h = net.boundary_values_final();
  const State steady = solve_stationary(
      space, ops, damping, Eigen::VectorXd::Zero(space.n_pressure()),
      Eigen::VectorXd::Zero(space.n_flux()), h);
  CHECK(derivative_energy(space, ops, damping, steady, h) < 1e-18);
}

TEST_CASE("derivative energy of the zero state under boundary forcing") {
  const Network net = Network::single_pipe(1.0, 0.0);
  const GlobalSpace space = GlobalSpace::build(net, {Method::fem, 0.25, 1});
  const Operators ops = assemble(space);
  const DampingModel damping = DampingModel::power_abs(1.0, 1.0);
  State zero;
  zero.p = Eigen::VectorXd::Zero(space.n_pressure());
  zero.m = Eigen::VectorXd::Zero(space.n_flux());
  Eigen::VectorXd h(2);
  h << 1.0, 0.0;

  // dm/dt = -Mm^{-1} B h, dp/dt = 0 (m = 0, d(0) = 0).
  const Eigen::VectorXd bh = ops.B * h;
  const Eigen::VectorXd dm =
      -bh.cwiseQuotient(Eigen::VectorXd(ops.Mm.diagonal()));
  const double expected = 0.5 * dm.dot(ops.Mm_exact * dm);
  CHECK(derivative_energy(space, ops, damping, zero, h) ==
        doctest::Approx(expected).epsilon(1e-12));

  // Cross-check against a one-step finite difference of the integrator on a
  // ramp-free single pipe with the same boundary values.
  SolverOptions options;
  options.newton_tol = 1e-13;
  const double dt = 1e-5;
  const State step = midpoint_step(space, ops, damping, zero, dt, options);
  const Eigen::VectorXd fd_dm = (step.m - zero.m) / dt;
  CHECK((fd_dm - dm).cwiseAbs().maxCoeff() < 1e-4 * (1.0 + dm.norm()));
}

TEST_CASE("a-priori bound evaluation") {
  SUBCASE("zero data gives zero bounds") {
    const DampingReport r = check_assumption1(DampingModel::linear(1.0), 1.0);
    const Lemma1Bounds b = lemma1_bounds(r, 0.0, 0.0, 0.0);
    CHECK(b.applicable);
    CHECK(b.M == doctest::Approx(0.0));
    CHECK(b.p_bound == doctest::Approx(0.0));
  }
  SUBCASE("linear damping unit data") {
    const DampingReport r = check_assumption1(DampingModel::linear(1.0), 1.0);
    const Lemma1Bounds b = lemma1_bounds(r, 0.0, 1.0, 0.0);
    CHECK(b.applicable);
    CHECK(b.M == doctest::Approx(1.0));
    CHECK(b.p_bound == doctest::Approx(2.0));
  }
  SUBCASE("quadratic friction is flagged not applicable") {
    const DampingReport r =
        check_assumption1(DampingModel::power_abs(1.0, 1.0), 1.0);
    const Lemma1Bounds b = lemma1_bounds(r, 1.0, 1.0, 1.0);
    CHECK_FALSE(b.applicable);
  }
}

TEST_CASE("decay table row for the coarse finite element run") {
  DecayTableSpec spec;
  TableRowSpec row;
  row.method = "fem";
  row.param = 0.2;
  row.disc = {Method::fem, 0.2, 1};
  spec.rows.push_back(row);

  const DecayTable table = run_decay_table(spec);
  REQUIRE(table.rows.size() == 1);
  const DecayRow& r = table.rows[0];
  REQUIRE(r.energies.size() == 6);
  // Frozen reference values from two independent implementations of the
  // same semidiscretization (numpy prototype and this library).
  const double expected[] = {99.046, 24.929, 7.715, 2.404, 0.751, 0.235};
  for (int k = 0; k < 6; ++k)
    CHECK(r.energies[k] == doctest::Approx(expected[k]).epsilon(2e-3));
  CHECK(r.gamma == doctest::Approx(0.1166).epsilon(5e-3));

  // Derivative energies decay with a comparable rate.
  const double gamma_deriv =
      fit_gamma(r.report.sample_times, r.report.energies_derivative,
                spec.fit_window);
  CHECK(std::abs(gamma_deriv - r.gamma) < 0.01);

  std::ostringstream csv;
  write_decay_csv(table, csv);
  const std::string text = csv.str();
  CHECK(text.rfind("method,param,E0,E10,E20,E30,E40,E50,gamma\n", 0) == 0);
  CHECK(text.find("fem,0.2,99.0") != std::string::npos);
}

TEST_CASE("decay table reduced row tracks the full-order row") {
  DecayTableSpec spec;
  spec.training = {Method::fem, 0.1, 1};  // light training mesh for the test
  spec.snapshot_interval = 0.1;
  TableRowSpec full;
  full.method = "fem";
  full.param = 0.1;
  full.disc = {Method::fem, 0.1, 1};
  TableRowSpec reduced;
  reduced.method = "mor";
  reduced.param = 10;
  reduced.n_sv = 10;
  spec.rows = {full, reduced};
  spec.max_threads = 2;

  const DecayTable table = run_decay_table(spec);
  REQUIRE(table.rows.size() == 2);
  for (int k = 0; k < 6; ++k)
    CHECK(table.rows[1].energies[k] ==
          doctest::Approx(table.rows[0].energies[k]).epsilon(5e-3));
  CHECK(table.rows[1].gamma == doctest::Approx(table.rows[0].gamma).epsilon(2e-3));
}

TEST_CASE("significant digit formatting") {
  CHECK(format_significant(99.19623, 5) == "99.196");
  CHECK(format_significant(0.122049, 3) == "0.122");
  CHECK(format_significant(0.0, 5) == "0");
  CHECK(format_significant(-1234567.0, 5) == "-1.2346e+06");
}
