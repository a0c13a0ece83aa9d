#include <doctest.h>

#include "pipewave/operators.hpp"

using namespace pipewave;

namespace {

GlobalSpace pipe_fem(double h) {
  return GlobalSpace::build(Network::single_pipe(1.0, 0.0), {Method::fem, h, 1});
}

}  // namespace

TEST_CASE("single-pipe finite element matrices, h = 0.5") {
  const GlobalSpace space = pipe_fem(0.5);
  const Operators ops = assemble(space);

  const Eigen::MatrixXd G = Eigen::MatrixXd(ops.G);
  REQUIRE(G.rows() == 2);
  REQUIRE(G.cols() == 3);
  CHECK(G(0, 0) == doctest::Approx(-1.0));
  CHECK(G(0, 1) == doctest::Approx(1.0));
  CHECK(G(0, 2) == doctest::Approx(0.0));
  CHECK(G(1, 1) == doctest::Approx(-1.0));
  CHECK(G(1, 2) == doctest::Approx(1.0));

  const Eigen::MatrixXd Mm = Eigen::MatrixXd(ops.Mm);
  CHECK(Mm(0, 0) == doctest::Approx(0.25));
  CHECK(Mm(1, 1) == doctest::Approx(0.5));
  CHECK(Mm(2, 2) == doctest::Approx(0.25));
  CHECK(Mm(0, 1) == doctest::Approx(0.0));

  const Eigen::MatrixXd Mp = Eigen::MatrixXd(ops.Mp);
  CHECK(Mp(0, 0) == doctest::Approx(0.5));
  CHECK(Mp(1, 1) == doctest::Approx(0.5));

  // Consistent mass: tridiagonal hc/3, hc/6.
  const Eigen::MatrixXd Me = Eigen::MatrixXd(ops.Mm_exact);
  CHECK(Me(0, 0) == doctest::Approx(0.5 / 3.0));
  CHECK(Me(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(Me(0, 1) == doctest::Approx(0.5 / 6.0));
  CHECK(Me(0, 2) == doctest::Approx(0.0));

  // Boundary map: one signed entry per boundary vertex.
  const Eigen::MatrixXd B = Eigen::MatrixXd(ops.B);
  REQUIRE(B.cols() == 2);
  CHECK(B(0, 0) == doctest::Approx(-1.0));
  CHECK(B(2, 1) == doctest::Approx(1.0));
  CHECK(B.cwiseAbs().sum() == doctest::Approx(2.0));
}

TEST_CASE("hand-checked stationary identity on the single pipe") {
  // With linear damping d(m) = m, m = 1 and p = (1.75, 1.25) solve the
  // stationary system for boundary values (2, 1).
  const GlobalSpace space = pipe_fem(0.5);
  const Operators ops = assemble(space);
  const Eigen::VectorXd m = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd p(2);
  p << 1.75, 1.25;
  Eigen::VectorXd h(2);
  h << 2.0, 1.0;
  const Eigen::VectorXd residual =
      -ops.G.transpose() * p +
      apply_damping(space, ops, DampingModel::linear(1.0), m) + ops.B * h;
  CHECK(residual.cwiseAbs().maxCoeff() < 1e-14);
  CHECK((ops.G * m).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("spectral pressure mass is diagonal with L/(2k+1)") {
  const GlobalSpace space =
      GlobalSpace::build(Network::single_pipe(1.0, 0.0), {Method::spectral, 0.1, 4});
  const Operators ops = assemble(space);
  const Eigen::MatrixXd Mp = Eigen::MatrixXd(ops.Mp);
  for (int k = 0; k < 4; ++k) {
    CHECK(Mp(k, k) == doctest::Approx(1.0 / (2 * k + 1)));
    for (int l = 0; l < 4; ++l)
      if (l != k) CHECK(Mp(k, l) == doctest::Approx(0.0));
  }
}

TEST_CASE("compatibility holds for both backends on both networks") {
  for (const Network& net : {Network::single_pipe(1.0, 0.0), Network::diamond()}) {
    for (double h : {0.5, 0.2, 0.05}) {
      const GlobalSpace space = GlobalSpace::build(net, {Method::fem, h, 1});
      const CompatibilityReport report = check_compatibility(space);
      CHECK(report.pass());
      CHECK(report.image_residual < 1e-6);
      CHECK(report.kernel_residual < 1e-10);
    }
    for (int order : {1, 3, 10}) {
      const GlobalSpace space =
          GlobalSpace::build(net, {Method::spectral, 0.1, order});
      CHECK(check_compatibility(space).pass());
    }
  }
}

TEST_CASE("deliberately broken pair fails the compatibility check") {
  const GlobalSpace space = GlobalSpace::build(Network::single_pipe(1.0, 0.0),
                                               {Method::spectral_unpaired, 0.1, 3});
  CHECK_FALSE(check_compatibility(space).pass());
}

TEST_CASE("norm equivalence certificate") {
  // Trapezoid-lumped P1: the L2-to-quadrature norm ratio lies in [1/3, 1].
  const GlobalSpace fem = GlobalSpace::build(Network::diamond(), {Method::fem, 0.2, 1});
  const Operators fem_ops = assemble(fem);
  const NormEquivalenceReport fem_report = certify_norm_equivalence(fem, fem_ops);
  CHECK(fem_report.satisfied);
  CHECK(fem_report.lambda_min == doctest::Approx(1.0 / 3.0).epsilon(0.05));
  CHECK(fem_report.lambda_max == doctest::Approx(1.0).epsilon(1e-8));

  for (int order : {2, 5, 10}) {
    const GlobalSpace spec =
        GlobalSpace::build(Network::diamond(), {Method::spectral, 0.1, order});
    const NormEquivalenceReport report =
        certify_norm_equivalence(spec, assemble(spec));
    CHECK(report.satisfied);
    CHECK(report.lambda_min >= 0.25 - 1e-12);
    CHECK(report.lambda_max <= 2.25 + 1e-12);
  }
}

TEST_CASE("damping Jacobian matches finite differences") {
  const GlobalSpace space = GlobalSpace::build(Network::diamond(), {Method::fem, 0.5, 1});
  const Operators ops = assemble(space);
  const DampingModel damping = DampingModel::affine_power(0.4, 1.3, 2.0);
  const Eigen::VectorXd m = Eigen::VectorXd::Random(space.n_flux()) * 2.0;
  const Eigen::MatrixXd J =
      Eigen::MatrixXd(damping_jacobian(space, ops, damping, m));
  const double eps = 1e-6;
  for (int j = 0; j < space.n_flux(); ++j) {
    Eigen::VectorXd mp = m, mm = m;
    mp(j) += eps;
    mm(j) -= eps;
    const Eigen::VectorXd fd = (apply_damping(space, ops, damping, mp) -
                                apply_damping(space, ops, damping, mm)) /
                               (2.0 * eps);
    CHECK((J.col(j) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("load functionals against matrix identities") {
  for (auto config : {DiscretizationConfig{Method::fem, 0.25, 1},
                      DiscretizationConfig{Method::spectral, 0.1, 5}}) {
    const GlobalSpace space = GlobalSpace::build(Network::diamond(), config);
    const Operators ops = assemble(space);
    const Eigen::VectorXd mc = Eigen::VectorXd::Random(space.n_flux());
    const Eigen::VectorXd pc = Eigen::VectorXd::Random(space.n_pressure());

    // (dx m0, q) for m0 in the flux space equals G m.
    const EdgeFunction m0 = [&](int e, double x) {
      return evaluate_flux(space, mc, e, x);
    };
    CHECK((divergence_load(space, m0) - ops.G * mc).cwiseAbs().maxCoeff() < 1e-10);

    // (p0, dx v) for p0 in the pressure space equals G^T p.
    const EdgeFunction p0 = [&](int e, double x) {
      return evaluate_pressure(space, pc, e, x);
    };
    CHECK((grad_adjoint_load(space, p0) - ops.G.transpose() * pc)
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("constant loads on the single pipe") {
  const GlobalSpace space = pipe_fem(0.5);
  const EdgeFunction one = [](int, double) { return 1.0; };
  const Eigen::VectorXd fp = pressure_load(space, one);
  CHECK(fp(0) == doctest::Approx(0.5));
  CHECK(fp(1) == doctest::Approx(0.5));
  const Eigen::VectorXd fg = flux_load(space, one);
  CHECK(fg(0) == doctest::Approx(0.25));
  CHECK(fg(1) == doctest::Approx(0.5));
  CHECK(fg(2) == doctest::Approx(0.25));
}
