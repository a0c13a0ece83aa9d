#include <doctest.h>

#include <cmath>

#include "pipewave/quadrature.hpp"

using namespace pipewave;

namespace {

double integrate(const QuadratureRule& rule, double (*f)(double)) {
  double sum = 0.0;
  for (int i = 0; i < rule.points.size(); ++i)
    sum += rule.weights(i) * f(rule.points(i));
  return sum;
}

}  // namespace

TEST_CASE("trapezoid rule on the unit interval") {
  const QuadratureRule rule = trapezoid_rule(5);
  REQUIRE(rule.points.size() == 6);
  CHECK(rule.points(0) == doctest::Approx(0.0));
  CHECK(rule.points(3) == doctest::Approx(0.6));
  CHECK(rule.points(5) == doctest::Approx(1.0));
  CHECK(rule.weights(0) == doctest::Approx(0.1));
  CHECK(rule.weights(2) == doctest::Approx(0.2));
  CHECK(rule.weights.sum() == doctest::Approx(1.0));
  // Exact for piecewise linear interpolants of linears.
  CHECK(integrate(rule, [](double x) { return 3.0 * x - 1.0; }) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("Gauss-Lobatto rule, order 2") {
  const QuadratureRule rule = gauss_lobatto_rule(2);
  REQUIRE(rule.points.size() == 3);
  CHECK(rule.points(0) == doctest::Approx(0.0));
  CHECK(rule.points(1) == doctest::Approx(0.5));
  CHECK(rule.points(2) == doctest::Approx(1.0));
  CHECK(rule.weights(0) == doctest::Approx(1.0 / 6.0));
  CHECK(rule.weights(1) == doctest::Approx(2.0 / 3.0));
  CHECK(rule.weights(2) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("Gauss-Lobatto rule, order 3") {
  const QuadratureRule rule = gauss_lobatto_rule(3);
  REQUIRE(rule.points.size() == 4);
  const double inner = 1.0 / std::sqrt(5.0);
  CHECK(rule.points(1) == doctest::Approx((1.0 - inner) / 2.0));
  CHECK(rule.points(2) == doctest::Approx((1.0 + inner) / 2.0));
  CHECK(rule.weights(0) == doctest::Approx(1.0 / 12.0));
  CHECK(rule.weights(1) == doctest::Approx(5.0 / 12.0));
  CHECK(rule.weights(2) == doctest::Approx(5.0 / 12.0));
  CHECK(rule.weights(3) == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("Gauss-Lobatto exactness up to degree 2p-1") {
  for (int p = 2; p <= 10; ++p) {
    const QuadratureRule rule = gauss_lobatto_rule(p);
    for (int k = 0; k <= 2 * p - 1; ++k) {
      double sum = 0.0;
      for (int i = 0; i < rule.points.size(); ++i)
        sum += rule.weights(i) * std::pow(rule.points(i), k);
      CHECK(sum == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Gauss-Legendre exactness up to degree 2n-1") {
  for (int n = 1; n <= 8; ++n) {
    const QuadratureRule rule = gauss_legendre_rule(n);
    REQUIRE(rule.points.size() == n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i)
        sum += rule.weights(i) * std::pow(rule.points(i), k);
      CHECK(sum == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("shifted Legendre polynomials are orthogonal on [0,1]") {
  const QuadratureRule rule = gauss_legendre_rule(12);
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b <= 6; ++b) {
      double sum = 0.0;
      for (int i = 0; i < rule.points.size(); ++i)
        sum += rule.weights(i) * legendre(a, rule.points(i)) *
               legendre(b, rule.points(i));
      const double expected = a == b ? 1.0 / (2 * a + 1) : 0.0;
      CHECK(sum == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("Legendre derivative and antiderivative are consistent") {
  const double eps = 1e-6;
  for (int k = 0; k <= 8; ++k)
    for (double x : {0.12, 0.41, 0.77, 0.98}) {
      const double fd =
          (legendre(k, x + eps) - legendre(k, x - eps)) / (2.0 * eps);
      CHECK(legendre_derivative(k, x) == doctest::Approx(fd).epsilon(1e-6));
      const double fd_anti = (legendre_antiderivative(k, x + eps) -
                              legendre_antiderivative(k, x - eps)) /
                             (2.0 * eps);
      CHECK(fd_anti == doctest::Approx(legendre(k, x)).epsilon(1e-6));
    }
  // Antiderivative vanishes at x = 0 for every degree >= 1.
  for (int k = 1; k <= 8; ++k)
    CHECK(legendre_antiderivative(k, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("Lagrange derivative matrix differentiates polynomials exactly") {
  const QuadratureRule rule = gauss_lobatto_rule(5);
  const Eigen::MatrixXd D = lagrange_derivative_matrix(rule.points);
  // Row sums vanish (derivative of the constant).
  for (int i = 0; i < D.rows(); ++i)
    CHECK(D.row(i).sum() == doctest::Approx(0.0).epsilon(1e-11));
  // Exact on x^3.
  Eigen::VectorXd values(rule.points.size());
  for (int i = 0; i < values.size(); ++i)
    values(i) = std::pow(rule.points(i), 3);
  const Eigen::VectorXd derivative = D * values;
  for (int i = 0; i < values.size(); ++i)
    CHECK(derivative(i) ==
          doctest::Approx(3.0 * rule.points(i) * rule.points(i)).epsilon(1e-11));
}

TEST_CASE("Lagrange basis evaluation interpolates") {
  const QuadratureRule rule = gauss_lobatto_rule(4);
  // At a node the basis is the Kronecker delta.
  const Eigen::VectorXd at_node = lagrange_values(rule.points, rule.points(2));
  for (int i = 0; i < at_node.size(); ++i)
    CHECK(at_node(i) == doctest::Approx(i == 2 ? 1.0 : 0.0));
  // Partition of unity off the nodes.
  CHECK(lagrange_values(rule.points, 0.3).sum() == doctest::Approx(1.0));
}
