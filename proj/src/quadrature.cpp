#include "pipewave/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pipewave {

namespace {

// Legendre polynomial on [-1, 1] with derivative, by the three-term
// recurrence.
void legendre_ref(int k, double xi, double* value, double* derivative) {
  if (k == 0) {
    *value = 1.0;
    *derivative = 0.0;
    return;
  }
  double pm1 = 1.0;   // P_0
  double p = xi;      // P_1
  double dpm1 = 0.0;  // P_0'
  double dp = 1.0;    // P_1'
  for (int n = 1; n < k; ++n) {
    const double pn1 = ((2 * n + 1) * xi * p - n * pm1) / (n + 1);
    const double dpn1 = dpm1 + (2 * n + 1) * p;
    pm1 = p;
    p = pn1;
    dpm1 = dp;
    dp = dpn1;
  }
  *value = p;
  *derivative = dp;
}

}  // namespace

QuadratureRule trapezoid_rule(int n_cells) {
  if (n_cells < 1) throw std::invalid_argument("trapezoid_rule: n_cells >= 1 required");
  const double h = 1.0 / n_cells;
  QuadratureRule rule;
  rule.points = Eigen::VectorXd::LinSpaced(n_cells + 1, 0.0, 1.0);
  rule.weights = Eigen::VectorXd::Constant(n_cells + 1, h);
  rule.weights(0) = h / 2;
  rule.weights(n_cells) = h / 2;
  return rule;
}

QuadratureRule gauss_lobatto_rule(int order) {
  if (order < 1) throw std::invalid_argument("gauss_lobatto_rule: order >= 1 required");
  const int n = order + 1;  // point count
  Eigen::VectorXd xi(n);
  xi(0) = -1.0;
  xi(n - 1) = 1.0;
  // Interior points are the roots of P_order'; Newton iteration from
  // Chebyshev-Lobatto initial guesses.
  for (int i = 1; i < n - 1; ++i) {
    double x = -std::cos(M_PI * i / order);
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre_ref(order, x, &p, &dp);
      // second derivative from the Legendre ODE:
      // (1 - x^2) P'' = 2x P' - k(k+1) P
      const double d2p = (2.0 * x * dp - order * (order + 1) * p) / (1.0 - x * x);
      const double step = dp / d2p;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    xi(i) = x;
  }
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double p, dp;
    legendre_ref(order, xi(i), &p, &dp);
    const double w = 2.0 / (order * (order + 1) * p * p);
    rule.points(i) = 0.5 * (xi(i) + 1.0);
    rule.weights(i) = 0.5 * w;
  }
  return rule;
}

QuadratureRule gauss_legendre_rule(int n_points) {
  if (n_points < 1) throw std::invalid_argument("gauss_legendre_rule: n_points >= 1 required");
  QuadratureRule rule;
  rule.points.resize(n_points);
  rule.weights.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    double x = -std::cos(M_PI * (i + 0.75) / (n_points + 0.5));
    double p = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre_ref(n_points, x, &p, &dp);
      const double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    legendre_ref(n_points, x, &p, &dp);
    rule.points(i) = 0.5 * (x + 1.0);
    rule.weights(i) = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

double legendre(int k, double x) {
  double p, dp;
  legendre_ref(k, 2.0 * x - 1.0, &p, &dp);
  return p;
}

double legendre_derivative(int k, double x) {
  double p, dp;
  legendre_ref(k, 2.0 * x - 1.0, &p, &dp);
  return 2.0 * dp;
}

double legendre_antiderivative(int k, double x) {
  if (k == 0) return x;
  // P_k = (P_{k+1} - P_{k-1})' / (2k + 1) on [-1,1]; shifted to [0,1] the
  // antiderivative picks up a factor 1/2 and vanishes at x = 0.
  return (legendre(k + 1, x) - legendre(k - 1, x)) / (2.0 * (2 * k + 1));
}

Eigen::MatrixXd lagrange_derivative_matrix(const Eigen::VectorXd& nodes) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd bary(n);
  for (int j = 0; j < n; ++j) {
    double w = 1.0;
    for (int k = 0; k < n; ++k)
      if (k != j) w *= (nodes(j) - nodes(k));
    bary(j) = 1.0 / w;
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      D(i, j) = (bary(j) / bary(i)) / (nodes(i) - nodes(j));
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

Eigen::VectorXd lagrange_values(const Eigen::VectorXd& nodes, double x) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  // Exact hit on a node.
  for (int j = 0; j < n; ++j) {
    if (x == nodes(j)) {
      values(j) = 1.0;
      return values;
    }
  }
  Eigen::VectorXd bary(n);
  for (int j = 0; j < n; ++j) {
    double w = 1.0;
    for (int k = 0; k < n; ++k)
      if (k != j) w *= (nodes(j) - nodes(k));
    bary(j) = 1.0 / w;
  }
  double denom = 0.0;
  for (int j = 0; j < n; ++j) {
    values(j) = bary(j) / (x - nodes(j));
    denom += values(j);
  }
  values /= denom;
  return values;
}

}  // namespace pipewave
