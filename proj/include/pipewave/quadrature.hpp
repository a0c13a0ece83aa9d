#pragma once

#include <Eigen/Dense>

namespace pipewave {

// A quadrature rule on the reference interval [0, 1].
struct QuadratureRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;  // nonnegative, summing to 1
};

// Trapezoidal rule on a uniform mesh of [0,1] with n_cells cells:
// endpoint weights h/2, interior weights h, h = 1/n_cells.
QuadratureRule trapezoid_rule(int n_cells);

// Gauss-Lobatto rule with (order + 1) points, exact for polynomials of
// degree 2*order - 1. Requires order >= 1.
QuadratureRule gauss_lobatto_rule(int order);

// Gauss-Legendre rule with n_points points, exact for degree 2*n_points - 1.
QuadratureRule gauss_legendre_rule(int n_points);

// Legendre polynomial of degree k shifted to [0, 1] (orthogonal basis of
// L2(0,1) with ||P_k||^2 = 1/(2k+1)), and its derivative in x.
double legendre(int k, double x);
double legendre_derivative(int k, double x);

// Integral of the shifted Legendre polynomial from 0 to x.
double legendre_antiderivative(int k, double x);

// Derivative matrix of the Lagrange basis on the given (distinct) nodes:
// D(i, j) = l_j'(nodes[i]).
Eigen::MatrixXd lagrange_derivative_matrix(const Eigen::VectorXd& nodes);

// Values of all Lagrange basis polynomials on the given nodes at x.
Eigen::VectorXd lagrange_values(const Eigen::VectorXd& nodes, double x);

}  // namespace pipewave
