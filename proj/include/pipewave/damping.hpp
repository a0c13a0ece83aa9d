#pragma once

#include <string>

#include <json.hpp>

namespace pipewave {

enum class DampingFamily { linear, power_abs, affine_power };

// Nonlinear friction law d(m):
//   linear:       d(m) = beta * m
//   power_abs:    d(m) = alpha * |m|^sigma * m
//   affine_power: d(m) = beta * m + alpha * |m|^sigma * m
// All families satisfy d(0) = 0 and are odd and monotone for nonnegative
// parameters. For 0 < sigma < 1 the derivative at m = 0 is taken as the
// one-sided limit beta, and the validity checker flags the C1 violation.
struct DampingModel {
  DampingFamily family = DampingFamily::linear;
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 1.0;

  double value(double m) const;
  double derivative(double m) const;

  static DampingModel linear(double beta);
  static DampingModel power_abs(double alpha, double sigma);
  static DampingModel affine_power(double beta, double alpha, double sigma);

  static DampingModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Certificate of the monotonicity/growth constants of d over a symmetric
// range [-m_bound, m_bound]:
//   d0 = inf d'(m)            (lower monotonicity constant)
//   |d'(m)| <= d1 + d2 |m|^exponent  (growth bound, exponent = sigma)
// satisfies_d0_positive reports whether d0 > 0 strictly; c1_smooth reports
// whether d is continuously differentiable on the range.
struct DampingReport {
  bool satisfies_d0_positive = false;
  double d0 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double exponent = 1.0;
  bool c1_smooth = true;
};

DampingReport check_assumption1(const DampingModel& model, double m_bound);

std::string to_string(DampingFamily family);

}  // namespace pipewave
