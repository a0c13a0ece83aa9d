#include "pipewave/damping.hpp"

#include <cmath>
#include <stdexcept>

namespace pipewave {

namespace {

double linear_part(const DampingModel& m) {
  return (m.family == DampingFamily::power_abs) ? 0.0 : m.beta;
}

double power_part(const DampingModel& m) {
  return (m.family == DampingFamily::linear) ? 0.0 : m.alpha;
}

}  // namespace

double DampingModel::value(double m) const {
  double d = linear_part(*this) * m;
  const double a = power_part(*this);
  if (a != 0.0 && m != 0.0) d += a * std::pow(std::abs(m), sigma) * m;
  return d;
}

double DampingModel::derivative(double m) const {
  double dp = linear_part(*this);
  const double a = power_part(*this);
  if (a != 0.0) {
    // (|m|^sigma m)' = (sigma + 1) |m|^sigma; at m = 0 use the one-sided
    // limit (0 for sigma > 0, 1 for sigma = 0).
    const double mag = (m == 0.0) ? (sigma > 0.0 ? 0.0 : 1.0)
                                  : std::pow(std::abs(m), sigma);
    dp += a * (sigma + 1.0) * mag;
  }
  return dp;
}

DampingModel DampingModel::linear(double beta) {
  return {DampingFamily::linear, 0.0, beta, 1.0};
}

DampingModel DampingModel::power_abs(double alpha, double sigma) {
  return {DampingFamily::power_abs, alpha, 0.0, sigma};
}

DampingModel DampingModel::affine_power(double beta, double alpha, double sigma) {
  return {DampingFamily::affine_power, alpha, beta, sigma};
}

DampingModel DampingModel::from_json(const nlohmann::json& j) {
  DampingModel model;
  const std::string family = j.at("family").get<std::string>();
  if (family == "linear")
    model.family = DampingFamily::linear;
  else if (family == "power_abs")
    model.family = DampingFamily::power_abs;
  else if (family == "affine_power")
    model.family = DampingFamily::affine_power;
  else
    throw std::invalid_argument("unknown damping family '" + family + "'");
  model.alpha = j.value("alpha", 0.0);
  model.beta = j.value("beta", 0.0);
  model.sigma = j.value("sigma", 1.0);
  if (model.alpha < 0 || model.beta < 0 || model.sigma < 0)
    throw std::invalid_argument("damping parameters must be nonnegative");
  return model;
}

nlohmann::json DampingModel::to_json() const {
  return {{"family", to_string(family)},
          {"alpha", alpha},
          {"beta", beta},
          {"sigma", sigma}};
}

DampingReport check_assumption1(const DampingModel& model, double m_bound) {
  if (!(m_bound > 0.0))
    throw std::invalid_argument("check_assumption1: m_bound must be positive");
  DampingReport report;
  const double beta = linear_part(model);
  const double alpha = power_part(model);
  // d'(m) = beta + alpha (sigma + 1) |m|^sigma is even and nondecreasing in
  // |m| for sigma > 0, so its infimum over the range sits at m = 0.
  report.d0 = beta + (alpha != 0.0 && model.sigma == 0.0
                          ? alpha * (model.sigma + 1.0)
                          : 0.0);
  report.satisfies_d0_positive = report.d0 > 0.0;
  report.d1 = beta;
  report.d2 = alpha * (model.sigma + 1.0);
  report.exponent = model.sigma;
  report.c1_smooth = (alpha == 0.0) || model.sigma >= 1.0 || model.sigma == 0.0;
  return report;
}

std::string to_string(DampingFamily family) {
  switch (family) {
    case DampingFamily::linear: return "linear";
    case DampingFamily::power_abs: return "power_abs";
    case DampingFamily::affine_power: return "affine_power";
  }
  return "unknown";
}

}  // namespace pipewave
