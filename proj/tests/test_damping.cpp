#include <doctest.h>

#include "pipewave/damping.hpp"

using namespace pipewave;

TEST_CASE("linear damping values and derivatives") {
  const DampingModel d = DampingModel::linear(0.5);
  CHECK(d.value(0.0) == doctest::Approx(0.0));
  CHECK(d.value(2.0) == doctest::Approx(1.0));
  CHECK(d.value(-2.0) == doctest::Approx(-1.0));
  CHECK(d.derivative(0.0) == doctest::Approx(0.5));
  CHECK(d.derivative(-3.0) == doctest::Approx(0.5));
}

TEST_CASE("quadratic friction d(m) = |m| m") {
  const DampingModel d = DampingModel::power_abs(1.0, 1.0);
  CHECK(d.value(2.0) == doctest::Approx(4.0));
  CHECK(d.value(-2.0) == doctest::Approx(-4.0));
  CHECK(d.value(0.0) == doctest::Approx(0.0));
  CHECK(d.derivative(2.0) == doctest::Approx(4.0));
  CHECK(d.derivative(-2.0) == doctest::Approx(4.0));
  CHECK(d.derivative(0.0) == doctest::Approx(0.0));
}

TEST_CASE("affine power family") {
  const DampingModel d = DampingModel::affine_power(0.3, 2.0, 2.0);
  // d(m) = 0.3 m + 2 |m|^2 m
  CHECK(d.value(1.5) == doctest::Approx(0.3 * 1.5 + 2.0 * 1.5 * 1.5 * 1.5));
  CHECK(d.derivative(1.5) == doctest::Approx(0.3 + 2.0 * 3.0 * 1.5 * 1.5));
  // Odd symmetry and finite-difference consistency.
  for (double m : {-1.2, -0.4, 0.7, 2.1}) {
    CHECK(d.value(-m) == doctest::Approx(-d.value(m)));
    const double eps = 1e-6;
    const double fd = (d.value(m + eps) - d.value(m - eps)) / (2.0 * eps);
    CHECK(d.derivative(m) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("monotonicity pairing (d(m1) - d(m2))(m1 - m2) >= 0") {
  const DampingModel models[] = {
      DampingModel::linear(1.0), DampingModel::power_abs(1.0, 1.0),
      DampingModel::affine_power(0.5, 1.5, 2.0)};
  for (const DampingModel& d : models)
    for (double m1 = -2.0; m1 <= 2.0; m1 += 0.37)
      for (double m2 = -2.0; m2 <= 2.0; m2 += 0.41)
        CHECK((d.value(m1) - d.value(m2)) * (m1 - m2) >= -1e-15);
}

TEST_CASE("validity certificate for linear damping") {
  const DampingReport r = check_assumption1(DampingModel::linear(0.8), 10.0);
  CHECK(r.satisfies_d0_positive);
  CHECK(r.d0 == doctest::Approx(0.8));
  CHECK(r.d1 == doctest::Approx(0.8));
  CHECK(r.d2 == doctest::Approx(0.0));
  CHECK(r.c1_smooth);
}

TEST_CASE("validity certificate for |m| m damping") {
  const DampingReport r =
      check_assumption1(DampingModel::power_abs(1.0, 1.0), 10.0);
  CHECK_FALSE(r.satisfies_d0_positive);  // derivative vanishes at m = 0
  CHECK(r.d0 == doctest::Approx(0.0));
  CHECK(r.d2 == doctest::Approx(2.0));  // |d'| = 2 |m|
  CHECK(r.exponent == doctest::Approx(1.0));
  CHECK(r.c1_smooth);
}

TEST_CASE("validity certificate for the affine family") {
  const DampingReport r =
      check_assumption1(DampingModel::affine_power(0.5, 1.0, 2.0), 10.0);
  CHECK(r.satisfies_d0_positive);
  CHECK(r.d0 == doctest::Approx(0.5));
  CHECK(r.d1 == doctest::Approx(0.5));
  CHECK(r.d2 == doctest::Approx(3.0));  // alpha (sigma + 1)
  CHECK(r.c1_smooth);
}

TEST_CASE("fractional exponent breaks C1 smoothness") {
  const DampingReport r =
      check_assumption1(DampingModel::power_abs(1.0, 0.5), 10.0);
  CHECK_FALSE(r.c1_smooth);
}

TEST_CASE("JSON round trip") {
  const DampingModel d = DampingModel::affine_power(0.25, 1.75, 2.0);
  const DampingModel back = DampingModel::from_json(d.to_json());
  CHECK(back.family == d.family);
  CHECK(back.alpha == doctest::Approx(d.alpha));
  CHECK(back.beta == doctest::Approx(d.beta));
  CHECK(back.sigma == doctest::Approx(d.sigma));
  CHECK_THROWS(DampingModel::from_json({{"family", "bogus"}}));
}
