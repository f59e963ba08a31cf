#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "kfp/constants.hpp"
#include "kfp/errors.hpp"
#include "kfp/special.hpp"

namespace {
constexpr double kPi = std::numbers::pi;
using kfp::Complex;
}  // namespace

TEST_CASE("leading half-power coefficient: pinned odd dimensions") {
  CHECK(std::abs(kfp::a_leading(3) - Complex(0.0, 1.0 / (4.0 * kPi))) <= 1e-16);
  CHECK(std::abs(kfp::a_leading(5) - Complex(0.0, 1.0 / (24.0 * kPi * kPi))) <= 1e-17);
  CHECK(std::abs(kfp::a_leading(7) - Complex(0.0, 1.0 / (240.0 * std::pow(kPi, 3)))) <=
        1e-18);
  CHECK_THROWS_AS((void)kfp::a_leading(4), kfp::ConfigError);
}

TEST_CASE("leading log coefficient: pinned even dimensions") {
  CHECK(kfp::c_log(4) == doctest::Approx(-1.0 / (8.0 * kPi * kPi)).epsilon(1e-14));
  CHECK(kfp::c_log(6) == doctest::Approx(-1.0 / (64.0 * std::pow(kPi, 3))).epsilon(1e-14));
  CHECK(kfp::c_log(8) == doctest::Approx(-1.0 / (768.0 * std::pow(kPi, 4))).epsilon(1e-14));
  CHECK_THROWS_AS((void)kfp::c_log(5), kfp::ConfigError);
}

TEST_CASE("time coefficient, odd: two closed forms agree") {
  CHECK(std::abs(kfp::b_time(3) - Complex(0.0, -1.0 / (2.0 * std::sqrt(kPi)))) <= 1e-16);
  CHECK(std::abs(kfp::b_time(5) - Complex(0.0, -3.0 / (4.0 * std::sqrt(kPi)))) <= 1e-15);
  for (int n = 3; n <= 11; n += 2) {
    const Complex via_gamma = kfp::b_time(n);
    const Complex via_double_fact =
        Complex(0.0, -1.0) * double(kfp::double_factorial(n - 2)) /
        (std::sqrt(kPi) * std::pow(2.0, (n - 1) / 2.0));
    CHECK(std::abs(via_gamma - via_double_fact) <= 1e-14 * std::abs(via_gamma));
  }
  CHECK_THROWS_AS((void)kfp::b_time(6), kfp::ConfigError);
}

TEST_CASE("time coefficient, even: pinned values") {
  CHECK(kfp::e_time(4) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(kfp::e_time(6) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(kfp::e_time(8) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)kfp::e_time(5), kfp::ConfigError);
}

TEST_CASE("heat product identity across dimensions") {
  CHECK(kfp::heat_product(4) == doctest::Approx(1.0 / (16.0 * kPi * kPi)).epsilon(1e-13));
  CHECK(kfp::heat_product(5) ==
        doctest::Approx(1.0 / (32.0 * std::pow(kPi, 2.5))).epsilon(1e-13));
  for (int n = 3; n <= 12; ++n) {
    const double target = std::pow(4.0 * kPi, -n / 2.0);
    CHECK(std::abs(kfp::heat_product(n) - target) <= 1e-12 * target);
    const auto k = kfp::kfp_constants(n);
    CHECK(k.identity_residual <= 1e-12);
    if (n % 2 == 1) {
      const Complex p = k.a_leading * k.b_time;
      CHECK(std::abs(p.imag()) <= 1e-15);
    }
  }
}

TEST_CASE("dispersive envelope: small-time behavior") {
  // The quartic-law ratio approaches 1 with a linear-in-t defect (the theta
  // factor contributes exactly -t at leading order).
  for (const double t : {1e-2, 1e-3, 1e-4}) {
    const auto g = kfp::gamma_envelope(t);
    CHECK(std::abs(g.gamma / (kPi * std::pow(t, 4) / 3.0) - 1.0) <= 1.5 * t);
  }
  CHECK(kfp::gamma_envelope(1e-3).gamma / (kPi * std::pow(1e-3, 4) / 3.0) ==
        doctest::Approx(1.0).epsilon(1.01e-3));
  const auto g = kfp::gamma_envelope(1e-2);
  CHECK(g.sigma == doctest::Approx(std::pow(1e-2, 3) / 12.0).epsilon(1e-3));
  CHECK(g.gamma == g.sigma * g.theta);
}

TEST_CASE("dispersive envelope: long-time saturation of theta") {
  const auto g = kfp::gamma_envelope(50.0);
  CHECK(g.theta == doctest::Approx(2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("dispersive envelope: strictly increasing on (0,10]") {
  double prev = 0.0;
  for (int i = 1; i <= 10000; ++i) {
    const double g = kfp::gamma_envelope(1e-3 * i).gamma;
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("dispersive envelope: sigma branches agree in the overlap band") {
  for (int i = 0; i <= 100; ++i) {
    const double t = 5e-4 * std::pow(10.0, i / 100.0);
    const double a = kfp::sigma_series(t);
    const double b = kfp::sigma_direct(t);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
  }
  CHECK_THROWS_AS((void)kfp::gamma_envelope(0.0), kfp::ConfigError);
  CHECK_THROWS_AS((void)kfp::gamma_envelope(-1.0), kfp::ConfigError);
}
