#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "kfp/errors.hpp"
#include "kfp/green.hpp"
#include "kfp/special.hpp"

using kfp::Complex;

namespace {
constexpr double kPi = std::numbers::pi;

double coeff_err(const kfp::GreenExpansion& e, const std::string& key, Complex ref) {
  return std::abs(e.coeffs.at(key) - ref);
}
}  // namespace

TEST_CASE("upper-branch square root") {
  CHECK(std::abs(kfp::sqrt_upper(Complex(-4.0, 0.0)) - Complex(0.0, 2.0)) <= 1e-15);
  for (const Complex z : {Complex(3.0, -4.0), Complex(-1.0, 1.0), Complex(0.5, 2.0)}) {
    const Complex w = kfp::sqrt_upper(z);
    CHECK(w.imag() >= 0.0);
    CHECK(std::abs(w * w - z) <= 1e-14 * std::abs(z));
  }
}

TEST_CASE("kernel: three-dimensional closed form") {
  for (const Complex z : {Complex(-0.01, 0.0), Complex(-0.5, 0.4), Complex(0.3, 1.1)}) {
    for (const double r : {0.5, 1.0, 3.0}) {
      const Complex w = kfp::sqrt_upper(z);
      const Complex ref = std::exp(Complex(0, 1) * w * r) / (4.0 * kPi * r);
      const Complex got = kfp::green_kernel(3, z, r);
      CHECK(std::abs(got - ref) <= 1e-10 * std::abs(ref));
    }
  }
}

TEST_CASE("kernel: all dimensions vs the modified-Bessel closed form") {
  // on the negative axis z = -m^2 the kernel is (2 pi)^{-n/2} (m/r)^{n/2-1}
  // K_{n/2-1}(m r)
  for (int n = 3; n <= 8; ++n) {
    const double nu = 0.5 * n - 1.0;
    for (const double m : {0.1, 1.0}) {
      for (const double r : {0.7, 2.0}) {
        const Complex got = kfp::green_kernel(n, Complex(-m * m, 0.0), r);
        const double ref = std::pow(2.0 * kPi, -0.5 * n) * std::pow(m / r, nu) *
                           std::cyl_bessel_k(nu, m * r);
        CHECK(std::abs(got - ref) <= 1e-12 * ref);
      }
    }
  }
}

TEST_CASE("kernel: five-dimensional small-z limit is the newtonian kernel") {
  for (const double r : {1.0, 2.0}) {
    const Complex got = kfp::green_kernel(5, Complex(-1e-8, 0.0), r);
    const double ref = 1.0 / (8.0 * kPi * kPi * r * r * r);
    CHECK(std::abs(got - ref) <= 1e-7 * ref);
  }
}

TEST_CASE("kernel: radial equation residual by finite differences") {
  // fourth-order five-point stencils; second order cannot reach 1e-7 for the
  // steep r^{-4} kernels in double precision
  const double h = 1e-3;
  for (const int n : {3, 4, 5, 6}) {
    for (const Complex z : {Complex(-0.4, 0.0), Complex(0.2, 0.7)}) {
      const double r = 1.3;
      Complex u[5];
      for (int k = -2; k <= 2; ++k) u[k + 2] = kfp::green_kernel(n, z, r + k * h);
      const Complex upp =
          (-u[0] + 16.0 * u[1] - 30.0 * u[2] + 16.0 * u[3] - u[4]) / (12.0 * h * h);
      const Complex upr = (u[0] - 8.0 * u[1] + 8.0 * u[3] - u[4]) / (12.0 * h);
      const Complex resid = upp + double(n - 1) / r * upr + z * u[2];
      CHECK(std::abs(resid) <= 1e-7 * std::abs(u[2]));
    }
  }
}

TEST_CASE("kernel: decays along increasing separation on the negative axis") {
  const double lam = 1.0;
  const Complex a5 = kfp::green_kernel(5, Complex(-lam, 0.0), 5.0);
  const Complex a10 = kfp::green_kernel(5, Complex(-lam, 0.0), 10.0);
  CHECK(std::abs(a10) <= std::exp(-std::sqrt(lam) * 5.0 / 2.0) * std::abs(a5));
}

TEST_CASE("kernel: domain guards") {
  CHECK_THROWS_AS((void)kfp::green_kernel(3, Complex(-1.0, 0.0), 0.0), kfp::ConfigError);
  CHECK_THROWS_AS((void)kfp::green_kernel(3, Complex(2.0, 0.0), 1.0), kfp::ConfigError);
  CHECK_THROWS_AS((void)kfp::green_kernel(3, Complex(0.0, 0.0), 1.0), kfp::ConfigError);
  CHECK_THROWS_AS((void)kfp::green_kernel(2, Complex(-1.0, 0.0), 1.0), kfp::ConfigError);
}

TEST_CASE("lambda grid: log spacing, decreasing") {
  const auto g = kfp::make_lambda_grid(1e-6, 1e-2, 24);
  CHECK(g.size() == 24);
  CHECK(g.front() == doctest::Approx(1e-2).epsilon(1e-14));
  CHECK(g.back() == doctest::Approx(1e-6).epsilon(1e-14));
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] < g[i - 1]);
    if (i >= 2)
      CHECK(g[i] / g[i - 1] == doctest::Approx(g[i - 1] / g[i - 2]).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)kfp::make_lambda_grid(1e-2, 1e-6, 24), kfp::ConfigError);
}

TEST_CASE("odd expansion: five dimensions recovers the closed-form coefficients") {
  const auto grid = kfp::make_lambda_grid(1e-6, 1e-2, 24);
  const auto e = kfp::expand_green_odd(5, 1.0, grid);
  const double a50 = 1.0 / (8.0 * kPi * kPi);
  CHECK(coeff_err(e, "a0", Complex(a50, 0.0)) <= 1e-6);
  CHECK(std::abs(e.coeffs.at("a1")) <= 1e-7 * a50);
  const Complex a53(0.0, 1.0 / (24.0 * kPi * kPi));
  CHECK(coeff_err(e, "a3", a53) <= 1e-5 * std::abs(a53));
  CHECK(e.residual <= 1e-8);
  CHECK(e.condition < 1e9);

  // doubling the grid density moves nothing beyond its tolerance
  const auto dense = kfp::expand_green_odd(5, 1.0, kfp::make_lambda_grid(1e-6, 1e-2, 48));
  CHECK(std::abs(dense.coeffs.at("a0") - e.coeffs.at("a0")) <= 1e-6);
  CHECK(std::abs(dense.coeffs.at("a3") - e.coeffs.at("a3")) <= 1e-5 * std::abs(a53));

  // probe independence after the r-power normalization
  const auto r2 = kfp::expand_green_odd(5, 2.0, grid);
  CHECK(std::abs(r2.coeffs.at("a0") - e.coeffs.at("a0")) <= 1e-6);
  CHECK(std::abs(r2.coeffs.at("a3") - e.coeffs.at("a3")) <= 2e-5 * std::abs(a53));
}

TEST_CASE("even expansion: four and six dimensions, log coefficient") {
  const auto grid = kfp::make_lambda_grid(1e-6, 1e-2, 24);
  const auto e4 = kfp::expand_green_even(4, 1.0, grid);
  const double c40 = -1.0 / (8.0 * kPi * kPi);
  const double d40 = 1.0 / (4.0 * kPi * kPi);
  CHECK(coeff_err(e4, "c_log", Complex(c40, 0.0)) <= 1e-4 * std::abs(c40));
  CHECK(coeff_err(e4, "d0", Complex(d40, 0.0)) <= 1e-6);
  CHECK(e4.residual <= 1e-8);

  const auto e6 = kfp::expand_green_even(6, 1.0, grid);
  const double c60 = -1.0 / (64.0 * std::pow(kPi, 3));
  CHECK(coeff_err(e6, "c_log", Complex(c60, 0.0)) <= 1e-4 * std::abs(c60));

  // derivative route: d/dlambda of the kernel at small lambda gives -d1/r^2
  const double r = 1.0, l1 = 1e-6, l2 = 2e-6;
  const Complex fd = (kfp::green_kernel(6, Complex(-l2, 0.0), r) -
                      kfp::green_kernel(6, Complex(-l1, 0.0), r)) /
                     (l2 - l1);
  const Complex d1 = e6.coeffs.at("d1");
  CHECK(std::abs(-fd - d1) <= 1e-3 * std::abs(d1));

  // probe independence
  const auto e4b = kfp::expand_green_even(4, 2.0, grid);
  CHECK(std::abs(e4b.coeffs.at("c_log") - e4.coeffs.at("c_log")) <= 1e-4 * std::abs(c40));
  CHECK(std::abs(e4b.coeffs.at("d0") - e4.coeffs.at("d0")) <= 2e-6);
}

TEST_CASE("expansion guards") {
  const auto grid = kfp::make_lambda_grid(1e-6, 1e-2, 24);
  CHECK_THROWS_AS((void)kfp::expand_green_odd(4, 1.0, grid), kfp::ConfigError);
  CHECK_THROWS_AS((void)kfp::expand_green_even(5, 1.0, grid), kfp::ConfigError);
  CHECK_THROWS_AS((void)kfp::expand_green_odd(5, 0.0, grid), kfp::ConfigError);
  CHECK_THROWS_AS(
      (void)kfp::expand_green_odd(5, 1.0, kfp::make_lambda_grid(1e-6, 1e-2, 6)),
      kfp::ConfigError);
}
