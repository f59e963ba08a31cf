#include "kfp/constants.hpp"

#include <cmath>
#include <numbers>

#include "kfp/errors.hpp"
#include "kfp/special.hpp"

namespace kfp {

namespace {
constexpr double kPi = std::numbers::pi;

void require_odd(int n, const char* who) {
  if (n < 3 || n % 2 == 0)
    throw ConfigError(std::string(who) + ": defined for odd dimension n >= 3");
}

void require_even(int n, const char* who) {
  if (n < 4 || n % 2 != 0)
    throw ConfigError(std::string(who) + ": defined for even dimension n >= 4");
}
}  // namespace

std::complex<double> a_leading(int n) {
  require_odd(n, "a_leading");
  const double denom =
      2.0 * std::pow(2.0 * kPi, (n - 1) / 2.0) * double(double_factorial(n - 2));
  return {0.0, 1.0 / denom};
}

double c_log(int n) {
  require_even(n, "c_log");
  const int m = (n - 2) / 2;
  return -1.0 / (std::pow(2.0 * kPi, n / 2.0) * std::pow(2.0, m) * std::tgamma(m + 1.0));
}

std::complex<double> b_time(int n) {
  require_odd(n, "b_time");
  // Gamma(n/2)/(pi*i) = -i*Gamma(n/2)/pi
  return {0.0, -std::tgamma(n / 2.0) / kPi};
}

double e_time(int n) {
  require_even(n, "e_time");
  const int m = (n - 2) / 2;
  return -0.5 * std::tgamma(m + 1.0);
}

double heat_product(int n) {
  if (n < 3) throw ConfigError("heat_product: defined for n >= 3");
  if (n % 2 == 1) {
    const std::complex<double> p = a_leading(n) * b_time(n);
    return p.real();
  }
  return c_log(n) * e_time(n);
}

KfpConstants kfp_constants(int n) {
  if (n < 3) throw ConfigError("kfp_constants: defined for n >= 3");
  KfpConstants k;
  k.dim = n;
  const double target = std::pow(4.0 * kPi, -n / 2.0);
  if (n % 2 == 1) {
    k.a_leading = a_leading(n);
    k.b_time = b_time(n);
    const std::complex<double> p = k.a_leading * k.b_time;
    k.heat_product = p.real();
    k.identity_residual = std::abs(p - target) / target;
  } else {
    k.c_log = c_log(n);
    k.e_time = e_time(n);
    k.heat_product = k.c_log * k.e_time;
    k.identity_residual = std::abs(k.heat_product - target) / target;
  }
  return k;
}

double sigma_series(double t) {
  const double t2 = t * t;
  return t * t2 * (1.0 / 12.0 + t2 * (-1.0 / 120.0 + t2 * (17.0 / 20160.0)));
}

double sigma_direct(double t) {
  // sigma = t - 2*coth(t) + 2*cosech(t) = t - 2*tanh(t/2) exactly; extended
  // precision keeps the subtraction above 1e-10 relative down to t ~ 5e-4.
  const long double lt = t;
  return static_cast<double>(lt - 2.0L * std::tanh(lt / 2.0L));
}

GammaEnvelope gamma_envelope(double t) {
  if (!(t > 0.0)) throw ConfigError("gamma_envelope: time must be > 0");
  GammaEnvelope g;
  g.t = t;
  g.sigma = t < kSigmaSeriesThreshold ? sigma_series(t) : sigma_direct(t);
  // theta = 4*pi*e^{-t}*sinh(t) = 2*pi*(1 - e^{-2t})
  g.theta = -2.0 * kPi * std::expm1(-2.0 * t);
  g.gamma = g.sigma * g.theta;
  return g;
}

}  // namespace kfp
