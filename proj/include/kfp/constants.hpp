#pragma once

#include <complex>

namespace kfp {

// Closed-form threshold and time-decay constants, dimension n >= 3.
// Odd n carries the half-power pair (a_leading, b_time); even n the log pair
// (c_log, e_time). Either product equals (4*pi)^{-n/2}, which is the built-in
// self-check exposed as heat_product.
struct KfpConstants {
  int dim = 0;
  std::complex<double> a_leading{};  // odd n only
  double c_log = 0.0;                // even n only
  std::complex<double> b_time{};     // odd n only
  double e_time = 0.0;               // even n only
  double heat_product = 0.0;         // (4*pi)^{-n/2} up to roundoff
  double identity_residual = 0.0;    // relative defect of the product identity
};

// i / (2 (2*pi)^{(n-1)/2} (n-2)!!), odd n >= 3.
std::complex<double> a_leading(int n);

// -1 / ((2*pi)^{n/2} 2^{(n-2)/2} ((n-2)/2)!), even n >= 4.
double c_log(int n);

// Gamma(n/2) / (pi*i), odd n >= 3.
std::complex<double> b_time(int n);

// -((n-2)/2)! / 2, even n >= 4.
double e_time(int n);

// a_leading*b_time (odd n) or c_log*e_time (even n); equals (4*pi)^{-n/2}.
double heat_product(int n);

KfpConstants kfp_constants(int n);

// Dispersive envelope gamma(t) = sigma(t) * theta(t) with
// sigma = t - 2*coth(t) + 2*cosech(t), theta = 4*pi*e^{-t}*sinh(t).
struct GammaEnvelope {
  double t = 0.0;
  double sigma = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
};

// Below this t, sigma switches to its Taylor series t^3/12 - t^5/120 + ...
// (direct evaluation cancels catastrophically).
inline constexpr double kSigmaSeriesThreshold = 1e-3;

// Both sigma branches, exposed so the overlap band can be cross-checked.
double sigma_series(double t);
double sigma_direct(double t);

GammaEnvelope gamma_envelope(double t);

}  // namespace kfp
