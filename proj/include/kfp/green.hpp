#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace kfp {

/// Small-|z| expansion of the free Laplacian resolvent kernel at fixed
/// separation, extracted by least squares on a lambda grid (z = -lambda).
/// Odd dimension: coefficients "a0".."a{n-2}" multiply z^{m/2} r^{m-(n-2)}.
/// Even dimension: "d0".."d{(n-2)/2}" multiply z^j r^{2j-(n-2)} and "c_log"
/// multiplies z^{(n-2)/2} log z^{1/2}; at the log order only Re d is
/// observable from real samples (its imaginary part cancels the branch phase).
struct GreenExpansion {
  int dim = 0;
  bool odd = true;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::map<std::string, std::complex<double>> coeffs;
  double residual = 0.0;   // max relative misfit over the samples
  double condition = 0.0;  // of the unit-scaled design matrix
};

/// Square root with Im >= 0 (the branch that makes the kernel decay for z < 0).
std::complex<double> sqrt_upper(std::complex<double> z);

/// Resolvent kernel of -Laplace in dimension n >= 3 at separation r > 0:
/// (i/4) (z^{1/2}/(2 pi r))^{n/2-1} H^(1)_{n/2-1}(z^{1/2} r), Im z^{1/2} > 0.
std::complex<double> green_kernel(int n, std::complex<double> z, double r);

/// Logarithmically spaced grid, decreasing from hi to lo.
std::vector<double> make_lambda_grid(double lo, double hi, int count);

GreenExpansion expand_green_odd(int n, double r_probe,
                                const std::vector<double>& lambda_grid);

GreenExpansion expand_green_even(int n, double r_probe,
                                 const std::vector<double>& lambda_grid);

}  // namespace kfp
