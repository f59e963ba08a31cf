#pragma once

#include <cmath>
#include <numbers>

#include "kfp/errors.hpp"

namespace kfp {

// Gauss-Kronrod (15, 7) pair on the reference interval: positive abscissae
// only (the rule is symmetric), centre node last.  Odd-indexed Kronrod nodes
// are the embedded Gauss-7 nodes.
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <typename F>
void gauss_kronrod_15(const F& f, double a, double b, double& kron,
                      double& gauss) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  kron = kKronrodWeights[7] * f(c);
  gauss = kGaussWeights[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double fl = f(c - hw * kKronrodNodes[i]);
    const double fr = f(c + hw * kKronrodNodes[i]);
    kron += kKronrodWeights[i] * (fl + fr);
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (fl + fr);
  }
  kron *= hw;
  gauss *= hw;
}

// Adaptive bisection driven by the embedded error estimate; tol is absolute
// and halves per split.  Throws NumericError past depth 28.
template <typename F>
double adaptive_gauss_kronrod(const F& f, double a, double b, double tol,
                              int depth = 0) {
  double kron = 0, gauss = 0;
  gauss_kronrod_15(f, a, b, kron, gauss);
  const double disc = std::abs(kron - gauss);
  // The 1e-14 |kron| term is the evaluation-noise floor: integrands backed by
  // linear solves jitter at ~10 ulp, and below that the rule discrepancy stops
  // reflecting truncation error, so further bisection only chases noise.
  if (disc <= std::max(tol, 1e-14 * std::abs(kron))) return kron;
  if (depth >= 28)
    throw NumericError("radial quadrature failed to converge");
  const double c = 0.5 * (a + b);
  return adaptive_gauss_kronrod(f, a, c, 0.5 * tol, depth + 1) +
         adaptive_gauss_kronrod(f, c, b, 0.5 * tol, depth + 1);
}

// |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2).
inline double surface_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace kfp
