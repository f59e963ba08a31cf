#pragma once

#include <vector>

#include "kfp/phase_space.hpp"

namespace kfp {

// Wrap-around guard: measurement horizons on the periodic box must satisfy
// t <= kWrapBeta * L^2 so diffusive spreading stays inside the domain.
inline constexpr double kWrapBeta = 0.05;

// Decay fits exclude the transient and use t in [kFitWindowMin,
// min(kFitWindowMax, wrap horizon)], an artifact decision surfaced in reports.
inline constexpr double kFitWindowMin = 20.0;
inline constexpr double kFitWindowMax = 100.0;

struct DecayReport {
  int dim = 1;
  PotentialSpec potential;
  std::vector<double> times;
  std::vector<Complex> pairings;  // <S(t) f, g> per time
  // log-log slope of |pairing| over the fit window
  double fitted_exponent = 0.0;
  // mean of pairing(t) * t^{dim/2} over the fit window, the amplitude of the
  // model pairing ~ amplitude * t^{-dim/2}
  Complex fitted_amplitude{0, 0};
  // (4 pi)^{-dim/2} <f, M> <M, g>, recomputed from constants at call time
  Complex predicted_amplitude{0, 0};
  bool wrap_guard_ok = false;
  bool tail_ok = false;
};

// e^{-tP} u by adaptive Krylov-subspace action of the matrix exponential.
// tol is the absolute accuracy budget relative to ||u||.  Throws ConfigError
// when t violates the wrap guard, NumericError on step-size collapse, and
// TrustError when the result's Hermite tail exceeds the trust threshold.
StateVector propagate(const StateVector& u, const Potential& pot, double t,
                      double tol = 1e-8);

// <S(t) f, g> over the given times (chained propagation), log-log fit on the
// window, and the rank-one amplitude comparison.  The weight enters the
// pairing as in weighted_pair.
DecayReport decay_scan(const StateVector& f, const StateVector& g,
                       const Potential& pot, const std::vector<double>& times,
                       const WeightSpec& weight = {}, double tol = 1e-8);

// Separable radial data for the free any-dimension route: the position factor
// has radial Fourier profile  fhat(r) = (c0 + c2 r^2) (2b)^{dim/2} e^{-b r^2}
// (for c2 = 0 this is the Gaussian e^{-|x|^2/(4b)}), and the velocity factor
// is the ground Hermite state.  c0 = 0 gives data orthogonal to the
// equilibrium.
struct GaussianProfile {
  double b = 0.5;
  double c0 = 1.0;
  double c2 = 0.0;
};

// The profile evaluated at radial frequency r in dimension dim:
// (c0 + c2 r^2) (2b)^{dim/2} e^{-b r^2}.
double profile_hat(const GaussianProfile& p, int dim, double r);

// Free evolution pairing <S0(t) f, g> for any dimension n >= 1 via the fiber
// factorization: a radial frequency quadrature with a dense per-node matrix
// exponential on a degree-J Hermite slice.  No 2n-dimensional grid involved.
DecayReport free_decay_radial(int n, const GaussianProfile& f,
                              const GaussianProfile& g,
                              const std::vector<double>& times, int J = 32,
                              double quad_tol = 1e-10);

}  // namespace kfp
