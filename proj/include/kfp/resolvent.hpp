#pragma once

#include <string>
#include <vector>

#include "kfp/evolve.hpp"
#include "kfp/phase_space.hpp"

namespace kfp {

// --- free solves ------------------------------------------------------------

// (P0 - z)^{-1} u by exact per-mode factorizations: the free operator is
// block diagonal over Fourier modes, each block the dense fiber matrix at
// that frequency shifted by z.  Throws NumericError when z sits on the
// truncated free spectrum (a block factor degenerates).
StateVector free_resolvent(const StateVector& u, Complex z);

// --- full iterative solves --------------------------------------------------

struct SolveReport {
  Complex z;
  int iterations = 0;
  double residual = 0.0;  // achieved |(P - z) u - f| / |f|
};

// (P - z)^{-1} f for z off the closed positive real axis.  GMRES on the
// right-preconditioned system (P - z) (P0 - z)^{-1}, so the potential
// coupling is the only iterated part and the iteration count follows the
// size of the potential, not the distance to the spectrum.  The returned
// state satisfies |(P - z) u - f| <= tol |f| (verified by a direct apply);
// non-convergence within the iteration cap throws NumericError carrying the
// achieved residual.
StateVector solve_resolvent(const StateVector& f, const Potential& pot,
                            Complex z, double tol,
                            SolveReport* report = nullptr);

// --- limiting absorption ----------------------------------------------------

struct LapTrace {
  double lambda = 0.0;
  std::vector<double> epsilons;      // decreasing
  std::vector<Complex> pairings;     // weighted <R(lambda + i eps) f, g>
  std::vector<double> norms;         // |R(lambda + i eps) f| / |f|
  std::vector<double> cauchy_diffs;  // |pairings[i+1] - pairings[i]|
  Complex limit{};                   // Richardson extrapolation (first order)
  double rate = 0.0;                 // log-log slope of the differences
  // Below this epsilon the shrinking imaginary part no longer separates
  // neighbouring grid frequencies (2 sqrt(lambda) pi / L) and the trace
  // settles onto the discrete limit of the box rather than the continuum one.
  double resolution_floor = 0.0;
};

// Pushes z = lambda + i eps toward the positive real axis along a decreasing
// schedule and records the weighted pairing trace.  lambda must be positive
// and the schedule strictly decreasing; a diverging trace (growing Cauchy
// differences) throws TrustError.
LapTrace lap_continuation(const StateVector& f, const StateVector& g,
                          const WeightSpec& weight, const Potential& pot,
                          double lambda, const std::vector<double>& eps_schedule,
                          double tol);

// --- low-energy fits --------------------------------------------------------

// Least-squares fit of the pairing family lambda -> <R(-lambda) f, g> against
// the threshold model for dimension n at z = -lambda on the branch
// z^{1/2} = i sqrt(lambda): integer powers lambda^k, the special column
//   odd n:   z^{(n-2)/2} = i^{n-2} lambda^{(n-2)/2}
//   even n:  z^{(n-2)/2} log z^{1/2}
//           = (-1)^{(n-2)/2} lambda^{(n-2)/2} (log sqrt(lambda) + i pi/2)
// and one guard member of each family (the next integer and special powers),
// which keeps the first omitted correction from biasing the fit.
// leading_special is the fitted coefficient of the special column;
// predicted_special is its rank-one prediction (threshold constant times
// <f, M><M, g>).  residual_pinned repeats the fit with the special
// coefficient frozen at the prediction; residual_flipped does the same with
// the branch conjugated, which a consistent data set must reject.
struct ResolventFit {
  int dim = 1;
  std::vector<double> lambda_samples;
  std::vector<Complex> pairings;
  std::vector<std::string> term_names;
  std::vector<Complex> coefficients;
  Complex leading_special{};
  Complex predicted_special{};
  double residual = 0.0;          // rms misfit / rms data, free fit
  double residual_pinned = 0.0;   // special coefficient pinned, correct branch
  double residual_flipped = 0.0;  // special coefficient pinned, wrong branch
  double fit_condition = 0.0;     // condition number of the scaled design
  Complex inverse_coefficient{};  // diagnostic lambda^{-1} column, if requested
  bool has_inverse_column = false;
};

// 16 logarithmic points in [1e-4, 5e-2].
std::vector<double> default_lambda_grid();

// Grid route: pairings from iterative solves at z = -lambda on f's grid.
// Solver tolerance must undercut the smallest model column by a factor of
// 100, else ConfigError.  The optional lambda^{-1} column is a diagnostic:
// away from resonance its fitted coefficient is statistically zero.
ResolventFit fit_low_energy(const StateVector& f, const StateVector& g,
                            const Potential& pot,
                            const std::vector<double>& lambdas, double tol,
                            bool with_inverse_column = false);

// Fiber route for the free operator in any dimension n >= 1: the pairing
// reduces to a radial frequency quadrature of the ground-to-ground entry of
// (fiber(r) + lambda)^{-1} on a degree-J Hermite slice.  No grid involved,
// so the spectrum near zero is genuinely continuous.
ResolventFit fit_low_energy_radial(int n, const GaussianProfile& f,
                                   const GaussianProfile& g,
                                   const std::vector<double>& lambdas,
                                   int J = 32, double quad_tol = 1e-12);

// --- threshold identities ---------------------------------------------------

struct ThresholdReport {
  std::vector<double> lambdas;        // negative, approaching zero
  std::vector<double> residuals;      // |(1 + R0 W) M + lambda R0 M| / |M|
  std::vector<double> stabilization;  // |(1 + R0 W) M - M_free| / |M_free|
  double kernel_residual = 0.0;       // |P M| / |M|
};

// Checks that the local equilibrium M solves the threshold equation
// (1 + R0(lambda) W) M = -lambda R0(lambda) M at each negative lambda, and
// that (1 + R0(lambda) W) M approaches the free equilibrium as lambda -> 0-.
ThresholdReport threshold_identity_check(const PhaseGrid& grid,
                                         const Potential& pot,
                                         const std::vector<double>& lambdas);

// --- vanishing of lambda R0(lambda) -----------------------------------------

struct VanishingTrace {
  std::vector<double> lambdas;  // negative, approaching zero
  std::vector<double> norms;    // |lambda R0(lambda) u|
};

// Trace of |lambda R0(lambda) u| along negative lambda.  On the periodic box
// the zero-frequency equilibrium component is an exact eigenvector, so data
// carrying it saturates at that component's mass instead of vanishing; the
// caller chooses u accordingly.
VanishingTrace lambda_vanishing_check(const StateVector& u,
                                      const std::vector<double>& lambdas);

// --- high-energy scan -------------------------------------------------------

struct HighEnergyScan {
  std::vector<double> y_grid;
  std::vector<double> norms;           // |R(iy) f| / |f|
  std::vector<double> weighted_norms;  // |(1 - Lap_v + v^2)^{1/2} R(iy) f| / |f|
  double slope = 0.0;                  // log-log fit of norms against y
  double weighted_slope = 0.0;
  // Largest y the discrete operator can place spectrum near: the transport
  // block at spatial frequency kappa reaches imaginary parts ~2 kappa sqrt(J)
  // on J velocity modes, so the limit is kappa_max sqrt(J).  Entries beyond
  // it clear the resolved flag.
  double resolution_limit = 0.0;
  bool resolved = true;
};

// Resolvent decay along the imaginary axis: solves at z = iy for each y and
// reports plain and velocity-smoothed relative norms with their log-log
// slopes.  The smoothing weight is (1 - Lap_v + |v|^2)^{1/2}, evaluated as a
// ladder quadratic form.
HighEnergyScan high_energy_scan(const StateVector& f, const Potential& pot,
                                const std::vector<double>& y_grid, double tol);

}  // namespace kfp
