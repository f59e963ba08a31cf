#pragma once

#include <complex>
#include <vector>

namespace kfp {

using Complex = std::complex<double>;

// Probabilists'-normalization Hermite polynomials F_j and the L2-normalized
// Hermite functions phi_j = (j! sqrt(2*pi))^{-1/2} e^{-s^2/4} F_j(s),
// orthonormal for the plain Lebesgue measure ds.

// F_j(s) by the three-term recurrence F_{j+1} = s F_j - j F_{j-1}.
Complex hermite_poly(int j, Complex s);
double hermite_poly(int j, double s);

// Largest |Im s| accepted by hermite_fn; covers shifts v + 2i*xi with |xi| <= 4.
inline constexpr double kHermiteImagWindow = 8.0;

// phi_j(s), valid for complex s with |Im s| <= kHermiteImagWindow (the
// e^{(Im s)^2/4} factor otherwise amplifies roundoff past single-digit
// accuracy and eventually overflows). Throws NumericError outside the window.
Complex hermite_fn(int j, Complex s);
double hermite_fn(int j, double s);

// phi_0..phi_jmax at one point via the normalized recurrence
// phi_{j+1} = (s phi_j - sqrt(j) phi_{j-1}) / sqrt(j+1).
void hermite_fn_all(int jmax, Complex s, std::vector<Complex>& out);
void hermite_fn_all(int jmax, double s, std::vector<double>& out);

// phihat_j = phi_j * e^{s^2/4} (same recurrence, Gaussian removed).
// Polynomially bounded on the real axis; the building block for integrands
// against the Gauss-Hermite weight.
void hermite_fn_scaled_all(int jmax, Complex s, std::vector<Complex>& out);

// Nodes and weights for integrals against the weight e^{-s^2/2} on R.
struct HermiteBasis1D {
  int max_degree = 0;                // node count m; rule exact to degree 2m-1
  std::vector<double> quad_nodes;
  std::vector<double> quad_weights;  // positive, summing to sqrt(2*pi)
};

// Largest stable node count: beyond this the extreme-node weights underflow
// and the Jacobi eigenproblem loses the weight ratio.
inline constexpr int kGaussHermiteMaxNodes = 256;

// Rule of m nodes: Jacobi-matrix eigenvalues for the abscissae, Christoffel
// function for the weights (eigenvector first components lose the extreme
// weights below machine epsilon). Throws ConfigError for m < 1 or m beyond
// the stability ceiling.
HermiteBasis1D gauss_hermite(int m);

// Series/asymptotic crossover for hankel_h1 at |w| = max(this, 2*nu).
inline constexpr double kHankelSwitchRadius = 10.0;

// H^(1)_nu(w) for integer or half-integer nu >= 0 and Im w >= 0, w != 0.
// Power series (with the log series at integer nu) below the switch radius,
// large-argument asymptotic expansion above it. Throws ConfigError for
// unsupported nu or w = 0.
//
// Accuracy degradation zone: J + iY cancels like e^{2 Im w}, so relative
// accuracy near the switch radius decays from ~1e-12 (real axis) to ~1e-6
// (purely imaginary w, |w| ~ 10). Small |w| is unaffected.
Complex hankel_h1(double nu, Complex w);

// The two integer-order branches, exposed so the overlap band around the
// switch radius can be cross-checked; hankel_h1 dispatches between them.
Complex hankel_h1_series(int nu, Complex w);
Complex hankel_h1_asymptotic(double nu, Complex w);

// k!! with (-1)!! = 0!! = 1. Throws ConfigError for k < -1 or k > 33
// (signed-64-bit ceiling).
long long double_factorial(int k);

}  // namespace kfp
