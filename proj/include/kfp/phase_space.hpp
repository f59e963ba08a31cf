#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kfp/special.hpp"

namespace kfp {

// Hermite-tail mass above this fraction of the total marks a run untrusted.
inline constexpr double kTailThreshold = 1e-6;

// Periodic box [-L, L]^dim in position crossed with a tensor Hermite basis of
// degree < nv per velocity axis.  nx is the number of Fourier modes per axis.
struct PhaseGrid {
  int dim = 1;
  double box_half_width = 24.0;
  int nx = 64;
  int nv = 8;

  // Throws ConfigError unless dim in {1,2,3}, L > 0, nx a power of two >= 8,
  // nv >= 4, and the coefficient tensor fits in the desk-scale memory cap.
  void validate() const;

  std::int64_t n_modes() const;    // nx^dim
  std::int64_t n_hermite() const;  // nv^dim
  std::int64_t size() const;       // n_modes * n_hermite
  double dx() const { return 2.0 * box_half_width / nx; }

  // Signed integer frequency for storage index p in [0, nx).
  int mode_number(int p) const { return p < nx / 2 ? p : p - nx; }
  // Continuous frequency pi*k/L of storage index p.
  double kappa(int p) const;
  // Frequency carried by the transport term.  The top mode of an even grid
  // is its own conjugate partner, so its multiplier must vanish for
  // i*kappa*(ladder) to map real-valued states to real-valued states.
  double transport_kappa(int p) const { return 2 * p == nx ? 0.0 : kappa(p); }
  // Collocation coordinate -L + p*dx of storage index p.
  double x_coord(int p) const { return -box_half_width + p * dx(); }

  bool operator==(const PhaseGrid&) const = default;
};

// Coefficient tensor c[alpha][k].  Hermite multi-indices are flattened
// row-major with axis 0 slowest (stride nv^(dim-1-a) for axis a); within each
// Hermite row the Fourier modes are stored row-major in FFT order, axis dim-1
// contiguous.  The represented function is
//   u(x, v) = sum_{alpha,k} c[alpha][k] (2L)^{-dim/2} e^{i pi k.x / L} phi_alpha(v).
struct StateVector {
  PhaseGrid grid;
  std::vector<Complex> coeffs;

  double norm() const;  // ell^2 norm of coeffs, fixed-order accumulation
  // |c|^2 mass carried by Hermite rows whose largest per-axis degree lies in
  // the top decile [nv - max(1, nv/10), nv), as a fraction of the total.
  double tail_fraction() const;
};

// Zero-initialized state on a validated grid.
StateVector make_state(const PhaseGrid& grid);

// Pairing, conjugate-linear in the second argument: sum_i f_i conj(g_i).
Complex dot(const StateVector& f, const StateVector& g);

using ScalarField = std::function<double(std::span<const double>)>;
using VectorField =
    std::function<void(std::span<const double>, std::span<double>)>;

struct PotentialSpec {
  enum class Family { kZero, kPolynomialDecay, kCompactBump };
  Family family = Family::kZero;
  double amplitude = 0.0;
  // Decay rate rho for the polynomial family V = c (1 + |x - x0|^2)^(-rho/2);
  // reused as the support radius for the compact bump family.
  double decay_rho = 0.0;
  std::vector<double> center;  // empty means the origin
};

struct Potential {
  PotentialSpec spec;
  ScalarField value;
  VectorField gradient;
  // Grid-maximized estimate of sup_x <x>^rho (|V| + <x>|grad V|), the decay
  // constant of the short-range class (radial line scan; exact for centered
  // radial families, an estimate otherwise).  Zero for the zero family.
  double ass1_constant = 0.0;
};

Potential make_potential(const PotentialSpec& spec, int dim);

// Local equilibrium e^{-V/2} phi_0^{(x) dim}(v): only the alpha = 0 Hermite row
// is populated, with the Fourier coefficients of e^{-V(x)/2}.
StateVector maxwell_state(const PhaseGrid& grid, const Potential& pot);

// Free kinetic operator: Hermite number operator plus transport, the latter
// acting as (i kappa_a) x (ladder in alpha_a) per axis.
StateVector apply_P0(const StateVector& u);
// Collision-less forcing -grad V . grad_v: pointwise multiplication in x
// (via forward/inverse FFT) of the velocity-derivative ladder per axis.
StateVector apply_W(const StateVector& u, const Potential& pot);
StateVector apply_P(const StateVector& u, const Potential& pot);

// One-axis ladder primitives and diagnostics.  annihilate lowers the axis
// degree (out[b] = sqrt(b_a + 1) c[b + e_a]), create raises it.
StateVector apply_annihilate(const StateVector& u, int axis);
StateVector apply_create(const StateVector& u, int axis);
StateVector apply_number(const StateVector& u);
// Pointwise real multiplier in frequency: mult receives the kappa vector.
StateVector apply_fourier_multiplier(const StateVector& u,
                                     const ScalarField& mult);
// Pointwise <x>^s = (1 + |x|^2)^(s/2) on the fundamental domain.
StateVector apply_x_weight(const StateVector& u, double s);
// v -> -v parity: c_alpha -> (-1)^|alpha| c_alpha.  Conjugating apply_P by
// this flip yields the adjoint.
StateVector velocity_flip(const StateVector& u);

// Collocation values per Hermite row (same layout as coeffs; x replaces k).
// Unitary up to the trapezoid measure: sum |coeffs|^2 = dx^dim sum |values|^2
// for band-limited data.
std::vector<Complex> x_values(const StateVector& u);
StateVector from_x_values(const PhaseGrid& grid,
                          const std::vector<Complex>& values);

struct WeightSpec {
  double r = 0.0;  // Sobolev index; must be an even nonnegative integer here
  double s = 0.0;  // spatial weight exponent
};

// <(x)^s Lambda^r f, g> where Lambda^2 = 1 + <D_v>^2 + |v|^2 + <D_x>^(2/3),
// the anisotropic weight underlying the operator topology: the x part is a
// Fourier multiplier, the v part pure ladder algebra.
Complex weighted_pair(const StateVector& f, const StateVector& g,
                      const WeightSpec& w);

// Binary checkpoint: magic "KFPSTATE", u32 version = 1, u32 dim, u32 nx,
// u32 nv, f64 box_half_width, then coeffs as row-major complex doubles,
// little-endian throughout.
void save_state(const std::string& path, const StateVector& u);
StateVector load_state(const std::string& path);

// "key = value" lines; '#' and ';' start comments; unknown keys are kept.
std::map<std::string, std::string> load_config(const std::string& path);
PhaseGrid grid_from_config(const std::map<std::string, std::string>& kv);
PotentialSpec potential_from_config(
    const std::map<std::string, std::string>& kv);

}  // namespace kfp
