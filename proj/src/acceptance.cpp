#include "kfp/acceptance.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kfp/constants.hpp"
#include "kfp/errors.hpp"
#include "kfp/evolve.hpp"
#include "kfp/fiber.hpp"
#include "kfp/green.hpp"
#include "kfp/phase_space.hpp"
#include "kfp/resolvent.hpp"

namespace kfp {
namespace {

constexpr double kPi = std::numbers::pi;

// Accumulates measured-vs-bound rows; any violated bound fails the criterion.
struct Checker {
  bool ok = true;
  std::vector<std::string> lines;

  static std::string fmt(const char* pattern, double a) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a);
    return buf;
  }

  static std::string fmt(const char* pattern, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
  }

  void upper(const std::string& what, double measured, double limit) {
    const bool good = measured <= limit;
    ok = ok && good;
    lines.push_back((good ? "  ok   " : "  FAIL ") + what +
                    fmt(": measured %.3e, bound %.3e", measured, limit));
  }

  void window(const std::string& what, double measured, double lo, double hi) {
    const bool good = measured >= lo && measured <= hi;
    ok = ok && good;
    lines.push_back((good ? "  ok   " : "  FAIL ") + what +
                    fmt(": measured %.6f, window [%g, ", measured, lo) +
                    fmt("%g]", hi));
  }

  void flag(const std::string& what, bool good) {
    ok = ok && good;
    lines.push_back((good ? "  ok   " : "  FAIL ") + what);
  }

  void note(const std::string& what) { lines.push_back("  --   " + what); }
};

StateVector random_smooth_state(const PhaseGrid& g, std::uint64_t seed,
                                double deg_damp, double kap_damp) {
  StateVector u = make_state(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const std::int64_t modes = g.n_modes();
  for (std::int64_t i = 0; i < g.size(); ++i) {
    std::int64_t a = i / modes;
    std::int64_t k = i % modes;
    int deg = 0;
    double kap2 = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) {
      deg += int(a % g.nv);
      const double kap = g.kappa(int(k % g.nx));
      kap2 += kap * kap;
      a /= g.nv;
      k /= g.nx;
    }
    const double damp = std::exp(-deg_damp * deg - kap_damp * kap2);
    u.coeffs[std::size_t(i)] = damp * Complex(nd(rng), nd(rng));
  }
  return u;
}

StateVector profile_state(const PhaseGrid& g, double (*profile)(double)) {
  std::vector<Complex> vals(std::size_t(g.size()), Complex(0, 0));
  for (int m = 0; m < g.nx; ++m)
    vals[std::size_t(m)] = Complex(profile(g.x_coord(m)), 0);
  return from_x_values(g, vals);
}

double gauss_profile(double x) { return std::exp(-0.5 * x * x); }
double odd_profile(double x) { return x * std::exp(-0.5 * x * x); }

Potential decaying_potential(int dim) {
  PotentialSpec spec;
  spec.family = PotentialSpec::Family::kPolynomialDecay;
  spec.amplitude = 0.3;
  spec.decay_rho = 6.0;
  return make_potential(spec, dim);
}

std::vector<double> log_points(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(lo * std::pow(hi / lo, double(i) / double(count - 1)));
  return out;
}

// --- criteria ---------------------------------------------------------------

void c1_constants(Checker& c) {
  double worst_odd = 0.0, worst_even = 0.0;
  for (const int n : {3, 5, 7, 9, 11})
    worst_odd = std::max(worst_odd, kfp_constants(n).identity_residual);
  for (const int n : {4, 6, 8, 10, 12})
    worst_even = std::max(worst_even, kfp_constants(n).identity_residual);
  c.upper("half-power pair product identity, n in {3..11} odd", worst_odd,
          1e-12);
  c.upper("log pair product identity, n in {4..12} even", worst_even, 1e-12);
}

void c2_fiber(Checker& c) {
  const int J = 64;
  double worst_eig = 0.0;
  for (const double xi : {0.0, 0.5, -0.5, 1.0, 1.25, -1.5, 1.5}) {
    Eigen::VectorXd x(1);
    x(0) = xi;
    const FiberOperator op = assemble_fiber(1, x, J);
    const auto ev = fiber_spectrum(op, 5);
    for (int l = 0; l < 5; ++l)
      worst_eig = std::max(
          worst_eig, std::abs(ev[std::size_t(l)] - Complex(l + xi * xi, 0)));
  }
  c.upper("five lowest eigenvalues vs l + xi^2 over |xi| <= 1.5", worst_eig,
          1e-8);

  Eigen::VectorXd x(1);
  x(0) = 0.5;
  std::vector<RieszProjection> pr;
  for (int l = 0; l <= 3; ++l) pr.push_back(riesz_projection(l, x, J));
  double worst_idem = 0.0, worst_cross = 0.0;
  for (int l = 0; l <= 3; ++l) {
    worst_idem = std::max(worst_idem, pr[std::size_t(l)].idempotency_defect);
    for (int m = 0; m <= 3; ++m)
      if (m != l)
        worst_cross = std::max(worst_cross, (pr[std::size_t(l)].mat *
                                             pr[std::size_t(m)].mat)
                                                .norm());
  }
  c.upper("projection idempotency at xi = 0.5, levels <= 3", worst_idem, 1e-8);
  c.upper("projection mutual annihilation at xi = 0.5", worst_cross, 1e-8);
  // the shifted-basis coefficients grow like e^{2 xi^2}, so the defect walks
  // up through the truncation floor as xi reaches the window edge
  double edge = 0.0;
  x(0) = 1.5;
  for (int l = 0; l <= 3; ++l)
    edge = std::max(edge, riesz_projection(l, x, J).idempotency_defect);
  c.note(Checker::fmt("idempotency defect at the window edge xi = 1.5: %.1e "
                      "(truncation-limited, reported only; %.0f basis modes)",
                      edge, double(J)));
}

void c3_green(Checker& c) {
  const auto grid = make_lambda_grid(1e-6, 1e-2, 24);
  const GreenExpansion e5 = expand_green_odd(5, 1.0, grid);
  const double a50 = 1.0 / (8.0 * kPi * kPi);
  const Complex a53(0.0, 1.0 / (24.0 * kPi * kPi));
  c.upper("dim 5 newtonian coefficient vs 1/(8 pi^2)",
          std::abs(e5.coeffs.at("a0") - Complex(a50, 0)), 1e-6);
  c.upper("dim 5 first correction vanishes (relative)",
          std::abs(e5.coeffs.at("a1")) / a50, 1e-7);
  c.upper("dim 5 half-power coefficient vs i/(24 pi^2) (relative)",
          std::abs(e5.coeffs.at("a3") - a53) / std::abs(a53), 1e-5);

  const GreenExpansion e4 = expand_green_even(4, 1.0, grid);
  const double c40 = -1.0 / (8.0 * kPi * kPi);
  const double d40 = 1.0 / (4.0 * kPi * kPi);
  c.upper("dim 4 log coefficient vs -1/(8 pi^2) (relative)",
          std::abs(e4.coeffs.at("c_log") - Complex(c40, 0)) / std::abs(c40),
          1e-4);
  c.upper("dim 4 newtonian coefficient vs 1/(4 pi^2)",
          std::abs(e4.coeffs.at("d0") - Complex(d40, 0)), 1e-6);
}

void c4_free_decay(Checker& c) {
  const std::vector<double> times = {20, 34, 58, 100, 141, 200};
  for (const int n : {4, 5}) {
    const GaussianProfile p{};
    const DecayReport rep = free_decay_radial(n, p, p, times);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double naive =
          std::pow(4.0 * kPi * times[i], -0.5 * n) * std::pow(2.0 * kPi, n);
      const double ratio = rep.pairings[i].real() / naive;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    const std::string tag = "dim " + std::to_string(n);
    c.window(tag + " decay ratio to the diffusive law, min", lo, 0.98, 1.02);
    c.window(tag + " decay ratio to the diffusive law, max", hi, 0.98, 1.02);
    c.flag(tag + " guard flags clean", rep.wrap_guard_ok && rep.tail_ok);
  }
}

void c5_low_energy(Checker& c) {
  const auto lam = default_lambda_grid();
  const GaussianProfile f1{0.5, 1.0, 0.0};
  const GaussianProfile g1{1.0, 1.0, 0.0};
  const GaussianProfile f2{0.7, 2.0, 0.0};
  const GaussianProfile g2{0.4, 1.0, 0.5};
  for (const int n : {5, 4}) {
    const std::string tag = "dim " + std::to_string(n);
    const ResolventFit fit = fit_low_energy_radial(n, f1, g1, lam);
    const double rel =
        std::abs(fit.leading_special / fit.predicted_special - 1.0);
    c.upper(tag + " special coefficient vs rank-one prediction (relative)",
            rel, 5e-2);
    const ResolventFit other = fit_low_energy_radial(n, f2, g2, lam);
    const Complex ratio = (fit.leading_special / fit.predicted_special) /
                          (other.leading_special / other.predicted_special);
    c.upper(tag + " rank-one pairing ratio across two data pairs (relative)",
            std::abs(ratio - 1.0), 5e-2);
  }
}

void c6_threshold(Checker& c) {
  const PhaseGrid g{1, 24.0, 512, 8};
  const Potential pot = decaying_potential(1);
  const ThresholdReport rep = threshold_identity_check(g, pot, {-1e-2, -1e-3});
  double worst = 0.0;
  for (const double r : rep.residuals) worst = std::max(worst, r);
  c.upper("threshold identity residual at shifts -1e-2, -1e-3", worst, 1e-6);
  c.upper("equilibrium kernel residual |P m| / |m|", rep.kernel_residual,
          1e-8);
}

void c7_perturbed_decay(Checker& c) {
  const PhaseGrid g{1, 48.0, 256, 24};
  const Potential pot = decaying_potential(1);
  const std::vector<double> times = {20, 26, 34, 45, 58, 76, 100};

  const StateVector f = profile_state(g, gauss_profile);
  const DecayReport rep = decay_scan(f, f, pot, times, {}, 1e-6);
  c.window("fitted decay exponent", rep.fitted_exponent, -0.53, -0.47);
  c.upper("amplitude vs (4 pi)^{-1/2} <f,m><m,g> (relative)",
          std::abs(rep.fitted_amplitude / rep.predicted_amplitude - 1.0),
          0.1);
  c.flag("guard flags clean", rep.wrap_guard_ok && rep.tail_ok);

  const StateVector fo = profile_state(g, odd_profile);
  const DecayReport orth = decay_scan(fo, fo, pot, times, {}, 1e-6);
  c.upper("equilibrium-orthogonal data decay exponent", orth.fitted_exponent,
          -0.75);
}

void c8_envelope(Checker& c) {
  const GammaEnvelope g = gamma_envelope(1e-2);
  const double ratio = g.gamma / (kPi * std::pow(1e-2, 4) / 3.0);
  // the ratio's leading deficit is exactly -t (the linear factor of theta),
  // so at t = 1e-2 this bound cannot hold for the envelope as defined; it is
  // asserted as stated and fails by construction
  c.window("envelope over (pi t^4 / 3) at t = 1e-2", ratio, 0.999, 1.001);
  c.note(Checker::fmt("deviation of that ratio is -t + O(t^2): measured "
                      "%.4e at t = %.0e, so the stated bound is unattainable",
                      ratio - 1.0, 1e-2));

  bool increasing = true;
  double prev = 0.0;
  for (int i = 1; i <= 10000; ++i) {
    const double val = gamma_envelope(1e-3 * i).gamma;
    increasing = increasing && val > prev;
    prev = val;
  }
  c.flag("envelope strictly increasing on (0, 10]", increasing);

  const double slope =
      (gamma_envelope(60.0).gamma - gamma_envelope(40.0).gamma) / 20.0;
  c.note(Checker::fmt("large-t slope of the envelope: %.6f  (2 pi = %.6f; "
                      "reported, no bound)",
                      slope, 2.0 * kPi));
}

void c9_high_energy(Checker& c) {
  const PhaseGrid g{1, 4.0, 4096, 64};
  const Potential pot = decaying_potential(1);
  const StateVector f = random_smooth_state(g, 101, 1.0, 1.0);
  const HighEnergyScan scan =
      high_energy_scan(f, pot, log_points(1e2, 1e4, 9), 1e-8);
  c.upper("log-log slope of |R(iy) f| over y in [1e2, 1e4]", scan.slope,
          -0.45);
  c.upper("smoothing-variant slope", scan.weighted_slope, -0.2);
  c.flag(Checker::fmt("scan stays below the resolution limit %.3e",
                      scan.resolution_limit),
         scan.resolved);
}

void c10_properties(Checker& c) {
  // accretivity identity on 100 random states
  double worst = 0.0;
  int trials = 0;
  for (const int dim : {1, 2}) {
    const PhaseGrid g{dim, 3.0, 8, 5};
    for (int t = 0; t < (dim == 1 ? 60 : 40); ++t, ++trials) {
      const StateVector u =
          random_smooth_state(g, 1000 * std::uint64_t(dim) + t, 0.0, 0.0);
      const Complex q = dot(apply_P0(u), u);
      double level_sum = 0.0;
      for (int a = 0; a < dim; ++a) {
        const StateVector au = apply_annihilate(u, a);
        level_sum += au.norm() * au.norm();
      }
      worst = std::max(worst, std::abs(q.real() - level_sum) /
                                  std::max(1.0, level_sum));
    }
  }
  c.upper("accretivity identity on " + std::to_string(trials) +
              " random states",
          worst, 1e-12);

  // contraction and semigroup law at integrator tolerance
  {
    const PhaseGrid g{1, 8.0, 64, 20};
    PotentialSpec spec;
    spec.family = PotentialSpec::Family::kPolynomialDecay;
    spec.amplitude = 0.5;
    spec.decay_rho = 4.0;
    const Potential pot = make_potential(spec, 1);
    const StateVector u = random_smooth_state(g, 7, 2.0, 0.25);
    const StateVector one = propagate(u, pot, 1.0, 1e-9);
    const StateVector two =
        propagate(propagate(u, pot, 0.5, 1e-9), pot, 0.5, 1e-9);
    double law = 0.0;
    for (std::size_t i = 0; i < one.coeffs.size(); ++i)
      law += std::norm(one.coeffs[i] - two.coeffs[i]);
    c.upper("semigroup law |S(1) - S(1/2)^2| / |u|", std::sqrt(law) / u.norm(),
            2e-7);
    bool contracting = true;
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
      const StateVector w = random_smooth_state(g, seed, 2.0, 0.25);
      contracting = contracting &&
                    propagate(w, pot, 2.5, 1e-8).norm() <=
                        (1.0 + 1e-6) * w.norm();
    }
    c.flag("contraction on 5 random states at t = 2.5", contracting);
  }

  // resolvent identity within ten solver tolerances
  {
    const PhaseGrid g{1, 12.0, 64, 12};
    const Potential pot = decaying_potential(1);
    const StateVector f = random_smooth_state(g, 41, 2.0, 0.25);
    const Complex z1{-0.5, 0.0};
    const Complex z2{-1.0, 0.3};
    const double tol = 1e-9;
    const StateVector r1 = solve_resolvent(f, pot, z1, tol);
    const StateVector r2 = solve_resolvent(f, pot, z2, tol);
    const StateVector r12 = solve_resolvent(r2, pot, z1, tol);
    double diff = 0.0;
    for (std::size_t i = 0; i < r1.coeffs.size(); ++i)
      diff += std::norm(r1.coeffs[i] - r2.coeffs[i] -
                        (z1 - z2) * r12.coeffs[i]);
    c.upper("resolvent identity residual over 10 x solver tol",
            std::sqrt(diff) / f.norm(), 10.0 * tol);
  }

  // vanishing of the shifted free resolvent on equilibrium-orthogonal data
  {
    const PhaseGrid g{1, 16.0, 64, 8};
    const StateVector u = profile_state(g, odd_profile);
    const VanishingTrace vt =
        lambda_vanishing_check(u, {-1e-1, -1e-2, -1e-3, -1e-4, -1e-5});
    bool decreasing = true;
    for (std::size_t i = 1; i < vt.norms.size(); ++i)
      decreasing = decreasing && vt.norms[i] < vt.norms[i - 1];
    c.flag("|lambda R0(lambda) u| decreasing over lambda = -1e-1 .. -1e-5",
           decreasing);
    c.upper("trace contraction across the window",
            vt.norms.back() / vt.norms.front(), 1e-2);
  }

  // branch flip inflates the fit residual
  {
    const auto lam = default_lambda_grid();
    const GaussianProfile f1{0.5, 1.0, 0.0};
    const GaussianProfile g1{1.0, 1.0, 0.0};
    for (const int n : {1, 3}) {
      const ResolventFit fit = fit_low_energy_radial(n, f1, g1, lam);
      const double inflation = fit.residual_flipped /
                               std::max(fit.residual_pinned, 1e-300);
      c.flag(Checker::fmt("dim %.0f branch-flip residual inflation %.1e >= "
                          "1e3",
                          double(n), inflation),
             inflation >= 1e3);
    }
  }
}

CriterionResult run_one(int id, const std::string& name,
                        void (*body)(Checker&)) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const Error& e) {
    c.flag(std::string("uncaught guard: ") + e.what(), false);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
  r.passed = c.ok;
  r.lines = std::move(c.lines);
  return r;
}

}  // namespace

bool AcceptanceOutcome::all_passed() const {
  for (const auto& cr : criteria)
    if (!cr.passed) return false;
  return true;
}

AcceptanceOutcome run_acceptance(bool quick) {
  struct Entry {
    int id;
    const char* name;
    void (*body)(Checker&);
    bool in_quick;
  };
  static const Entry entries[] = {
      {1, "constants product identities", c1_constants, true},
      {2, "fiber eigenvalues and spectral projections", c2_fiber, true},
      {3, "kernel expansion coefficients", c3_green, true},
      {4, "free decay against the diffusive law", c4_free_decay, false},
      {5, "free low-energy fit, rank-one structure", c5_low_energy, false},
      {6, "perturbed threshold identities", c6_threshold, true},
      {7, "perturbed decay law", c7_perturbed_decay, false},
      {8, "dispersive envelope", c8_envelope, true},
      {9, "high-energy resolvent bound", c9_high_energy, false},
      {10, "operator property suites", c10_properties, true},
  };
  AcceptanceOutcome out;
  out.quick = quick;
  for (const Entry& e : entries) {
    if (quick && !e.in_quick) continue;
    out.criteria.push_back(run_one(e.id, e.name, e.body));
  }
  return out;
}

}  // namespace kfp
