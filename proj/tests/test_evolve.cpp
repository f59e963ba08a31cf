#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/evolve.hpp"
#include "kfp/fiber.hpp"
#include "kfp/phase_space.hpp"

using kfp::Complex;
using kfp::DecayReport;
using kfp::GaussianProfile;
using kfp::PhaseGrid;
using kfp::Potential;
using kfp::PotentialSpec;
using kfp::StateVector;

namespace {

constexpr double kPi = std::numbers::pi;

// the ground-to-ground frequency response of the free evolution is exactly
// exp(-spread(t) xi^2)
double spread_of(double t) { return t - 1.0 + std::exp(-t); }

Potential zero_potential(int dim) {
  return kfp::make_potential(PotentialSpec{}, dim);
}

Potential poly_potential(int dim, double c, double rho) {
  PotentialSpec spec;
  spec.family = PotentialSpec::Family::kPolynomialDecay;
  spec.amplitude = c;
  spec.decay_rho = rho;
  return kfp::make_potential(spec, dim);
}

// Random data damped in degree and frequency.  The damping must be strong
// enough that transport cannot pile mass into the top Hermite decile, where
// propagate's trust check would reject the result.
StateVector random_smooth_state(const PhaseGrid& g, std::uint64_t seed,
                                double deg_damp = 2.0,
                                double kap_damp = 0.25) {
  StateVector u = kfp::make_state(g);
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

// profile(x) in position tensored with the ground Hermite state (dim 1)
StateVector profile_state(const PhaseGrid& g, double (*profile)(double)) {
  std::vector<Complex> vals(std::size_t(g.size()), Complex(0, 0));
  for (int m = 0; m < g.nx; ++m)
    vals[std::size_t(m)] = Complex(profile(g.x_coord(m)), 0);
  return kfp::from_x_values(g, vals);
}

double gauss_profile(double x) { return std::exp(-0.5 * x * x); }
double odd_profile(double x) { return x * std::exp(-0.5 * x * x); }

// dense per-mode evolution, valid for the free operator in dimension one
StateVector exact_free_evolution(const StateVector& u, double t) {
  StateVector out = kfp::make_state(u.grid);
  const int J = u.grid.nv;
  const int nx = u.grid.nx;
  for (int p = 0; p < nx; ++p) {
    Eigen::VectorXcd c(J);
    for (int j = 0; j < J; ++j)
      c(j) = u.coeffs[std::size_t(j) * std::size_t(nx) + std::size_t(p)];
    const Eigen::MatrixXcd prop =
        (-t * kfp::fiber_matrix_1d(u.grid.transport_kappa(p), J)).exp();
    const Eigen::VectorXcd w = prop * c;
    for (int j = 0; j < J; ++j)
      out.coeffs[std::size_t(j) * std::size_t(nx) + std::size_t(p)] = w(j);
  }
  return out;
}

double diff_norm(const StateVector& a, const StateVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i)
    acc += std::norm(a.coeffs[i] - b.coeffs[i]);
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("free propagation matches the dense per-mode exponential") {
  const PhaseGrid g{1, 8.0, 16, 10};
  const Potential free = zero_potential(1);
  const StateVector u = random_smooth_state(g, 41);
  const double t = 0.3;
  const StateVector exact = exact_free_evolution(u, t);
  const StateVector got = kfp::propagate(u, free, t, 1e-10);
  CHECK(diff_norm(got, exact) <= 1e-8 * u.norm());
}

TEST_CASE("tolerance budget controls the integrator error") {
  // undamped data on a tall ladder cannot be compressed into one Krylov
  // space, so the step controller, not subspace exactness, sets the
  // accuracy; by t = 3 the dissipation has emptied the top decile again
  const PhaseGrid g{1, 8.0, 16, 48};
  const Potential free = zero_potential(1);
  const StateVector u = random_smooth_state(g, 42, 0.0, 0.0);
  const double t = 3.0;
  const StateVector exact = exact_free_evolution(u, t);
  std::vector<double> errs;
  for (const double tol : {1e-4, 1e-7, 1e-10}) {
    const StateVector got = kfp::propagate(u, free, t, tol);
    errs.push_back(diff_norm(got, exact));
    CHECK(errs.back() <= 30.0 * tol * u.norm());
  }
  CHECK(errs[2] < errs[0]);
}

TEST_CASE("equilibrium state is invariant under propagation") {
  const PhaseGrid g{1, 24.0, 512, 8};
  const Potential pot = poly_potential(1, 0.3, 6.0);
  const StateVector m = kfp::maxwell_state(g, pot);
  const double resid = kfp::apply_P(m, pot).norm();
  REQUIRE(resid <= 1e-9 * m.norm());
  const StateVector evolved = kfp::propagate(m, pot, 5.0, 1e-9);
  CHECK(diff_norm(evolved, m) <= 5.0 * resid + 1e-7 * m.norm());
}

TEST_CASE("semigroup composition and contraction") {
  const PhaseGrid g{1, 8.0, 64, 20};
  const Potential pot = poly_potential(1, 0.5, 4.0);
  const StateVector u = random_smooth_state(g, 7);

  const StateVector one = kfp::propagate(u, pot, 1.0, 1e-9);
  const StateVector half = kfp::propagate(u, pot, 0.5, 1e-9);
  const StateVector two = kfp::propagate(half, pot, 0.5, 1e-9);
  CHECK(diff_norm(one, two) <= 2e-7 * u.norm());

  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const StateVector w = random_smooth_state(g, seed);
    const double before = w.norm();
    const double after = kfp::propagate(w, pot, 2.5, 1e-8).norm();
    CHECK(after <= (1.0 + 1e-6) * before);
    // past the velocity relaxation time generic data has decayed visibly
    CHECK(after < 0.9 * before);
  }
}

TEST_CASE("propagation in dimension two") {
  const PhaseGrid g{2, 6.0, 16, 8};
  const Potential pot = poly_potential(2, 0.4, 4.0);
  const StateVector u = random_smooth_state(g, 11, 2.0, 1.0);
  const StateVector one = kfp::propagate(u, pot, 0.5, 1e-8);
  CHECK(one.norm() <= (1.0 + 1e-6) * u.norm());
  const StateVector a = kfp::propagate(u, pot, 0.25, 1e-9);
  const StateVector b = kfp::propagate(a, pot, 0.25, 1e-9);
  const StateVector c = kfp::propagate(u, pot, 0.5, 1e-9);
  CHECK(diff_norm(b, c) <= 2e-7 * u.norm());
}

TEST_CASE("propagation guards") {
  const PhaseGrid g{1, 4.0, 16, 8};
  const Potential free = zero_potential(1);
  const StateVector u = random_smooth_state(g, 3);
  // horizon is kWrapBeta * L^2 = 0.8 here
  CHECK_THROWS_AS(kfp::propagate(u, free, 1.0, 1e-8), kfp::ConfigError);
  CHECK_THROWS_AS(kfp::propagate(u, free, 0.0, 1e-8), kfp::ConfigError);
  CHECK_THROWS_AS(kfp::propagate(u, free, -1.0, 1e-8), kfp::ConfigError);

  const StateVector f = profile_state(g, gauss_profile);
  CHECK_THROWS_AS(kfp::decay_scan(f, f, free, {}), kfp::ConfigError);
  CHECK_THROWS_AS(kfp::decay_scan(f, f, free, {-1.0}), kfp::ConfigError);
  CHECK_THROWS_AS(kfp::decay_scan(f, f, free, {0.5, 2.0}), kfp::ConfigError);

  // a strong kick on a short Hermite ladder piles mass into the top decile
  const Potential strong = poly_potential(1, 3.0, 2.0);
  const PhaseGrid tiny{1, 4.0, 32, 4};
  const StateVector w = profile_state(tiny, gauss_profile);
  CHECK_THROWS_AS(kfp::propagate(w, strong, 0.5, 1e-8), kfp::TrustError);
}

TEST_CASE("scan below the fit window reports pairings without a fit") {
  const PhaseGrid g{1, 8.0, 32, 12};
  const Potential free = zero_potential(1);
  const StateVector f = profile_state(g, gauss_profile);
  const DecayReport rep = kfp::decay_scan(f, f, free, {0.5, 1.0, 2.0});
  REQUIRE(rep.pairings.size() == 3);
  CHECK(std::isnan(rep.fitted_exponent));
  for (std::size_t i = 0; i < 3; ++i) {
    const double expect =
        std::sqrt(kPi / (spread_of(rep.times[i]) + 1.0));
    CHECK(std::abs(rep.pairings[i] - Complex(expect, 0)) <= 1e-6);
  }
}

TEST_CASE("free decay on the grid follows the rank-one law") {
  const PhaseGrid g{1, 48.0, 256, 16};
  const Potential free = zero_potential(1);
  const StateVector f = profile_state(g, gauss_profile);
  const std::vector<double> times = {20.0, 30.0, 45.0, 67.0, 100.0};
  const DecayReport rep = kfp::decay_scan(f, f, free, times, {}, 1e-7);

  CHECK(rep.wrap_guard_ok);
  CHECK(rep.tail_ok);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expect = std::sqrt(kPi / (spread_of(times[i]) + 1.0));
    CHECK(std::abs(rep.pairings[i] - Complex(expect, 0)) <=
          1e-4 * expect);
  }
  CHECK(rep.fitted_exponent == doctest::Approx(-0.5).epsilon(0.04));
  // <f, M> = sqrt(2 pi) for the unit Gaussian, so the amplitude is sqrt(pi)
  CHECK(std::abs(rep.predicted_amplitude - Complex(std::sqrt(kPi), 0)) <=
        1e-6);
  CHECK(std::abs(rep.fitted_amplitude / rep.predicted_amplitude - 1.0) <=
        0.02);
}

TEST_CASE("perturbed decay keeps the exponent and rank-one amplitude") {
  const PhaseGrid g{1, 48.0, 256, 24};
  const Potential pot = poly_potential(1, 0.3, 6.0);
  const StateVector f = profile_state(g, gauss_profile);
  const std::vector<double> times = {20.0, 30.0, 45.0, 67.0, 100.0};
  const DecayReport rep = kfp::decay_scan(f, f, pot, times, {}, 1e-6);

  CHECK(rep.wrap_guard_ok);
  CHECK(rep.tail_ok);
  CHECK(rep.fitted_exponent == doctest::Approx(-0.5).epsilon(0.06));
  CHECK(std::abs(rep.fitted_amplitude / rep.predicted_amplitude - 1.0) <=
        0.1);
}

TEST_CASE("data orthogonal to the equilibrium decays faster") {
  const PhaseGrid g{1, 48.0, 256, 24};
  const Potential pot = poly_potential(1, 0.3, 6.0);
  const StateVector f = profile_state(g, odd_profile);
  const StateVector m = kfp::maxwell_state(g, pot);
  CHECK(std::abs(kfp::dot(f, m)) <= 1e-10 * f.norm() * m.norm());

  const std::vector<double> times = {20.0, 30.0, 45.0, 67.0, 100.0};
  const DecayReport rep = kfp::decay_scan(f, f, pot, times, {}, 1e-6);
  CHECK(rep.fitted_exponent <= -0.75);
  CHECK(std::abs(rep.predicted_amplitude) <= 1e-9);
}

TEST_CASE("radial free pairing matches the closed form") {
  const std::vector<double> times = {0.0, 0.5, 2.0, 20.0, 50.0, 100.0};
  for (const int n : {1, 3, 4}) {
    const GaussianProfile p{};  // b = 1/2, plain Gaussian
    const DecayReport rep = kfp::free_decay_radial(n, p, p, times);
    CHECK(rep.wrap_guard_ok);
    CHECK(rep.tail_ok);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double a = spread_of(times[i]) + 1.0;
      const double expect = std::pow(kPi / a, 0.5 * n);
      CHECK(std::abs(rep.pairings[i] - Complex(expect, 0)) <=
            1e-5 * expect + 1e-12);
    }
    CHECK(rep.fitted_exponent == doctest::Approx(-0.5 * n).epsilon(0.03));
    CHECK(std::abs(rep.fitted_amplitude / rep.predicted_amplitude - 1.0) <=
          0.02);
  }
}

TEST_CASE("radial ratio to the diffusive normalization stays near one") {
  // the pairing over (4 pi t)^{-n/2} <f, M><M, g> for matched unit data
  const std::vector<double> times = {20.0, 50.0, 100.0, 200.0};
  for (const int n : {4, 5}) {
    const GaussianProfile p{};
    const DecayReport rep = kfp::free_decay_radial(n, p, p, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double t = rep.times[i];
      const double naive =
          std::pow(4.0 * kPi * t, -0.5 * n) * std::pow(2.0 * kPi, double(n));
      const double ratio = rep.pairings[i].real() / naive;
      CHECK(ratio >= 0.98);
      CHECK(ratio <= 1.02);
    }
  }
}

TEST_CASE("mismatched profile widths keep the closed form") {
  const std::vector<double> times = {20.0, 30.0, 45.0, 67.0, 100.0};
  const GaussianProfile wide{1.0, 1.0, 0.0};
  const DecayReport rep = kfp::free_decay_radial(4, wide, wide, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double a = spread_of(times[i]) + 2.0;
    const double expect = 16.0 * kPi * kPi / (a * a);
    CHECK(std::abs(rep.pairings[i] - Complex(expect, 0)) <= 1e-5 * expect);
  }
  // finite-time bias of the window amplitude for width-2 data, computed in
  // closed form from the same pairing model
  double bias = 0.0;
  for (const double t : times) {
    const double a = spread_of(t) + 2.0;
    bias += (t / a) * (t / a);
  }
  bias /= double(times.size());
  const double ratio =
      (rep.fitted_amplitude / rep.predicted_amplitude).real();
  CHECK(ratio == doctest::Approx(bias).epsilon(1e-3));
}

TEST_CASE("radially orthogonal data decays one power faster") {
  const std::vector<double> times = {20.0, 30.0, 45.0, 67.0, 100.0};
  const GaussianProfile orth{0.5, 0.0, 1.0};
  const GaussianProfile plain{};
  const DecayReport rep = kfp::free_decay_radial(1, orth, plain, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double a = spread_of(times[i]) + 1.0;
    const double expect = 0.5 * std::sqrt(kPi) * std::pow(a, -1.5);
    CHECK(std::abs(rep.pairings[i] - Complex(expect, 0)) <= 1e-5 * expect);
  }
  CHECK(rep.fitted_exponent == doctest::Approx(-1.5).epsilon(0.03));
  CHECK(std::abs(rep.predicted_amplitude) == 0.0);
}

TEST_CASE("radial route guards") {
  const GaussianProfile p{};
  CHECK_THROWS_AS(kfp::free_decay_radial(0, p, p, {1.0}), kfp::ConfigError);
  CHECK_THROWS_AS(kfp::free_decay_radial(1, p, p, {1.0}, 4),
                  kfp::ConfigError);
  CHECK_THROWS_AS(kfp::free_decay_radial(1, p, p, {}), kfp::ConfigError);
  CHECK_THROWS_AS(kfp::free_decay_radial(1, p, p, {-1.0}),
                  kfp::ConfigError);
  const GaussianProfile bad{0.0, 1.0, 0.0};
  CHECK_THROWS_AS(kfp::free_decay_radial(1, bad, p, {1.0}),
                  kfp::ConfigError);
}
