#include "kfp/evolve.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kfp/errors.hpp"
#include "kfp/fiber.hpp"
#include "kfp/quadrature.hpp"

namespace kfp {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kKrylovDim = 30;

void check_wrap(double t, const PhaseGrid& g) {
  const double horizon = kWrapBeta * g.box_half_width * g.box_half_width;
  if (t > horizon)
    throw ConfigError("time horizon violates the wrap-around guard");
}

// Arnoldi factorization of the generator at the current state; reused across
// step-size rejections since only the step length changes the projection.
struct Arnoldi {
  std::vector<StateVector> basis;
  Eigen::MatrixXcd h;
  int mdim = 0;
  bool breakdown = false;
};

Arnoldi build_arnoldi(const StateVector& w, const Potential& pot,
                      double beta) {
  const int m = int(std::min<std::int64_t>(kKrylovDim, w.grid.size()));
  Arnoldi arn;
  arn.basis.reserve(std::size_t(m) + 1);
  StateVector v0 = w;
  for (Complex& c : v0.coeffs) c /= beta;
  arn.basis.push_back(std::move(v0));

  arn.h = Eigen::MatrixXcd::Zero(m + 1, m);
  arn.mdim = m;
  for (int j = 0; j < m; ++j) {
    StateVector z = apply_P(arn.basis[std::size_t(j)], pot);
    for (int i = 0; i <= j; ++i) {
      const Complex hij = dot(z, arn.basis[std::size_t(i)]);
      arn.h(i, j) = hij;
      for (std::size_t p = 0; p < z.coeffs.size(); ++p)
        z.coeffs[p] -= hij * arn.basis[std::size_t(i)].coeffs[p];
    }
    const double hn = z.norm();
    arn.h(j + 1, j) = hn;
    if (hn <= 1e-14 * beta) {
      arn.mdim = j + 1;
      arn.breakdown = true;
      break;
    }
    for (Complex& c : z.coeffs) c /= hn;
    arn.basis.push_back(std::move(z));
  }
  return arn;
}

struct KrylovStep {
  StateVector result;
  double error;
};

// Evaluate e^{-tau P} w from the factorization, with the residual-based
// error estimate integrated over the step.
KrylovStep arnoldi_apply(const Arnoldi& arn, const PhaseGrid& grid,
                         double tau, double beta) {
  const Eigen::MatrixXcd hm = arn.h.topLeftCorner(arn.mdim, arn.mdim);
  const Eigen::VectorXcd y_full = (-tau * hm).exp().col(0);
  const Eigen::VectorXcd y_half = (-0.5 * tau * hm).exp().col(0);

  StateVector out = make_state(grid);
  for (int j = 0; j < arn.mdim; ++j) {
    const Complex c = beta * y_full(j);
    const std::vector<Complex>& src = arn.basis[std::size_t(j)].coeffs;
    for (std::size_t p = 0; p < out.coeffs.size(); ++p)
      out.coeffs[p] += c * src[p];
  }

  double err = 0.0;
  if (!arn.breakdown) {
    const double hnext = arn.h(arn.mdim, arn.mdim - 1).real();
    const double ylast = std::max(std::abs(y_full(arn.mdim - 1)),
                                  std::abs(y_half(arn.mdim - 1)));
    err = beta * tau * hnext * ylast;
  }
  return {std::move(out), err};
}

// Least squares of log|values| against log t restricted to the fit window.
// Returns the slope, or NaN when no sample time reaches the window; throws
// when samples land in the window but span under half a decade.
double fit_window_slope(const std::vector<double>& times,
                        const std::vector<Complex>& values, double t_hi,
                        std::vector<std::size_t>& window) {
  window.clear();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= kFitWindowMin && times[i] <= t_hi &&
        std::abs(values[i]) > 0)
      window.push_back(i);
  }
  if (window.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (window.size() < 2 ||
      std::log10(times[window.back()] / times[window.front()]) < 0.5)
    throw ConfigError("decay fit window spans less than half a decade");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const std::size_t i : window) {
    const double x = std::log(times[i]);
    const double y = std::log(std::abs(values[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nw = double(window.size());
  return (nw * sxy - sx * sy) / (nw * sxx - sx * sx);
}

Complex window_amplitude(const std::vector<double>& times,
                         const std::vector<Complex>& values,
                         const std::vector<std::size_t>& window, int dim) {
  if (window.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  Complex acc(0, 0);
  for (const std::size_t i : window)
    acc += values[i] * std::pow(times[i], 0.5 * dim);
  return acc / double(window.size());
}

}  // namespace

double profile_hat(const GaussianProfile& p, int n, double r) {
  return (p.c0 + p.c2 * r * r) * std::pow(2.0 * p.b, 0.5 * n) *
         std::exp(-p.b * r * r);
}

StateVector propagate(const StateVector& u, const Potential& pot, double t,
                      double tol) {
  if (!(t > 0)) throw ConfigError("propagation time must be positive");
  check_wrap(t, u.grid);
  const double beta0 = u.norm();
  if (beta0 == 0.0) return make_state(u.grid);

  StateVector w = u;
  double remaining = t;
  double tau = std::min(t, 0.1);
  const double budget_rate = tol * beta0 / t;  // absolute error per unit time
  while (remaining > 1e-14 * t) {
    const double beta = w.norm();
    if (beta == 0.0) break;
    const Arnoldi arn = build_arnoldi(w, pot, beta);
    tau = std::min(tau, remaining);
    for (;;) {
      KrylovStep step = arnoldi_apply(arn, u.grid, tau, beta);
      if (step.error <= budget_rate * tau || arn.breakdown) {
        w = std::move(step.result);
        remaining -= tau;
        if (step.error < 0.1 * budget_rate * tau) tau *= 1.4;
        break;
      }
      tau *= 0.5;
      if (tau < 1e-10 * t)
        throw NumericError("exponential integrator step-size collapse");
    }
  }
  const double tail = w.tail_fraction();
  if (tail > kTailThreshold)
    throw TrustError("Hermite tail mass " + std::to_string(tail) +
                     " exceeds the trust threshold after propagation");
  return w;
}

DecayReport decay_scan(const StateVector& f, const StateVector& g,
                       const Potential& pot, const std::vector<double>& times,
                       const WeightSpec& weight, double tol) {
  if (times.empty()) throw ConfigError("decay scan needs at least one time");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  if (!(ts.front() > 0)) throw ConfigError("decay times must be positive");
  check_wrap(ts.back(), f.grid);

  DecayReport rep;
  rep.dim = f.grid.dim;
  rep.potential = pot.spec;
  rep.times = ts;
  rep.wrap_guard_ok = true;
  rep.tail_ok = true;

  StateVector cur = f;
  double t_cur = 0.0;
  const double tol_leg = tol / double(ts.size());
  for (const double t : ts) {
    if (t > t_cur) cur = propagate(cur, pot, t - t_cur, tol_leg);
    t_cur = t;
    if (cur.tail_fraction() > kTailThreshold) rep.tail_ok = false;
    rep.pairings.push_back(weighted_pair(cur, g, weight));
  }

  const double t_hi =
      std::min(kFitWindowMax,
               kWrapBeta * f.grid.box_half_width * f.grid.box_half_width);
  std::vector<std::size_t> window;
  rep.fitted_exponent = fit_window_slope(ts, rep.pairings, t_hi, window);
  rep.fitted_amplitude = window_amplitude(ts, rep.pairings, window, rep.dim);

  const StateVector m = maxwell_state(f.grid, pot);
  rep.predicted_amplitude = std::pow(4.0 * kPi, -0.5 * rep.dim) * dot(f, m) *
                            dot(m, g);
  return rep;
}

DecayReport free_decay_radial(int n, const GaussianProfile& f,
                              const GaussianProfile& g,
                              const std::vector<double>& times, int J,
                              double quad_tol) {
  if (n < 1) throw ConfigError("dimension must be >= 1");
  if (J < 8) throw ConfigError("Hermite slice degree must be >= 8");
  if (!(f.b > 0) || !(g.b > 0))
    throw ConfigError("profile width parameters must be positive");
  if (times.empty()) throw ConfigError("decay scan needs at least one time");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  if (!(ts.front() >= 0)) throw ConfigError("decay times must be nonnegative");

  DecayReport rep;
  rep.dim = n;
  rep.potential = {};  // free case
  rep.times = ts;
  rep.wrap_guard_ok = true;  // continuum route, no box
  rep.tail_ok = true;

  // Frequency cutoff: the integrand carries e^{-(b_f + b_g) r^2} from the
  // profiles and at least e^{-t r^2 / 2} from the evolution at large t.
  const double decay_floor = f.b + g.b;
  const double r_max = std::sqrt(40.0 / decay_floor) + 1.0;
  const double area = surface_area(n);

  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(J);
  e0(0) = 1.0;
  const int tail_cut = J - std::max(1, J / 10);

  for (const double t : ts) {
    // (slice tail fraction, |contribution|) per node; nodes that contribute
    // nothing to the integral must not trip the trust flag
    std::vector<std::pair<double, double>> nodes;
    const auto integrand = [&](double r) {
      // dense per-node semigroup on the Hermite slice; the ground element of
      // e^{-t (N + i r S)} carries the whole tensor pairing since the other
      // axes sit at zero frequency where the ground state is stationary
      const Eigen::MatrixXcd mat = fiber_matrix_1d(r, J);
      const Eigen::VectorXcd col = (-t * mat).exp() * e0;
      double tail = 0, total = 0;
      for (int j = 0; j < J; ++j) {
        total += std::norm(col(j));
        if (j >= tail_cut) tail += std::norm(col(j));
      }
      const double value = profile_hat(f, n, r) * profile_hat(g, n, r) *
                           col(0).real() * std::pow(r, n - 1);
      if (total > 0) nodes.emplace_back(tail / total, std::abs(value));
      return value;
    };
    const double val = adaptive_gauss_kronrod(integrand, 0.0, r_max, quad_tol);
    double peak = 0.0;
    for (const auto& [frac, contrib] : nodes) peak = std::max(peak, contrib);
    for (const auto& [frac, contrib] : nodes) {
      if (contrib >= 1e-10 * peak && frac > kTailThreshold)
        rep.tail_ok = false;
    }
    rep.pairings.push_back(Complex(area * val, 0));
  }

  std::vector<std::size_t> window;
  rep.fitted_exponent =
      fit_window_slope(ts, rep.pairings, kFitWindowMax, window);
  rep.fitted_amplitude = window_amplitude(ts, rep.pairings, window, n);

  // rank-one prediction: <f, M0> <M0, g> = (2 pi)^n fhat(0) ghat(0)
  const double pair_f = std::pow(2.0 * kPi, 0.5 * n) * profile_hat(f, n, 0.0);
  const double pair_g = std::pow(2.0 * kPi, 0.5 * n) * profile_hat(g, n, 0.0);
  rep.predicted_amplitude =
      std::pow(4.0 * kPi, -0.5 * n) * pair_f * pair_g;
  return rep;
}

}  // namespace kfp
