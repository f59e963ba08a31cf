#include "kfp/special.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "kfp/errors.hpp"

namespace kfp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

const double kInvQuarticRoot2Pi = std::pow(2.0 * kPi, -0.25);  // phi_0(0)

template <typename S>
S hermite_poly_impl(int j, S s) {
  if (j < 0) throw ConfigError("hermite_poly: degree must be >= 0");
  S fm1 = S(1);
  if (j == 0) return fm1;
  S f = s;
  for (int k = 1; k < j; ++k) {
    S fp1 = s * f - static_cast<double>(k) * fm1;
    fm1 = f;
    f = fp1;
  }
  return f;
}

template <typename S>
void hermite_fn_all_impl(int jmax, S s, S phi0, std::vector<S>& out) {
  if (jmax < 0) throw ConfigError("hermite_fn: degree must be >= 0");
  out.resize(static_cast<size_t>(jmax) + 1);
  out[0] = phi0;
  if (jmax == 0) return;
  out[1] = s * phi0;
  for (int j = 1; j < jmax; ++j)
    out[j + 1] = (s * out[j] - std::sqrt(double(j)) * out[j - 1]) / std::sqrt(double(j + 1));
}

void check_imag_window(Complex s) {
  if (std::abs(s.imag()) > kHermiteImagWindow)
    throw NumericError("hermite_fn: |Im s| exceeds the growth window " +
                       std::to_string(kHermiteImagWindow));
}

// Finite-part and power-series pieces of H^(1) below the switch radius.

Complex bessel_j_series(int nu, Complex w) {
  const Complex h = 0.5 * w;
  const Complex h2 = -h * h;
  Complex term = std::pow(h, nu) / std::tgamma(double(nu) + 1.0);
  Complex sum = term;
  for (int k = 1; k < 80; ++k) {
    term *= h2 / (double(k) * double(k + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// Y_nu for integer nu via the log series; principal log is the continuation
// through Im w >= 0.
Complex bessel_y_series(int nu, Complex w) {
  const Complex h = 0.5 * w;
  const Complex lg = std::log(h);
  Complex finite = 0.0;
  {
    Complex p = std::pow(h, -nu);
    double fact = 1.0;  // (nu-1-k)! / k! built incrementally
    for (int i = 1; i <= nu - 1; ++i) fact *= i;
    for (int k = 0; k <= nu - 1; ++k) {
      finite += fact * p;
      p *= h * h;
      if (k < nu - 1) fact /= double(nu - 1 - k) * double(k + 1);
    }
  }
  double psi_k = -kEulerGamma;        // psi(1)
  double psi_nk = -kEulerGamma;       // psi(nu+1)
  for (int i = 1; i <= nu; ++i) psi_nk += 1.0 / i;
  Complex pow_term = std::pow(h, nu) / std::tgamma(double(nu) + 1.0);
  Complex series = (psi_k + psi_nk) * pow_term;
  const Complex h2 = -h * h;
  for (int k = 1; k < 80; ++k) {
    pow_term *= h2 / (double(k) * double(k + nu));
    psi_k += 1.0 / k;
    psi_nk += 1.0 / (nu + k);
    Complex t = (psi_k + psi_nk) * pow_term;
    series += t;
    if (std::abs(t) < 1e-18 * std::abs(series)) break;
  }
  return (2.0 / kPi) * lg * bessel_j_series(nu, w) - (1.0 / kPi) * finite -
         (1.0 / kPi) * series;
}

}  // namespace

// Large-argument expansion sqrt(2/(pi w)) e^{i(w - nu pi/2 - pi/4)} sum_k i^k a_k / w^k.
Complex hankel_h1_asymptotic(double nu, Complex w) {
  const double mu = 4.0 * nu * nu;
  Complex sum = 1.0;
  Complex term = 1.0;
  const Complex iw = Complex(0, 1) / w;
  double prev = 1e300;
  for (int k = 1; k <= 16; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k) * iw;
    const double mag = std::abs(term);
    if (mag > prev) break;  // divergent tail reached
    sum += term;
    prev = mag;
    if (mag < 1e-17 * std::abs(sum)) break;
  }
  const Complex phase = std::exp(Complex(0, 1) * (w - nu * kPi / 2.0 - kPi / 4.0));
  return std::sqrt(2.0 / (kPi * w)) * phase * sum;
}

Complex hankel_h1_series(int nu, Complex w) {
  return bessel_j_series(nu, w) + Complex(0, 1) * bessel_y_series(nu, w);
}

namespace {

// Exact forward recurrence from the nu = -1/2, 1/2 closed forms; Y-dominant
// direction, stable upward.
Complex hankel_h1_half_integer(double nu, Complex w) {
  const Complex pref = std::sqrt(2.0 / (kPi * w)) * std::exp(Complex(0, 1) * w);
  Complex hm = pref;                      // H_{-1/2}
  Complex h = Complex(0, -1) * pref;      // H_{1/2}
  int steps = static_cast<int>(nu - 0.5 + 0.5);
  for (int k = 0; k < steps; ++k) {
    Complex hp = (2.0 * (0.5 + k) / w) * h - hm;
    hm = h;
    h = hp;
  }
  return h;
}

}  // namespace

Complex hermite_poly(int j, Complex s) { return hermite_poly_impl(j, s); }
double hermite_poly(int j, double s) { return hermite_poly_impl(j, s); }

void hermite_fn_all(int jmax, Complex s, std::vector<Complex>& out) {
  check_imag_window(s);
  hermite_fn_all_impl(jmax, s, kInvQuarticRoot2Pi * std::exp(-s * s / 4.0), out);
}

void hermite_fn_all(int jmax, double s, std::vector<double>& out) {
  hermite_fn_all_impl(jmax, s, kInvQuarticRoot2Pi * std::exp(-s * s / 4.0), out);
}

void hermite_fn_scaled_all(int jmax, Complex s, std::vector<Complex>& out) {
  hermite_fn_all_impl(jmax, s, Complex(kInvQuarticRoot2Pi), out);
}

Complex hermite_fn(int j, Complex s) {
  static thread_local std::vector<Complex> buf;
  hermite_fn_all(j, s, buf);
  return buf[j];
}

double hermite_fn(int j, double s) {
  static thread_local std::vector<double> buf;
  hermite_fn_all(j, s, buf);
  return buf[j];
}

HermiteBasis1D gauss_hermite(int m) {
  if (m < 1) throw ConfigError("gauss_hermite: need at least one node");
  if (m > kGaussHermiteMaxNodes)
    throw ConfigError("gauss_hermite: node count beyond the stable ceiling " +
                      std::to_string(kGaussHermiteMaxNodes));
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  for (int j = 1; j < m; ++j) {
    jac(j, j - 1) = std::sqrt(double(j));
    jac(j - 1, j) = jac(j, j - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("gauss_hermite: Jacobi eigenproblem failed");
  HermiteBasis1D basis;
  basis.max_degree = m;
  basis.quad_nodes.resize(m);
  basis.quad_weights.resize(m);
  // Christoffel form w_i = 1/sum_j phihat_j(x_i)^2: full relative accuracy
  // even where the weights underflow the eigenvector first components.
  std::vector<double> ph;
  for (int i = 0; i < m; ++i) {
    basis.quad_nodes[i] = es.eigenvalues()(i);
    hermite_fn_all_impl(m - 1, basis.quad_nodes[i], kInvQuarticRoot2Pi, ph);
    double denom = 0.0;
    for (int j = 0; j < m; ++j) denom += ph[j] * ph[j];
    basis.quad_weights[i] = 1.0 / denom;
  }
  return basis;
}

Complex hankel_h1(double nu, Complex w) {
  if (w == Complex(0, 0)) throw ConfigError("hankel_h1: singular at w = 0");
  if (nu < 0) throw ConfigError("hankel_h1: order must be >= 0");
  const double twice = 2.0 * nu;
  const bool integer_order = std::abs(nu - std::round(nu)) < 1e-12;
  const bool half_integer = std::abs(twice - std::round(twice)) < 1e-12 && !integer_order;
  if (!integer_order && !half_integer)
    throw ConfigError("hankel_h1: order must be integer or half-integer");
  if (half_integer) return hankel_h1_half_integer(nu, w);
  const double switch_radius = std::max(kHankelSwitchRadius, 2.0 * nu);
  if (std::abs(w) >= switch_radius) return hankel_h1_asymptotic(nu, w);
  return hankel_h1_series(static_cast<int>(std::round(nu)), w);
}

long long double_factorial(int k) {
  if (k < -1) throw ConfigError("double_factorial: argument must be >= -1");
  if (k > 33) throw ConfigError("double_factorial: overflows past k = 33");
  long long r = 1;
  for (int i = k; i > 1; i -= 2) r *= i;
  return r;
}

}  // namespace kfp
