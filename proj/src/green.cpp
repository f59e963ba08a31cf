#include "kfp/green.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "kfp/errors.hpp"
#include "kfp/special.hpp"

namespace kfp {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct FitResult {
  Eigen::VectorXd beta;
  double residual;
  double condition;
};

// Least squares with unit-scaled columns; residual is the max relative misfit.
FitResult fit_columns(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs) {
  Eigen::MatrixXd scaled = design;
  Eigen::VectorXd scale(design.cols());
  for (int c = 0; c < design.cols(); ++c) {
    scale(c) = scaled.col(c).norm();
    if (scale(c) == 0.0) throw NumericError("green fit: zero design column");
    scaled.col(c) /= scale(c);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  FitResult out;
  out.beta = svd.solve(rhs).cwiseQuotient(scale);
  const auto& sv = svd.singularValues();
  out.condition = sv(0) / sv(sv.size() - 1);
  const Eigen::VectorXd misfit = design * out.beta - rhs;
  out.residual = 0.0;
  for (int i = 0; i < rhs.size(); ++i)
    out.residual = std::max(out.residual, std::abs(misfit(i)) / std::abs(rhs(i)));
  return out;
}

Eigen::VectorXd sample_kernel(int n, double r, const std::vector<double>& grid) {
  Eigen::VectorXd s(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw ConfigError("green fit: lambda grid must be positive");
    const std::complex<double> a = green_kernel(n, {-grid[i], 0.0}, r);
    s(static_cast<int>(i)) = a.real();
    if (std::abs(a.imag()) > 1e-12 * std::abs(a.real()))
      throw NumericError("green fit: kernel lost reality on the negative axis");
  }
  return s;
}

}  // namespace

std::complex<double> sqrt_upper(std::complex<double> z) {
  std::complex<double> w = std::sqrt(z);
  if (w.imag() < 0.0) w = -w;
  return w;
}

std::complex<double> green_kernel(int n, std::complex<double> z, double r) {
  if (n < 3) throw ConfigError("green_kernel: dimension must be >= 3");
  if (!(r > 0.0)) throw ConfigError("green_kernel: separation must be positive");
  if (z.imag() == 0.0 && z.real() >= 0.0)
    throw ConfigError("green_kernel: z on the nonnegative real axis is outside the domain");
  const std::complex<double> w = sqrt_upper(z);
  const double nu = 0.5 * n - 1.0;
  return std::complex<double>(0.0, 0.25) *
         std::pow(w / (2.0 * kPi * r), nu) * hankel_h1(nu, w * r);
}

std::vector<double> make_lambda_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2)
    throw ConfigError("lambda grid: need 0 < lo < hi and at least two points");
  std::vector<double> g(count);
  const double ratio = lo / hi;
  for (int i = 0; i < count; ++i)
    g[i] = hi * std::pow(ratio, double(i) / double(count - 1));
  return g;
}

GreenExpansion expand_green_odd(int n, double r_probe,
                                const std::vector<double>& lambda_grid) {
  if (n < 5 || n % 2 == 0) throw ConfigError("expand_green_odd: odd n >= 5");
  if (!(r_probe > 0.0)) throw ConfigError("expand_green_odd: positive probe radius");
  const int max_power = n + 1;  // in sqrt(lambda); keeps truncation bias below fit noise
  const int cols = max_power + 1;
  const int rows = static_cast<int>(lambda_grid.size());
  if (rows < cols + 4)
    throw ConfigError("expand_green_odd: grid too small for the fit model");

  Eigen::MatrixXd design(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const double u = std::sqrt(lambda_grid[i]);
    double p = 1.0;
    for (int m = 0; m < cols; ++m) {
      design(i, m) = p;
      p *= u;
    }
  }
  const Eigen::VectorXd rhs = sample_kernel(n, r_probe, lambda_grid);
  const FitResult fit = fit_columns(design, rhs);

  GreenExpansion out;
  out.dim = n;
  out.odd = true;
  out.lambda_min = lambda_grid.back();
  out.lambda_max = lambda_grid.front();
  out.residual = fit.residual;
  out.condition = fit.condition;
  // Columns are powers of sqrt(lambda); undo the branch phase i^m and the
  // r-homogeneity to recover the coefficients of z^{m/2} r^{m-(n-2)}.
  const std::complex<double> mi(0.0, -1.0);
  std::complex<double> phase = 1.0;
  double rpow = std::pow(r_probe, n - 2);
  for (int m = 0; m <= n - 2; ++m) {
    out.coeffs["a" + std::to_string(m)] = fit.beta(m) * phase * rpow;
    phase *= mi;
    rpow /= r_probe;
  }
  return out;
}

GreenExpansion expand_green_even(int n, double r_probe,
                                 const std::vector<double>& lambda_grid) {
  if (n < 4 || n % 2 != 0) throw ConfigError("expand_green_even: even n >= 4");
  if (!(r_probe > 0.0)) throw ConfigError("expand_green_even: positive probe radius");
  const int m = (n - 2) / 2;
  const int poly_cols = m + 3;  // lambda^0 .. lambda^{m+2}
  const int cols = poly_cols + 2;  // plus lambda^m log, lambda^{m+1} log
  const int rows = static_cast<int>(lambda_grid.size());
  if (rows < cols + 4)
    throw ConfigError("expand_green_even: grid too small for the fit model");

  Eigen::MatrixXd design(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const double lam = lambda_grid[i];
    double p = 1.0;
    for (int j = 0; j < poly_cols; ++j) {
      design(i, j) = p;
      p *= lam;
    }
    const double lg = std::log(std::sqrt(lam));
    design(i, poly_cols) = std::pow(lam, m) * lg;
    design(i, poly_cols + 1) = std::pow(lam, m + 1) * lg;
  }
  const Eigen::VectorXd rhs = sample_kernel(n, r_probe, lambda_grid);
  const FitResult fit = fit_columns(design, rhs);

  GreenExpansion out;
  out.dim = n;
  out.odd = false;
  out.lambda_min = lambda_grid.back();
  out.lambda_max = lambda_grid.front();
  out.residual = fit.residual;
  out.condition = fit.condition;
  // z^j = (-lambda)^j and z^m log z^{1/2} = (-1)^m lambda^m (log sqrt(lambda)
  // + i pi/2); real samples only expose Re d at the log order.
  double sign = 1.0;
  double rpow = std::pow(r_probe, n - 2);
  for (int j = 0; j <= m; ++j) {
    out.coeffs["d" + std::to_string(j)] = sign * fit.beta(j) * rpow;
    sign = -sign;
    rpow /= r_probe * r_probe;
  }
  out.coeffs["c_log"] = (m % 2 == 0 ? 1.0 : -1.0) * fit.beta(poly_cols);
  return out;
}

}  // namespace kfp
