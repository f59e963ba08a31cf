#include "kfp/fiber.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "kfp/errors.hpp"
#include "kfp/special.hpp"

namespace kfp {

namespace {

constexpr int kMaxDenseDim = 4096;

long tensor_dim(int n, int J) {
  long d = 1;
  for (int a = 0; a < n; ++a) d *= J;
  return d;
}

void check_dense_size(int n, int J) {
  if (n < 1) throw ConfigError("fiber: dimension must be >= 1");
  if (J < 2) throw ConfigError("fiber: truncation must be >= 2");
  if (tensor_dim(n, J) > kMaxDenseDim)
    throw ConfigError("fiber: dense truncated dimension J^n exceeds " +
                      std::to_string(kMaxDenseDim));
}

// All alpha with |alpha| = level, alpha_j < J, lexicographic.
void level_indices(int n, int J, int level, std::vector<int>& digits, int axis,
                   int remaining, std::vector<std::vector<int>>& out) {
  if (axis == n - 1) {
    if (remaining < J) {
      digits[axis] = remaining;
      out.push_back(digits);
    }
    return;
  }
  for (int d = 0; d <= std::min(remaining, J - 1); ++d) {
    digits[axis] = d;
    level_indices(n, J, level, digits, axis + 1, remaining - d, out);
  }
}

// Expansion of psi_alpha(v + 2i xi) over the real Hermite functions, one axis.
// Integrand against the e^{-v^2/2} weight: the Gaussians of both factors
// combine so only polynomially bounded pieces remain.
Eigen::VectorXcd shifted_hermite_coeffs(int alpha, double xi, int J) {
  const int m = std::min(kGaussHermiteMaxNodes, J + 40);
  const HermiteBasis1D q = gauss_hermite(m);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(J);
  const double xi2 = xi * xi;
  std::vector<Complex> shifted;
  std::vector<Complex> plain;
  for (int i = 0; i < m; ++i) {
    const double v = q.quad_nodes[i];
    hermite_fn_scaled_all(alpha, Complex(v, 2.0 * xi), shifted);
    hermite_fn_scaled_all(J - 1, Complex(v, 0.0), plain);
    const Complex factor =
        q.quad_weights[i] * shifted[alpha] * std::exp(Complex(xi2, -xi * v));
    for (int b = 0; b < J; ++b) u(b) += factor * plain[b];
  }
  return u;
}

}  // namespace

Eigen::MatrixXcd fiber_matrix_1d(double xi, int J) {
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(J, J);
  for (int j = 0; j < J; ++j) {
    t(j, j) = double(j);
    if (j + 1 < J) {
      const Complex c(0.0, xi * std::sqrt(double(j + 1)));
      t(j, j + 1) = c;
      t(j + 1, j) = c;
    }
  }
  return t;
}

FiberOperator assemble_fiber(int n, const Eigen::VectorXd& xi, int J) {
  check_dense_size(n, J);
  if (xi.size() != n) throw ConfigError("assemble_fiber: xi must have n entries");
  const long dim = tensor_dim(n, J);
  FiberOperator op;
  op.dim = n;
  op.xi = xi;
  op.trunc = J;
  op.mat = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<long> stride(n);
  stride[n - 1] = 1;
  for (int a = n - 2; a >= 0; --a) stride[a] = stride[a + 1] * J;
  std::vector<int> digit(n);
  for (long i = 0; i < dim; ++i) {
    long rest = i;
    int total = 0;
    for (int a = 0; a < n; ++a) {
      digit[a] = static_cast<int>(rest / stride[a]);
      rest %= stride[a];
      total += digit[a];
    }
    op.mat(i, i) = double(total);
    for (int a = 0; a < n; ++a) {
      if (digit[a] + 1 < J) {
        const long jcol = i + stride[a];
        const Complex c(0.0, xi(a) * std::sqrt(double(digit[a] + 1)));
        op.mat(i, jcol) += c;
        op.mat(jcol, i) += c;
      }
    }
  }
  return op;
}

std::vector<std::complex<double>> fiber_spectrum(const FiberOperator& op, int count) {
  if (count < 1 || count > op.size() / 2)
    throw ConfigError(
        "fiber_spectrum: eigenvalue count must stay below half the truncated "
        "dimension (the upper part of a truncated spectrum is junk)");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(op.mat, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericError("fiber_spectrum: eigensolver did not converge");
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() + op.size());
  std::sort(ev.begin(), ev.end(),
            [](const Complex& a, const Complex& b) { return a.real() < b.real(); });
  ev.resize(count);
  return ev;
}

RieszProjection riesz_projection(int level, const Eigen::VectorXd& xi, int J) {
  const int n = static_cast<int>(xi.size());
  check_dense_size(n, J);
  if (level < 0 || level >= J)
    throw ConfigError("riesz_projection: level must satisfy 0 <= level < J");
  if (xi.norm() > 4.0)
    throw ConfigError("riesz_projection: |xi| <= 4 (complex-Hermite validity window)");
  const long dim = tensor_dim(n, J);

  std::vector<std::vector<int>> alphas;
  std::vector<int> digits(n);
  level_indices(n, J, level, digits, 0, level, alphas);

  // Per-axis coefficient vectors are reused across alphas.
  std::vector<std::vector<Eigen::VectorXcd>> axis_coeffs(n);
  for (int a = 0; a < n; ++a) {
    axis_coeffs[a].resize(level + 1);
    for (int d = 0; d <= level; ++d)
      axis_coeffs[a][d] = shifted_hermite_coeffs(d, xi(a), J);
  }

  RieszProjection proj;
  proj.level = level;
  proj.xi = xi;
  proj.mat = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::VectorXcd u(dim);
  for (const auto& alpha : alphas) {
    for (long i = 0; i < dim; ++i) {
      long rest = i;
      Complex prod = 1.0;
      for (int a = n - 1; a >= 0; --a) {
        const int beta = static_cast<int>(rest % J);
        rest /= J;
        prod *= axis_coeffs[a][alpha[a]](beta);
      }
      u(i) = prod;
    }
    proj.mat.noalias() += u * u.transpose();
  }
  proj.idempotency_defect = (proj.mat * proj.mat - proj.mat).norm();
  return proj;
}

Eigen::VectorXcd fiber_propagate(const FiberOperator& op, double t,
                                 const Eigen::VectorXcd& c) {
  if (!(t >= 0.0)) throw ConfigError("fiber_propagate: time must be >= 0");
  const Eigen::MatrixXcd e = (-t * op.mat).exp();
  return e * c;
}

Eigen::VectorXcd fiber_resolvent(const FiberOperator& op, std::complex<double> z,
                                 const Eigen::VectorXcd& c) {
  Eigen::MatrixXcd shifted = op.mat;
  shifted.diagonal().array() -= z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
  Eigen::VectorXcd u = lu.solve(c);
  const double resid = (shifted * u - c).norm();
  if (!(resid <= 1e-10 * c.norm()))
    throw NumericError("fiber_resolvent: shift too close to a truncated eigenvalue "
                       "(solve residual " + std::to_string(resid) + ")");
  return u;
}

double CutoffChi::radial(double rho) const {
  const double lo = a + 3.0, hi = a + 4.0;
  if (rho <= lo) return 1.0;
  if (rho >= hi) return 0.0;
  const double u = rho - lo;  // in (0,1)
  const double f1 = std::exp(-1.0 / (1.0 - u));
  const double f0 = std::exp(-1.0 / u);
  return f1 / (f0 + f1);
}

double CutoffChi::operator()(const Eigen::VectorXd& xi) const {
  return radial(xi.squaredNorm());
}

std::complex<double> b0_symbol(const Eigen::VectorXd& v, const Eigen::VectorXd& xi,
                               const Eigen::VectorXd& eta, const CutoffChi& chi) {
  const int n = static_cast<int>(v.size());
  if (xi.size() != n || eta.size() != n)
    throw ConfigError("b0_symbol: v, xi, eta must share a dimension");
  const double amp = std::pow(2.0, n / 2.0) * chi(xi);
  const Complex expo(-v.squaredNorm() - eta.squaredNorm() + 2.0 * xi.squaredNorm(),
                     2.0 * v.dot(xi));
  return amp * std::exp(expo);
}

}  // namespace kfp
