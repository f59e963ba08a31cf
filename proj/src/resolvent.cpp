#include "kfp/resolvent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/fiber.hpp"
#include "kfp/quadrature.hpp"

namespace kfp {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGmresCap = 500;

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

// --- tridiagonal factorization with partial pivoting ------------------------

// LU of a complex tridiagonal with equal sub- and super-diagonal, kept for
// repeated solves.  Pivoting introduces one extra super-diagonal (du2).
struct TriFactor {
  VectorXcd d, du, du2, l;
  std::vector<unsigned char> piv;
};

TriFactor tri_factor(const VectorXcd& diag, const VectorXcd& off) {
  const int n = static_cast<int>(diag.size());
  TriFactor F;
  F.d = diag;
  F.du = off;
  F.du2 = VectorXcd::Zero(std::max(0, n - 2));
  F.l = VectorXcd::Zero(std::max(0, n - 1));
  F.piv.assign(std::max(0, n - 1), 0);
  double scale = 0.0;
  for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(diag(j)));
  for (int j = 0; j + 1 < n; ++j) scale = std::max(scale, std::abs(off(j)));
  for (int i = 0; i + 1 < n; ++i) {
    const Complex sub = off(i);
    if (std::abs(F.d(i)) >= std::abs(sub)) {
      if (std::abs(F.d(i)) <= 1e-14 * scale)
        throw NumericError(
            "free resolvent shift sits on the truncated free spectrum");
      const Complex fact = sub / F.d(i);
      F.l(i) = fact;
      F.d(i + 1) -= fact * F.du(i);
    } else {
      const Complex fact = F.d(i) / sub;
      const Complex old_du = F.du(i);
      const Complex old_d1 = F.d(i + 1);
      F.piv[i] = 1;
      F.l(i) = fact;
      F.d(i) = sub;
      F.du(i) = old_d1;
      F.d(i + 1) = old_du - fact * old_d1;
      if (i + 2 < n) {
        F.du2(i) = F.du(i + 1);
        F.du(i + 1) = -fact * F.du(i + 1);
      }
    }
  }
  if (n > 0 && std::abs(F.d(n - 1)) <= 1e-14 * std::max(scale, 1.0))
    throw NumericError(
        "free resolvent shift sits on the truncated free spectrum");
  return F;
}

void tri_solve(const TriFactor& F, VectorXcd& b) {
  const int n = static_cast<int>(F.d.size());
  for (int i = 0; i + 1 < n; ++i) {
    if (F.piv[i]) std::swap(b(i), b(i + 1));
    b(i + 1) -= F.l(i) * b(i);
  }
  if (n >= 1) b(n - 1) /= F.d(n - 1);
  if (n >= 2) b(n - 2) = (b(n - 2) - F.du(n - 2) * b(n - 1)) / F.d(n - 2);
  for (int i = n - 3; i >= 0; --i)
    b(i) = (b(i) - F.du(i) * b(i + 1) - F.du2(i) * b(i + 2)) / F.d(i);
}

// --- exact free blocks ------------------------------------------------------

// (P0 - z) factored mode by mode: tridiagonal in dimension one, dense fiber
// matrices otherwise.
class FreeBlocks {
 public:
  FreeBlocks(const PhaseGrid& grid, Complex z) : grid_(grid) {
    const std::int64_t modes = grid.n_modes();
    if (grid.dim == 1) {
      tri_.reserve(modes);
      const int J = grid.nv;
      VectorXcd diag(J), off(std::max(0, J - 1));
      for (int p = 0; p < grid.nx; ++p) {
        const double kap = grid.transport_kappa(p);
        for (int j = 0; j < J; ++j) diag(j) = Complex(j, 0) - z;
        for (int j = 0; j + 1 < J; ++j)
          off(j) = Complex(0, kap * std::sqrt(j + 1.0));
        tri_.push_back(tri_factor(diag, off));
      }
    } else {
      lus_.reserve(modes);
      Eigen::VectorXd xi(grid.dim);
      for (std::int64_t k = 0; k < modes; ++k) {
        std::int64_t rem = k;
        for (int a = grid.dim - 1; a >= 0; --a) {
          xi(a) = grid.transport_kappa(static_cast<int>(rem % grid.nx));
          rem /= grid.nx;
        }
        const FiberOperator op = assemble_fiber(grid.dim, xi, grid.nv);
        MatrixXcd m =
            op.mat - z * MatrixXcd::Identity(op.size(), op.size());
        lus_.emplace_back(m);
        const auto diag = lus_.back().matrixLU().diagonal();
        const double dmax = diag.cwiseAbs().maxCoeff();
        if (diag.cwiseAbs().minCoeff() <= 1e-14 * dmax)
          throw NumericError(
              "free resolvent shift sits on the truncated free spectrum");
      }
    }
  }

  void solve_in_place(StateVector& u) const {
    const std::int64_t modes = grid_.n_modes();
    const std::int64_t rows = grid_.n_hermite();
    VectorXcd scratch(rows);
    for (std::int64_t k = 0; k < modes; ++k) {
      for (std::int64_t a = 0; a < rows; ++a)
        scratch(a) = u.coeffs[a * modes + k];
      if (grid_.dim == 1)
        tri_solve(tri_[k], scratch);
      else
        scratch = lus_[k].solve(scratch);
      for (std::int64_t a = 0; a < rows; ++a)
        u.coeffs[a * modes + k] = scratch(a);
    }
  }

 private:
  PhaseGrid grid_;
  std::vector<TriFactor> tri_;
  std::vector<Eigen::PartialPivLU<MatrixXcd>> lus_;
};

VectorXcd to_vec(const StateVector& u) {
  return Eigen::Map<const VectorXcd>(u.coeffs.data(),
                                     static_cast<std::int64_t>(u.coeffs.size()));
}

StateVector from_vec(const PhaseGrid& grid, const VectorXcd& v) {
  StateVector u = make_state(grid);
  Eigen::Map<VectorXcd>(u.coeffs.data(), v.size()) = v;
  return u;
}

// --- GMRES ------------------------------------------------------------------

struct GmresResult {
  VectorXcd x;
  int iterations = 0;
  double rel_residual = 0.0;
};

GmresResult gmres(const std::function<VectorXcd(const VectorXcd&)>& op,
                  const VectorXcd& rhs, double rel_tol, int cap) {
  const double beta = rhs.norm();
  GmresResult out;
  out.x = VectorXcd::Zero(rhs.size());
  if (beta == 0) return out;
  std::vector<VectorXcd> basis;
  basis.push_back(rhs / beta);
  MatrixXcd h = MatrixXcd::Zero(cap + 1, cap);
  VectorXcd g = VectorXcd::Zero(cap + 1);
  g(0) = beta;
  std::vector<Complex> cs(cap), sn(cap);
  int m = 0;
  double res = beta;
  for (int j = 0; j < cap; ++j) {
    VectorXcd w = op(basis[j]);
    for (int i = 0; i <= j; ++i) {
      h(i, j) = basis[i].dot(w);
      w -= h(i, j) * basis[i];
    }
    h(j + 1, j) = w.norm();
    const bool breakdown = std::abs(h(j + 1, j)) <= 1e-14 * beta;
    if (!breakdown) basis.push_back(w / h(j + 1, j));
    for (int i = 0; i < j; ++i) {
      const Complex t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
      h(i + 1, j) = -std::conj(sn[i]) * h(i, j) + cs[i] * h(i + 1, j);
      h(i, j) = t;
    }
    const Complex a = h(j, j), b = h(j + 1, j);
    const double hyp = std::sqrt(std::norm(a) + std::norm(b));
    if (hyp == 0.0) {
      cs[j] = 1;
      sn[j] = 0;
    } else if (a == Complex(0, 0)) {
      cs[j] = 0;
      sn[j] = 1;
      h(j, j) = b;
    } else {
      const Complex phase = a / std::abs(a);
      cs[j] = std::abs(a) / hyp;
      sn[j] = phase * std::conj(b) / hyp;
      h(j, j) = phase * hyp;
    }
    h(j + 1, j) = 0;
    g(j + 1) = -std::conj(sn[j]) * g(j);
    g(j) = cs[j] * g(j);
    m = j + 1;
    res = std::abs(g(j + 1));
    if (res <= rel_tol * beta || breakdown) break;
  }
  const VectorXcd y =
      h.topLeftCorner(m, m).triangularView<Eigen::Upper>().solve(g.head(m));
  for (int i = 0; i < m; ++i) out.x += y(i) * basis[i];
  out.iterations = m;
  out.rel_residual = res / beta;
  return out;
}

// --- threshold model --------------------------------------------------------

// Rank-one amplitude of the special term: i / (2 (2 pi)^{(n-1)/2} (n-2)!!)
// for odd n (empty double factorial = 1), and
// -1 / ((2 pi)^{n/2} 2^{(n-2)/2} ((n-2)/2)!) for even n.
Complex threshold_amplitude(int n) {
  if (n % 2 == 1) {
    double dfact = 1.0;
    for (int k = n - 2; k >= 2; k -= 2) dfact *= k;
    return Complex(0, 1) / (2.0 * std::pow(2.0 * kPi, 0.5 * (n - 1)) * dfact);
  }
  double fact = 1.0;
  for (int k = 1; k <= (n - 2) / 2; ++k) fact *= k;
  return Complex(-1.0 / (std::pow(2.0 * kPi, 0.5 * n) *
                         std::pow(2.0, 0.5 * (n - 2)) * fact),
                 0);
}

struct ModelColumns {
  std::vector<std::string> names;
  MatrixXcd design;          // one row per lambda sample
  VectorXcd special_flipped; // special column on the conjugate branch
  int special = -1;
  int inverse = -1;
  double min_column = 0.0;
};

ModelColumns build_model(int n, const std::vector<double>& lam,
                         bool with_inverse) {
  const int rows = static_cast<int>(lam.size());
  // One extra member of each family -- the next integer power and the next
  // special power -- guards the leading special coefficient against the
  // omitted corrections leaking into it.
  const int n_integer = std::max(0, (n - 2) / 2) + 2;
  const int cols = n_integer + 2 + (with_inverse ? 1 : 0);
  ModelColumns mc;
  mc.design.resize(rows, cols);
  mc.special_flipped.resize(rows);
  for (int k = 0; k < n_integer; ++k) {
    mc.names.push_back("lambda^" + std::to_string(k));
    for (int i = 0; i < rows; ++i)
      mc.design(i, k) = std::pow(lam[i], double(k));
  }
  mc.special = n_integer;
  const int guard = n_integer + 1;
  const double half = 0.5 * (n - 2);
  if (n % 2 == 1) {
    // z^{(n-2)/2} and z^{n/2} at z = -lambda with z^{1/2} = i sqrt(lambda).
    static constexpr Complex kQuarterTurns[4] = {
        {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const Complex phase = kQuarterTurns[(((n - 2) % 4) + 4) % 4];
    const Complex guard_phase = kQuarterTurns[((n % 4) + 4) % 4];
    mc.names.push_back("lambda^{" + std::to_string(n - 2) + "/2} half-power");
    mc.names.push_back("lambda^{" + std::to_string(n) + "/2} half-power");
    for (int i = 0; i < rows; ++i) {
      const double mag = std::pow(lam[i], half);
      mc.design(i, mc.special) = phase * mag;
      mc.design(i, guard) = guard_phase * mag * lam[i];
      mc.special_flipped(i) = std::conj(phase) * mag;
    }
  } else {
    // z^{(n-2)/2} log z^{1/2} and z^{n/2} log z^{1/2} at z = -lambda: each
    // power z^K contributes (-1)^K lambda^K, the log contributes
    // log sqrt(lambda) + i pi/2.
    const double sign = ((n - 2) / 2) % 2 == 0 ? 1.0 : -1.0;
    mc.names.push_back("lambda^" + std::to_string((n - 2) / 2) + " log");
    mc.names.push_back("lambda^" + std::to_string(n / 2) + " log");
    for (int i = 0; i < rows; ++i) {
      const double mag = sign * std::pow(lam[i], half);
      const double lg = 0.5 * std::log(lam[i]);
      mc.design(i, mc.special) = mag * Complex(lg, 0.5 * kPi);
      mc.design(i, guard) = -mag * lam[i] * Complex(lg, 0.5 * kPi);
      mc.special_flipped(i) = mag * Complex(lg, -0.5 * kPi);
    }
  }
  if (with_inverse) {
    mc.inverse = cols - 1;
    mc.names.push_back("lambda^{-1}");
    for (int i = 0; i < rows; ++i) mc.design(i, mc.inverse) = 1.0 / lam[i];
  }
  mc.min_column = std::numeric_limits<double>::max();
  for (int j = 0; j < cols; ++j)
    mc.min_column = std::min(
        mc.min_column, mc.design.col(j).norm() / std::sqrt(double(rows)));
  return mc;
}

struct Lsq {
  VectorXcd coeffs;
  double residual = 0.0;
  double condition = 0.0;
};

Lsq solve_lsq(const MatrixXcd& a, const VectorXcd& y) {
  MatrixXcd as = a;
  VectorXd scale(a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    scale(j) = as.col(j).norm();
    if (scale(j) == 0) scale(j) = 1;
    as.col(j) /= scale(j);
  }
  Eigen::JacobiSVD<MatrixXcd> svd(as,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
  Lsq out;
  out.coeffs = svd.solve(y);
  for (int j = 0; j < a.cols(); ++j) out.coeffs(j) /= scale(j);
  const double ynorm = y.norm();
  out.residual = ynorm > 0 ? (a * out.coeffs - y).norm() / ynorm : 0.0;
  const auto& sv = svd.singularValues();
  out.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : 0.0;
  return out;
}

// Refit with the special coefficient frozen.  The remaining columns are
// real-valued functions of lambda with real coefficients, so any imaginary
// misfit left by the pinned column lands in the residual instead of being
// absorbed -- which is exactly what exposes a conjugated branch.
double pinned_residual(const MatrixXd& rest, const VectorXcd& special_col,
                       Complex pinned, const VectorXcd& y) {
  const VectorXcd target = y - pinned * special_col;
  const double ynorm = y.norm();
  if (ynorm == 0) return 0.0;
  double sq = target.imag().squaredNorm();
  const VectorXd yr = target.real();
  if (rest.cols() > 0) {
    const VectorXd c = rest.colPivHouseholderQr().solve(yr);
    sq += (rest * c - yr).squaredNorm();
  } else {
    sq += yr.squaredNorm();
  }
  return std::sqrt(sq) / ynorm;
}

ResolventFit assemble_fit(int n, const std::vector<double>& lam,
                          const std::vector<Complex>& pairings,
                          Complex predicted, bool with_inverse) {
  ModelColumns mc = build_model(n, lam, with_inverse);
  const int rows = static_cast<int>(lam.size());
  if (rows < mc.design.cols() + 2)
    throw ConfigError("low-energy fit needs at least two more shift samples "
                      "than model columns");
  const VectorXcd y =
      Eigen::Map<const VectorXcd>(pairings.data(), rows);
  const Lsq ls = solve_lsq(mc.design, y);

  MatrixXd rest(rows, mc.design.cols() - 1);
  for (int j = 0, jj = 0; j < mc.design.cols(); ++j) {
    if (j == mc.special) continue;
    // A pure-imaginary column (the guard half-power) pairs with an imaginary
    // coefficient on real data, so its real-refit shape is the imaginary part.
    const VectorXd re = mc.design.col(j).real();
    rest.col(jj++) = re.isZero(0.0) ? mc.design.col(j).imag() : re;
  }

  ResolventFit fit;
  fit.dim = n;
  fit.lambda_samples = lam;
  fit.pairings = pairings;
  fit.term_names = mc.names;
  fit.coefficients.assign(ls.coeffs.data(), ls.coeffs.data() + ls.coeffs.size());
  fit.leading_special = ls.coeffs(mc.special);
  fit.predicted_special = predicted;
  fit.residual = ls.residual;
  fit.fit_condition = ls.condition;
  fit.residual_pinned =
      pinned_residual(rest, mc.design.col(mc.special), predicted, y);
  fit.residual_flipped =
      pinned_residual(rest, mc.special_flipped, predicted, y);
  if (with_inverse) {
    fit.has_inverse_column = true;
    fit.inverse_coefficient = ls.coeffs(mc.inverse);
  }
  return fit;
}

void check_lambda_grid(const std::vector<double>& lam) {
  if (lam.empty()) throw ConfigError("shift grid must not be empty");
  for (const double l : lam)
    if (!(l > 0))
      throw ConfigError("low-energy shifts must be strictly positive");
}

double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

StateVector free_resolvent(const StateVector& u, Complex z) {
  u.grid.validate();
  const FreeBlocks blocks(u.grid, z);
  StateVector out = u;
  blocks.solve_in_place(out);
  return out;
}

StateVector solve_resolvent(const StateVector& f, const Potential& pot,
                            Complex z, double tol, SolveReport* report) {
  f.grid.validate();
  if (z.imag() == 0.0 && z.real() >= 0.0)
    throw ConfigError(
        "resolvent shift must stay off the closed positive real axis");
  if (!(tol > 0)) throw ConfigError("solver tolerance must be positive");
  const double fnorm = f.norm();
  if (fnorm == 0) {
    if (report) *report = {z, 0, 0.0};
    return make_state(f.grid);
  }
  const FreeBlocks blocks(f.grid, z);
  const auto op = [&](const VectorXcd& v) -> VectorXcd {
    StateVector w = from_vec(f.grid, v);
    blocks.solve_in_place(w);
    const StateVector pw = apply_P(w, pot);
    return to_vec(pw) - z * to_vec(w);
  };
  const int cap = std::min<std::int64_t>(kGmresCap, f.grid.size());
  const GmresResult gm = gmres(op, to_vec(f), 0.5 * tol, cap);
  StateVector u = from_vec(f.grid, gm.x);
  blocks.solve_in_place(u);
  const StateVector pu = apply_P(u, pot);
  const double achieved =
      (to_vec(pu) - z * to_vec(u) - to_vec(f)).norm() / fnorm;
  if (report) *report = {z, gm.iterations, achieved};
  if (achieved > tol)
    throw NumericError("resolvent solve stalled at relative residual " +
                       sci(achieved) + " after " +
                       std::to_string(gm.iterations) + " iterations");
  return u;
}

LapTrace lap_continuation(const StateVector& f, const StateVector& g,
                          const WeightSpec& weight, const Potential& pot,
                          double lambda,
                          const std::vector<double>& eps_schedule,
                          double tol) {
  if (!(lambda > 0))
    throw ConfigError("limiting absorption needs a positive real part");
  if (eps_schedule.size() < 2)
    throw ConfigError("limiting absorption needs at least two epsilons");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0))
      throw ConfigError("epsilon schedule must be strictly positive");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      throw ConfigError("epsilon schedule must be strictly decreasing");
  }
  if (!(f.grid == g.grid))
    throw ConfigError("pairing states must share one grid");
  LapTrace trace;
  trace.lambda = lambda;
  trace.epsilons = eps_schedule;
  trace.resolution_floor =
      2.0 * std::sqrt(lambda) * kPi / f.grid.box_half_width;
  const double fnorm = f.norm();
  for (const double eps : eps_schedule) {
    const StateVector u = solve_resolvent(f, pot, Complex(lambda, eps), tol);
    trace.pairings.push_back(weighted_pair(u, g, weight));
    trace.norms.push_back(fnorm > 0 ? u.norm() / fnorm : 0.0);
  }
  for (std::size_t i = 0; i + 1 < trace.pairings.size(); ++i)
    trace.cauchy_diffs.push_back(
        std::abs(trace.pairings[i + 1] - trace.pairings[i]));
  const std::size_t nd = trace.cauchy_diffs.size();
  const double scale =
      std::abs(trace.pairings.front()) + std::abs(trace.pairings.back());
  if (nd >= 2 && trace.cauchy_diffs[nd - 1] >
                     std::max(trace.cauchy_diffs[0], 10.0 * tol * scale))
    throw TrustError("limiting absorption trace diverges along the schedule");
  const std::size_t last = trace.pairings.size() - 1;
  const double e0 = eps_schedule[last - 1], e1 = eps_schedule[last];
  trace.limit = trace.pairings[last] +
                (trace.pairings[last] - trace.pairings[last - 1]) *
                    (e1 / (e0 - e1));
  std::vector<double> mids, diffs;
  for (std::size_t i = 0; i < nd; ++i) {
    if (trace.cauchy_diffs[i] > 0) {
      mids.push_back(std::sqrt(eps_schedule[i] * eps_schedule[i + 1]));
      diffs.push_back(trace.cauchy_diffs[i]);
    }
  }
  trace.rate = mids.size() >= 2 ? loglog_slope(mids, diffs) : 0.0;
  return trace;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> lam(16);
  for (int i = 0; i < 16; ++i)
    lam[i] = 1e-4 * std::pow(5e-2 / 1e-4, i / 15.0);
  return lam;
}

ResolventFit fit_low_energy(const StateVector& f, const StateVector& g,
                            const Potential& pot,
                            const std::vector<double>& lambdas, double tol,
                            bool with_inverse_column) {
  check_lambda_grid(lambdas);
  if (!(f.grid == g.grid))
    throw ConfigError("pairing states must share one grid");
  const int n = f.grid.dim;
  const ModelColumns probe = build_model(n, lambdas, with_inverse_column);
  if (tol > 0.01 * probe.min_column)
    throw ConfigError(
        "solver tolerance must undercut the smallest model column "
        "a hundredfold");
  std::vector<Complex> pairings;
  for (const double lam : lambdas) {
    const StateVector u = solve_resolvent(f, pot, Complex(-lam, 0), tol);
    pairings.push_back(dot(u, g));
  }
  const StateVector m = maxwell_state(f.grid, pot);
  const Complex predicted = threshold_amplitude(n) * dot(f, m) * dot(m, g);
  return assemble_fit(n, lambdas, pairings, predicted, with_inverse_column);
}

ResolventFit fit_low_energy_radial(int n, const GaussianProfile& f,
                                   const GaussianProfile& g,
                                   const std::vector<double>& lambdas, int J,
                                   double quad_tol) {
  if (n < 1) throw ConfigError("dimension must be at least one");
  if (J < 8) throw ConfigError("Hermite slice degree must be >= 8");
  if (!(f.b > 0) || !(g.b > 0))
    throw ConfigError("profile width parameter must be positive");
  check_lambda_grid(lambdas);
  const ModelColumns probe = build_model(n, lambdas, false);
  if (quad_tol > 0.01 * probe.min_column)
    throw ConfigError(
        "quadrature tolerance must undercut the smallest model column "
        "a hundredfold");
  const double r_max = std::sqrt(40.0 / (f.b + g.b)) + 1.0;
  const double area = surface_area(n);
  std::vector<Complex> pairings;
  VectorXcd diag(J), off(J - 1), rhs(J);
  for (const double lam : lambdas) {
    const auto integrand = [&](double r) -> double {
      for (int j = 0; j < J; ++j) diag(j) = Complex(j + lam, 0);
      for (int j = 0; j + 1 < J; ++j)
        off(j) = Complex(0, r * std::sqrt(j + 1.0));
      const TriFactor tf = tri_factor(diag, off);
      rhs.setZero();
      rhs(0) = 1;
      tri_solve(tf, rhs);
      // The ground-to-ground entry is real up to slice truncation.
      return profile_hat(f, n, r) * profile_hat(g, n, r) * rhs(0).real() *
             std::pow(r, n - 1);
    };
    pairings.push_back(
        area * adaptive_gauss_kronrod(integrand, 0.0, r_max, quad_tol));
  }
  const double pair_f = std::pow(2.0 * kPi, 0.5 * n) * profile_hat(f, n, 0.0);
  const double pair_g = std::pow(2.0 * kPi, 0.5 * n) * profile_hat(g, n, 0.0);
  const Complex predicted = threshold_amplitude(n) * pair_f * pair_g;
  return assemble_fit(n, lambdas, pairings, predicted, false);
}

ThresholdReport threshold_identity_check(const PhaseGrid& grid,
                                         const Potential& pot,
                                         const std::vector<double>& lambdas) {
  grid.validate();
  if (lambdas.empty()) throw ConfigError("shift grid must not be empty");
  for (const double lam : lambdas)
    if (!(lam < 0))
      throw ConfigError("threshold identities need strictly negative shifts");
  const StateVector m = maxwell_state(grid, pot);
  const Potential free_pot = make_potential(PotentialSpec{}, grid.dim);
  const StateVector m0 = maxwell_state(grid, free_pot);
  const StateVector pm = apply_P(m, pot);
  const StateVector wm = apply_W(m, pot);
  ThresholdReport rep;
  rep.lambdas = lambdas;
  rep.kernel_residual = pm.norm() / m.norm();
  for (const double lam : lambdas) {
    const FreeBlocks blocks(grid, Complex(lam, 0));
    StateVector r0wm = wm;
    blocks.solve_in_place(r0wm);
    StateVector r0m = m;
    blocks.solve_in_place(r0m);
    const VectorXcd stabilized = to_vec(m) + to_vec(r0wm);
    rep.residuals.push_back((stabilized + lam * to_vec(r0m)).norm() /
                            m.norm());
    rep.stabilization.push_back((stabilized - to_vec(m0)).norm() / m0.norm());
  }
  return rep;
}

VanishingTrace lambda_vanishing_check(const StateVector& u,
                                      const std::vector<double>& lambdas) {
  u.grid.validate();
  if (lambdas.empty()) throw ConfigError("shift grid must not be empty");
  VanishingTrace trace;
  trace.lambdas = lambdas;
  for (const double lam : lambdas) {
    if (!(lam < 0))
      throw ConfigError("vanishing check needs strictly negative shifts");
    const FreeBlocks blocks(u.grid, Complex(lam, 0));
    StateVector r0u = u;
    blocks.solve_in_place(r0u);
    trace.norms.push_back(std::abs(lam) * r0u.norm());
  }
  return trace;
}

HighEnergyScan high_energy_scan(const StateVector& f, const Potential& pot,
                                const std::vector<double>& y_grid,
                                double tol) {
  f.grid.validate();
  if (y_grid.size() < 2)
    throw ConfigError("high-energy scan needs at least two heights");
  for (const double y : y_grid)
    if (!(y > 0))
      throw ConfigError("scan heights must be strictly positive");
  HighEnergyScan scan;
  scan.y_grid = y_grid;
  // The transport block i kappa S on J velocity modes reaches imaginary parts
  // of size ~2 |kappa| sqrt(J); past that the discrete operator cannot place
  // spectrum near iy and the reported norms collapse to 1/y artifacts.
  const double kappa_max =
      kPi * (f.grid.nx / 2) / f.grid.box_half_width;
  scan.resolution_limit = kappa_max * std::sqrt(double(f.grid.nv));
  const double fnorm = f.norm();
  const int n = f.grid.dim;
  for (const double y : y_grid) {
    if (y > scan.resolution_limit) scan.resolved = false;
    const StateVector u = solve_resolvent(f, pot, Complex(0, y), tol);
    scan.norms.push_back(u.norm() / fnorm);
    // (1 - Lap_v + |v|^2) = N + n/2 + 1 + (3/4) sum_a (a_a + a_a^dag)^2
    // as a ladder quadratic form.
    const StateVector nu = apply_number(u);
    double q = dot(nu, u).real() + (0.5 * n + 1.0) * u.norm() * u.norm();
    for (int a = 0; a < n; ++a) {
      const StateVector lower = apply_annihilate(u, a);
      const StateVector raise = apply_create(u, a);
      const VectorXcd s = to_vec(lower) + to_vec(raise);
      q += 0.75 * s.squaredNorm();
    }
    scan.weighted_norms.push_back(std::sqrt(q) / fnorm);
  }
  scan.slope = loglog_slope(y_grid, scan.norms);
  scan.weighted_slope = loglog_slope(y_grid, scan.weighted_norms);
  return scan;
}

}  // namespace kfp
