#include "kfp/phase_space.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include "kfp/errors.hpp"

#include <numbers>

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace kfp {
namespace {

constexpr double kPi = std::numbers::pi;

// Desk-scale memory cap on the coefficient tensor (1 GiB of complex doubles).
constexpr std::int64_t kMaxStateElems = std::int64_t(1) << 26;

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Stride of axis a in the row-major flattening (axis 0 slowest).
std::int64_t stride_of(int extent, int dim, int axis) {
  return ipow(extent, dim - 1 - axis);
}

int digit_of(std::int64_t flat, std::int64_t stride, int extent) {
  return int((flat / stride) % extent);
}

void check_same_grid(const StateVector& a, const StateVector& b) {
  if (!(a.grid == b.grid)) throw ConfigError("states live on different grids");
}

void check_coeff_size(const StateVector& u) {
  if (std::int64_t(u.coeffs.size()) != u.grid.size())
    throw ConfigError("coefficient tensor does not match its grid");
}

// Process-lifetime FFTW plan cache.  Plans are created with FFTW_ESTIMATE and
// FFTW_UNALIGNED so the new-array execute interface accepts any buffer.
class PlanCache {
 public:
  static fftw_plan get(int dim, int nx, std::int64_t howmany, int sign) {
    static PlanCache cache;
    std::scoped_lock lock(cache.mu_);
    const Key key{dim, nx, howmany, sign};
    auto it = cache.plans_.find(key);
    if (it != cache.plans_.end()) return it->second;

    const std::int64_t modes = ipow(nx, dim);
    std::vector<fftw_complex> scratch(std::size_t(modes * howmany));
    std::array<int, 3> n{nx, nx, nx};
    fftw_plan p = fftw_plan_many_dft(
        dim, n.data(), int(howmany), scratch.data(), nullptr, 1, int(modes),
        scratch.data(), nullptr, 1, int(modes), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericError("FFT planning failed");
    cache.plans_.emplace(key, p);
    return p;
  }

 private:
  using Key = std::tuple<int, int, std::int64_t, int>;
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }
  std::mutex mu_;
  std::map<Key, fftw_plan> plans_;
};

// In-place DFT of every Hermite row of data (howmany rows of n_modes each).
void fft_rows(const PhaseGrid& g, std::vector<Complex>& data,
              std::int64_t howmany, int sign) {
  fftw_plan p = PlanCache::get(g.dim, g.nx, howmany, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, ptr, ptr);
}

// Parity (-1)^(sum of mode digits) per flattened Fourier index; nx is even so
// the signed and stored digits share parity.
std::vector<double> mode_parity(const PhaseGrid& g) {
  std::vector<double> sign(std::size_t(g.n_modes()), 0.0);
  for (std::int64_t m = 0; m < g.n_modes(); ++m) {
    int tot = 0;
    std::int64_t rest = m;
    for (int a = g.dim - 1; a >= 0; --a) {
      tot += int(rest % g.nx);
      rest /= g.nx;
    }
    sign[std::size_t(m)] = (tot % 2 == 0) ? 1.0 : -1.0;
  }
  return sign;
}

// Collocation coordinates of flattened Fourier index m.
void x_point(const PhaseGrid& g, std::int64_t m, std::span<double> out) {
  for (int a = g.dim - 1; a >= 0; --a) {
    out[std::size_t(a)] = g.x_coord(int(m % g.nx));
    m /= g.nx;
  }
}

// Frequency vector of flattened Fourier index m.
void kappa_point(const PhaseGrid& g, std::int64_t m, std::span<double> out) {
  for (int a = g.dim - 1; a >= 0; --a) {
    out[std::size_t(a)] = g.kappa(int(m % g.nx));
    m /= g.nx;
  }
}

int hermite_total_degree(const PhaseGrid& g, std::int64_t af) {
  int tot = 0;
  for (int a = 0; a < g.dim; ++a) tot += int(af % g.nv), af /= g.nv;
  return tot;
}

int hermite_max_degree(const PhaseGrid& g, std::int64_t af) {
  int mx = 0;
  for (int a = 0; a < g.dim; ++a) mx = std::max(mx, int(af % g.nv)), af /= g.nv;
  return mx;
}

// One ladder transfer: out[row b] += factor * kappa_mult .* u[row b +- e_a],
// with an optional per-mode multiplier table (nullptr means factor only).
void add_scaled_row(Complex* dst, const Complex* src, std::int64_t n,
                    Complex factor, const double* mult) {
  if (mult == nullptr) {
    for (std::int64_t m = 0; m < n; ++m) dst[m] += factor * src[m];
  } else {
    for (std::int64_t m = 0; m < n; ++m) dst[m] += factor * mult[m] * src[m];
  }
}

// Per-axis table of the transport frequency over flattened Fourier indices.
std::vector<double> kappa_table(const PhaseGrid& g, int axis) {
  const std::int64_t xs = stride_of(g.nx, g.dim, axis);
  std::vector<double> t(std::size_t(g.n_modes()), 0.0);
  for (std::int64_t m = 0; m < g.n_modes(); ++m)
    t[std::size_t(m)] = g.transport_kappa(digit_of(m, xs, g.nx));
  return t;
}

double sup_norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// Grid-maximized decay constant sup <x>^rho (|V| + <x>|grad V|) along the
// line through the origin and the potential's center.
double scan_ass1(const Potential& pot, int dim, double rho) {
  std::vector<double> dir(std::size_t(dim), 0.0);
  double cnorm = 0;
  for (std::size_t a = 0; a < pot.spec.center.size(); ++a)
    cnorm += pot.spec.center[a] * pot.spec.center[a];
  if (cnorm > 0) {
    for (std::size_t a = 0; a < std::size_t(dim); ++a)
      dir[a] = pot.spec.center[a] / std::sqrt(cnorm);
  } else {
    dir[0] = 1.0;
  }
  std::vector<double> x(std::size_t(dim), 0.0), grad(std::size_t(dim), 0.0);
  double best = 0;
  const int kSamples = 80000;
  const double kRange = 400.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = -kRange + 2.0 * kRange * i / kSamples;
    for (int a = 0; a < dim; ++a) x[std::size_t(a)] = t * dir[std::size_t(a)];
    const double bra = std::sqrt(1.0 + t * t);
    pot.gradient(x, grad);
    const double val = std::pow(bra, rho) *
                       (std::abs(pot.value(x)) + bra * sup_norm(grad));
    best = std::max(best, val);
  }
  return best;
}

}  // namespace

void PhaseGrid::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2, or 3");
  if (!(box_half_width > 0)) throw ConfigError("box half-width must be > 0");
  if (nx < 8 || !std::has_single_bit(unsigned(nx)))
    throw ConfigError("nx must be a power of two >= 8");
  if (nv < 4) throw ConfigError("nv must be >= 4");
  if (size() > kMaxStateElems)
    throw ConfigError("state tensor exceeds the desk-scale memory cap");
}

std::int64_t PhaseGrid::n_modes() const { return ipow(nx, dim); }
std::int64_t PhaseGrid::n_hermite() const { return ipow(nv, dim); }
std::int64_t PhaseGrid::size() const { return n_modes() * n_hermite(); }

double PhaseGrid::kappa(int p) const {
  return kPi * mode_number(p) / box_half_width;
}

double StateVector::norm() const {
  double s = 0;
  for (const Complex& c : coeffs) s += std::norm(c);
  return std::sqrt(s);
}

double StateVector::tail_fraction() const {
  const std::int64_t modes = grid.n_modes();
  const int cut = grid.nv - std::max(1, grid.nv / 10);
  double tail = 0, total = 0;
  for (std::int64_t af = 0; af < grid.n_hermite(); ++af) {
    double row = 0;
    for (std::int64_t m = 0; m < modes; ++m)
      row += std::norm(coeffs[std::size_t(af * modes + m)]);
    total += row;
    if (hermite_max_degree(grid, af) >= cut) tail += row;
  }
  return total > 0 ? tail / total : 0.0;
}

StateVector make_state(const PhaseGrid& grid) {
  grid.validate();
  StateVector u;
  u.grid = grid;
  u.coeffs.assign(std::size_t(grid.size()), Complex(0, 0));
  return u;
}

Complex dot(const StateVector& f, const StateVector& g) {
  check_same_grid(f, g);
  Complex s(0, 0);
  for (std::size_t i = 0; i < f.coeffs.size(); ++i)
    s += f.coeffs[i] * std::conj(g.coeffs[i]);
  return s;
}

Potential make_potential(const PotentialSpec& spec, int dim) {
  if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2, or 3");
  if (!spec.center.empty() && int(spec.center.size()) != dim)
    throw ConfigError("potential center dimension mismatch");
  std::vector<double> ctr(std::size_t(dim), 0.0);
  for (std::size_t a = 0; a < spec.center.size(); ++a) ctr[a] = spec.center[a];

  Potential pot;
  pot.spec = spec;
  switch (spec.family) {
    case PotentialSpec::Family::kZero:
      pot.value = [](std::span<const double>) { return 0.0; };
      pot.gradient = [](std::span<const double>, std::span<double> g) {
        std::ranges::fill(g, 0.0);
      };
      pot.ass1_constant = 0.0;
      return pot;

    case PotentialSpec::Family::kPolynomialDecay: {
      if (!(spec.decay_rho > 0))
        throw ConfigError(
            "polynomial-decay potential requires a positive decay rate");
      const double c = spec.amplitude, rho = spec.decay_rho;
      pot.value = [c, rho, ctr](std::span<const double> x) {
        double s = 0;
        for (std::size_t a = 0; a < ctr.size(); ++a)
          s += (x[a] - ctr[a]) * (x[a] - ctr[a]);
        return c * std::pow(1.0 + s, -rho / 2.0);
      };
      pot.gradient = [c, rho, ctr](std::span<const double> x,
                                   std::span<double> g) {
        double s = 0;
        for (std::size_t a = 0; a < ctr.size(); ++a)
          s += (x[a] - ctr[a]) * (x[a] - ctr[a]);
        const double f = -c * rho * std::pow(1.0 + s, -rho / 2.0 - 1.0);
        for (std::size_t a = 0; a < ctr.size(); ++a)
          g[a] = f * (x[a] - ctr[a]);
      };
      pot.ass1_constant = scan_ass1(pot, dim, rho);
      return pot;
    }

    case PotentialSpec::Family::kCompactBump: {
      if (!(spec.decay_rho > 0))
        throw ConfigError("compact bump requires a positive support radius");
      const double c = spec.amplitude, w2 = spec.decay_rho * spec.decay_rho;
      pot.value = [c, w2, ctr](std::span<const double> x) {
        double s = 0;
        for (std::size_t a = 0; a < ctr.size(); ++a)
          s += (x[a] - ctr[a]) * (x[a] - ctr[a]);
        if (s >= w2) return 0.0;
        return c * std::exp(1.0 - w2 / (w2 - s));
      };
      pot.gradient = [c, w2, ctr](std::span<const double> x,
                                  std::span<double> g) {
        double s = 0;
        for (std::size_t a = 0; a < ctr.size(); ++a)
          s += (x[a] - ctr[a]) * (x[a] - ctr[a]);
        std::ranges::fill(g, 0.0);
        if (s >= w2) return;
        const double v = c * std::exp(1.0 - w2 / (w2 - s));
        const double f = -2.0 * w2 * v / ((w2 - s) * (w2 - s));
        for (std::size_t a = 0; a < ctr.size(); ++a)
          g[a] = f * (x[a] - ctr[a]);
      };
      // Compactly supported: any positive rho gives a finite constant; report
      // the scan with rho = 1.
      pot.ass1_constant = scan_ass1(pot, dim, 1.0);
      return pot;
    }
  }
  throw ConfigError("unknown potential family");
}

StateVector maxwell_state(const PhaseGrid& grid, const Potential& pot) {
  StateVector u = make_state(grid);
  const std::int64_t modes = grid.n_modes();
  std::vector<Complex> vals(std::size_t(modes), Complex(0, 0));
  std::vector<double> x(std::size_t(grid.dim));
  for (std::int64_t m = 0; m < modes; ++m) {
    x_point(grid, m, x);
    vals[std::size_t(m)] = std::exp(-0.5 * pot.value(x));
  }
  // alpha = 0 row only; transform collocation values of e^{-V/2} to modes.
  fft_rows(grid, vals, 1, FFTW_FORWARD);
  const std::vector<double> parity = mode_parity(grid);
  const double scale =
      std::pow(std::sqrt(2.0 * grid.box_half_width) / grid.nx, grid.dim);
  for (std::int64_t m = 0; m < modes; ++m)
    u.coeffs[std::size_t(m)] = scale * parity[std::size_t(m)] * vals[std::size_t(m)];
  return u;
}

StateVector apply_P0(const StateVector& u) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  const std::int64_t modes = g.n_modes();
  StateVector out = make_state(g);

  std::vector<std::vector<double>> kap(std::size_t(g.dim));
  for (int a = 0; a < g.dim; ++a) kap[std::size_t(a)] = kappa_table(g, a);

  for (std::int64_t af = 0; af < g.n_hermite(); ++af) {
    Complex* dst = &out.coeffs[std::size_t(af * modes)];
    const Complex* src = &u.coeffs[std::size_t(af * modes)];
    const double tot = hermite_total_degree(g, af);
    add_scaled_row(dst, src, modes, Complex(tot, 0), nullptr);
    for (int a = 0; a < g.dim; ++a) {
      const std::int64_t as = stride_of(g.nv, g.dim, a);
      const int d = digit_of(af, as, g.nv);
      if (d + 1 < g.nv)
        add_scaled_row(dst, &u.coeffs[std::size_t((af + as) * modes)], modes,
                       Complex(0, std::sqrt(d + 1.0)), kap[std::size_t(a)].data());
      if (d > 0)
        add_scaled_row(dst, &u.coeffs[std::size_t((af - as) * modes)], modes,
                       Complex(0, std::sqrt(double(d))), kap[std::size_t(a)].data());
    }
  }
  return out;
}

StateVector apply_W(const StateVector& u, const Potential& pot) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  if (pot.spec.family == PotentialSpec::Family::kZero) return make_state(g);
  const std::int64_t modes = g.n_modes();
  const std::vector<double> parity = mode_parity(g);
  const double to_vals = std::pow(2.0 * g.box_half_width, -g.dim / 2.0);
  const double to_modes =
      std::pow(std::sqrt(2.0 * g.box_half_width) / g.nx, g.dim);

  // Collocation values of -dV/dx_a per axis.
  std::vector<double> x(std::size_t(g.dim), 0.0), grad(std::size_t(g.dim), 0.0);
  std::vector<std::vector<double>> force(
      std::size_t(g.dim), std::vector<double>(std::size_t(modes)));
  for (std::int64_t m = 0; m < modes; ++m) {
    x_point(g, m, x);
    pot.gradient(x, grad);
    for (int a = 0; a < g.dim; ++a)
      force[std::size_t(a)][std::size_t(m)] = -grad[std::size_t(a)];
  }

  StateVector out = make_state(g);
  std::vector<Complex> work(std::size_t(g.size()), Complex(0, 0));
  for (int a = 0; a < g.dim; ++a) {
    // d/dv_a ladder: (sqrt(b_a + 1) c[b + e_a] - sqrt(b_a) c[b - e_a]) / 2.
    const std::int64_t as = stride_of(g.nv, g.dim, a);
    std::ranges::fill(work, Complex(0, 0));
    for (std::int64_t af = 0; af < g.n_hermite(); ++af) {
      Complex* dst = &work[std::size_t(af * modes)];
      const int d = digit_of(af, as, g.nv);
      if (d + 1 < g.nv)
        add_scaled_row(dst, &u.coeffs[std::size_t((af + as) * modes)], modes,
                       Complex(0.5 * std::sqrt(d + 1.0), 0), nullptr);
      if (d > 0)
        add_scaled_row(dst, &u.coeffs[std::size_t((af - as) * modes)], modes,
                       Complex(-0.5 * std::sqrt(double(d)), 0), nullptr);
    }
    // modes -> values, multiply by the force field, values -> modes.
    for (std::int64_t i = 0; i < g.size(); ++i)
      work[std::size_t(i)] *= parity[std::size_t(i % modes)];
    fft_rows(g, work, g.n_hermite(), FFTW_BACKWARD);
    for (std::int64_t i = 0; i < g.size(); ++i)
      work[std::size_t(i)] *=
          to_vals * force[std::size_t(a)][std::size_t(i % modes)];
    fft_rows(g, work, g.n_hermite(), FFTW_FORWARD);
    for (std::int64_t i = 0; i < g.size(); ++i)
      out.coeffs[std::size_t(i)] +=
          to_modes * parity[std::size_t(i % modes)] * work[std::size_t(i)];
  }
  return out;
}

StateVector apply_P(const StateVector& u, const Potential& pot) {
  StateVector out = apply_P0(u);
  if (pot.spec.family != PotentialSpec::Family::kZero) {
    const StateVector w = apply_W(u, pot);
    for (std::size_t i = 0; i < out.coeffs.size(); ++i)
      out.coeffs[i] += w.coeffs[i];
  }
  return out;
}

StateVector apply_annihilate(const StateVector& u, int axis) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  if (axis < 0 || axis >= g.dim) throw ConfigError("axis out of range");
  const std::int64_t modes = g.n_modes();
  const std::int64_t as = stride_of(g.nv, g.dim, axis);
  StateVector out = make_state(g);
  for (std::int64_t af = 0; af < g.n_hermite(); ++af) {
    const int d = digit_of(af, as, g.nv);
    if (d + 1 < g.nv)
      add_scaled_row(&out.coeffs[std::size_t(af * modes)],
                     &u.coeffs[std::size_t((af + as) * modes)], modes,
                     Complex(std::sqrt(d + 1.0), 0), nullptr);
  }
  return out;
}

StateVector apply_create(const StateVector& u, int axis) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  if (axis < 0 || axis >= g.dim) throw ConfigError("axis out of range");
  const std::int64_t modes = g.n_modes();
  const std::int64_t as = stride_of(g.nv, g.dim, axis);
  StateVector out = make_state(g);
  for (std::int64_t af = 0; af < g.n_hermite(); ++af) {
    const int d = digit_of(af, as, g.nv);
    if (d > 0)
      add_scaled_row(&out.coeffs[std::size_t(af * modes)],
                     &u.coeffs[std::size_t((af - as) * modes)], modes,
                     Complex(std::sqrt(double(d)), 0), nullptr);
  }
  return out;
}

StateVector apply_number(const StateVector& u) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  const std::int64_t modes = g.n_modes();
  StateVector out = make_state(g);
  for (std::int64_t af = 0; af < g.n_hermite(); ++af)
    add_scaled_row(&out.coeffs[std::size_t(af * modes)],
                   &u.coeffs[std::size_t(af * modes)], modes,
                   Complex(hermite_total_degree(g, af), 0), nullptr);
  return out;
}

StateVector apply_fourier_multiplier(const StateVector& u,
                                     const ScalarField& mult) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  const std::int64_t modes = g.n_modes();
  std::vector<double> table(std::size_t(modes), 0.0);
  std::vector<double> kv(std::size_t(g.dim), 0.0);
  for (std::int64_t m = 0; m < modes; ++m) {
    kappa_point(g, m, kv);
    table[std::size_t(m)] = mult(kv);
  }
  StateVector out = make_state(g);
  for (std::int64_t af = 0; af < g.n_hermite(); ++af)
    add_scaled_row(&out.coeffs[std::size_t(af * modes)],
                   &u.coeffs[std::size_t(af * modes)], modes, Complex(1, 0),
                   table.data());
  return out;
}

StateVector apply_x_weight(const StateVector& u, double s) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  const std::int64_t modes = g.n_modes();
  std::vector<Complex> vals = x_values(u);
  std::vector<double> x(std::size_t(g.dim), 0.0);
  std::vector<double> w(std::size_t(modes), 0.0);
  for (std::int64_t m = 0; m < modes; ++m) {
    x_point(g, m, x);
    double r2 = 0;
    for (double xi : x) r2 += xi * xi;
    w[std::size_t(m)] = std::pow(1.0 + r2, 0.5 * s);
  }
  for (std::int64_t i = 0; i < g.size(); ++i)
    vals[std::size_t(i)] *= w[std::size_t(i % modes)];
  return from_x_values(g, vals);
}

StateVector velocity_flip(const StateVector& u) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  const std::int64_t modes = g.n_modes();
  StateVector out = u;
  for (std::int64_t af = 0; af < g.n_hermite(); ++af) {
    if (hermite_total_degree(g, af) % 2 == 0) continue;
    Complex* row = &out.coeffs[std::size_t(af * modes)];
    for (std::int64_t m = 0; m < modes; ++m) row[m] = -row[m];
  }
  return out;
}

std::vector<Complex> x_values(const StateVector& u) {
  check_coeff_size(u);
  const PhaseGrid& g = u.grid;
  const std::int64_t modes = g.n_modes();
  const std::vector<double> parity = mode_parity(g);
  std::vector<Complex> vals = u.coeffs;
  for (std::int64_t i = 0; i < g.size(); ++i)
    vals[std::size_t(i)] *= parity[std::size_t(i % modes)];
  fft_rows(g, vals, g.n_hermite(), FFTW_BACKWARD);
  const double scale = std::pow(2.0 * g.box_half_width, -g.dim / 2.0);
  for (Complex& v : vals) v *= scale;
  return vals;
}

StateVector from_x_values(const PhaseGrid& grid,
                          const std::vector<Complex>& values) {
  StateVector u = make_state(grid);
  if (values.size() != u.coeffs.size())
    throw ConfigError("value array does not match the grid");
  const std::int64_t modes = grid.n_modes();
  u.coeffs = values;
  fft_rows(grid, u.coeffs, grid.n_hermite(), FFTW_FORWARD);
  const std::vector<double> parity = mode_parity(grid);
  const double scale =
      std::pow(std::sqrt(2.0 * grid.box_half_width) / grid.nx, grid.dim);
  for (std::int64_t i = 0; i < grid.size(); ++i)
    u.coeffs[std::size_t(i)] *= scale * parity[std::size_t(i % modes)];
  return u;
}

namespace {

// Lambda^2 = 1 + <D_v>^2 + |v|^2 + <D_x>^(2/3).  In ladder variables the
// velocity part is 2 + N + dim/2 + (3/4) sum_a (a_a + a_a^+)^2.
StateVector apply_weight_square(const StateVector& u) {
  const PhaseGrid& g = u.grid;
  StateVector out = apply_number(u);
  const double c0 = 2.0 + 0.5 * g.dim;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] += c0 * u.coeffs[i];
  for (int a = 0; a < g.dim; ++a) {
    StateVector s1 = apply_annihilate(u, a);
    const StateVector c1 = apply_create(u, a);
    for (std::size_t i = 0; i < s1.coeffs.size(); ++i)
      s1.coeffs[i] += c1.coeffs[i];
    StateVector s2 = apply_annihilate(s1, a);
    const StateVector c2 = apply_create(s1, a);
    for (std::size_t i = 0; i < s2.coeffs.size(); ++i)
      out.coeffs[i] += 0.75 * (s2.coeffs[i] + c2.coeffs[i]);
  }
  const StateVector dx = apply_fourier_multiplier(
      u, [](std::span<const double> kv) {
        double k2 = 0;
        for (double k : kv) k2 += k * k;
        return std::cbrt(1.0 + k2);
      });
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] += dx.coeffs[i];
  return out;
}

}  // namespace

Complex weighted_pair(const StateVector& f, const StateVector& g,
                      const WeightSpec& w) {
  check_same_grid(f, g);
  const double half = w.r / 2.0;
  const long reps = std::lround(half);
  if (std::abs(half - double(reps)) > 1e-12 || reps < 0)
    throw ConfigError(
        "Sobolev index must be an even nonnegative integer in this "
        "discretization");
  StateVector h = f;
  for (long i = 0; i < reps; ++i) h = apply_weight_square(h);
  if (w.s != 0.0) h = apply_x_weight(h, w.s);
  return dot(h, g);
}

namespace {

constexpr char kMagic[9] = "KFPSTATE";

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_state(const std::string& path, const StateVector& u) {
  check_coeff_size(u);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  write_pod(os, std::uint32_t{1});
  write_pod(os, std::uint32_t(u.grid.dim));
  write_pod(os, std::uint32_t(u.grid.nx));
  write_pod(os, std::uint32_t(u.grid.nv));
  write_pod(os, u.grid.box_half_width);
  os.write(reinterpret_cast<const char*>(u.coeffs.data()),
           std::streamsize(u.coeffs.size() * sizeof(Complex)));
  if (!os) throw ConfigError("checkpoint write failed: " + path);
}

StateVector load_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw ConfigError("not a state checkpoint: " + path);
  std::uint32_t version = 0, dim = 0, nx = 0, nv = 0;
  read_pod(is, version);
  if (version != 1) throw ConfigError("unsupported checkpoint version");
  read_pod(is, dim);
  read_pod(is, nx);
  read_pod(is, nv);
  PhaseGrid g;
  g.dim = int(dim);
  g.nx = int(nx);
  g.nv = int(nv);
  read_pod(is, g.box_half_width);
  StateVector u = make_state(g);
  is.read(reinterpret_cast<char*>(u.coeffs.data()),
          std::streamsize(u.coeffs.size() * sizeof(Complex)));
  if (!is) throw ConfigError("truncated checkpoint: " + path);
  return u;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty config key");
    kv[key] = val;
  }
  return kv;
}

namespace {

double kv_double(const std::map<std::string, std::string>& kv,
                 const std::string& key, double dflt) {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number");
  }
  if (pos != it->second.size())
    throw ConfigError("config key '" + key + "' is not a number");
  return v;
}

int kv_int(const std::map<std::string, std::string>& kv,
           const std::string& key, int dflt) {
  const double v = kv_double(kv, key, double(dflt));
  const int i = int(std::lround(v));
  if (double(i) != v) throw ConfigError("config key '" + key + "' is not an integer");
  return i;
}

}  // namespace

PhaseGrid grid_from_config(const std::map<std::string, std::string>& kv) {
  PhaseGrid g;
  g.dim = kv_int(kv, "dim", g.dim);
  g.box_half_width = kv_double(kv, "box_half_width", g.box_half_width);
  g.nx = kv_int(kv, "nx", g.nx);
  g.nv = kv_int(kv, "nv", g.nv);
  g.validate();
  return g;
}

PotentialSpec potential_from_config(
    const std::map<std::string, std::string>& kv) {
  PotentialSpec spec;
  const auto fam = kv.find("potential.family");
  const std::string name = fam == kv.end() ? "zero" : fam->second;
  if (name == "zero") {
    spec.family = PotentialSpec::Family::kZero;
  } else if (name == "polynomial-decay") {
    spec.family = PotentialSpec::Family::kPolynomialDecay;
  } else if (name == "compact-bump") {
    spec.family = PotentialSpec::Family::kCompactBump;
  } else {
    throw ConfigError("unknown potential family: " + name);
  }
  spec.amplitude = kv_double(kv, "potential.amplitude", 0.0);
  spec.decay_rho = kv_double(kv, "potential.rho", 4.0);
  const auto ctr = kv.find("potential.center");
  if (ctr != kv.end()) {
    std::stringstream ss(ctr->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        spec.center.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("potential.center must be comma-separated numbers");
      }
    }
  }
  return spec;
}

}  // namespace kfp
