#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace kfp {

// Free fiber operator at spatial frequency xi on the tensor Hermite basis
// {psi_alpha : alpha_j < J}: sum over axes of N_j + i*xi_j*S_j, where N is
// the number operator and S the symmetric ladder coupling of multiplication
// by v_j. Eigenvalues converge to l + |xi|^2 as J grows.
struct FiberOperator {
  int dim = 1;
  Eigen::VectorXd xi;
  int trunc = 0;                 // J per axis
  Eigen::MatrixXcd mat;          // dense J^dim x J^dim
  int size() const { return static_cast<int>(mat.rows()); }
};

// Tridiagonal 1-axis block N + i*xi*S.
Eigen::MatrixXcd fiber_matrix_1d(double xi, int J);

FiberOperator assemble_fiber(int n, const Eigen::VectorXd& xi, int J);

// Lowest-real-part eigenvalues, sorted by real part. count must stay below
// half the truncated dimension (the upper part of a truncated spectrum is
// meaningless).
std::vector<std::complex<double>> fiber_spectrum(const FiberOperator& op, int count);

// Spectral projection onto the eigenvalue level + |xi|^2, built from
// complex-shifted Hermite expansions u_beta = integral psi_alpha(v+2i xi) phi_beta(v) dv
// summed over |alpha| = level. The two pairing conventions of the projection
// formula coincide for real xi (Schwarz reflection), so the matrix is
// sum_alpha u u^T with no conjugation.
struct RieszProjection {
  int level = 0;
  Eigen::VectorXd xi;
  Eigen::MatrixXcd mat;
  double idempotency_defect = 0.0;  // ||P^2 - P|| measured at build time
};

RieszProjection riesz_projection(int level, const Eigen::VectorXd& xi, int J);

// e^{-t op} c by dense scaling-and-squaring; contraction in l2.
Eigen::VectorXcd fiber_propagate(const FiberOperator& op, double t,
                                 const Eigen::VectorXcd& c);

// (op - z)^{-1} c by dense LU. Throws NumericError when z sits within 1e-8
// of the truncated spectrum.
Eigen::VectorXcd fiber_resolvent(const FiberOperator& op, std::complex<double> z,
                                 const Eigen::VectorXcd& c);

// Smooth radial bump: identically 1 on |xi|^2 <= a+3, vanishing for
// |xi|^2 >= a+4, monotone exp-type profile between.
struct CutoffChi {
  double a = 0.5;
  double operator()(const Eigen::VectorXd& xi) const;
  double radial(double xi_norm_sq) const;
};

// 2^{n/2} chi(xi) e^{-v^2 - eta^2 + 2i v.xi + 2 xi^2}
std::complex<double> b0_symbol(const Eigen::VectorXd& v, const Eigen::VectorXd& xi,
                               const Eigen::VectorXd& eta, const CutoffChi& chi);

}  // namespace kfp
