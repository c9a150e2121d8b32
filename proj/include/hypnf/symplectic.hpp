#pragma once

#include <vector>

#include "hypnf/hamiltonian.hpp"
#include "hypnf/jet.hpp"
#include "hypnf/types.hpp"

namespace hypnf {

struct FundamentalOptions {
  double convention_factor = 2.0;
  double grad_tol = 1e-10;
  double max_condition = 1e12;
};

// F = convention_factor * J * Hess p(rho0). The linearization of H_p is F / convention_factor.
struct FundamentalMatrix {
  Matrix F;
  double convention_factor = 2.0;

  Matrix linearization() const { return F / convention_factor; }
  int dof() const { return static_cast<int>(F.rows() / 2); }
};

FundamentalMatrix fundamental_matrix(const Hamiltonian& h, const PhasePoint& rho0,
                                     const FundamentalOptions& opts = {});
FundamentalMatrix fundamental_matrix_from_hessian(const Matrix& hess, double convention_factor,
                                                  double max_condition = 1e12);

enum class EigenType { Real, ComplexPair };

struct SpectralValue {
  Complex lambda;  // representative with Re > 0, and Im > 0 for complex pairs
  int multiplicity = 1;
  EigenType type = EigenType::Real;
};

struct SpectrumOptions {
  double spectral_gap_tol = 1e-8;  // relative to the spectral radius
  double match_tol = 1e-6;         // quadruple matching, relative
  double multiplicity_tol = 1e-8;  // coincidence of representatives, relative
  double max_eigvec_condition = 1e8;
};

// Spectrum of the linearization L = F / convention_factor.
struct SpectrumQuadruples {
  std::vector<SpectralValue> quads;
  bool simple = true;
  int ell = 0;  // real pairs, counted with multiplicity
  int m = 0;    // complex quadruples, counted with multiplicity
  double spectral_radius = 0.0;
};

SpectrumQuadruples classify_spectrum(const FundamentalMatrix& f, const SpectrumOptions& opts = {});

// Hessian of a purely quadratic jet (degree-2 part only).
Matrix quadratic_hessian(const Jet<double>& p);
// The quadratic form rho^T H rho / 2 as a jet.
Jet<double> quadratic_jet(const Matrix& hess, int order = 2);

// Hessian of sum a_j x_j xi_j + sum c_j (x_p xi_p + x_q xi_q) + d_j (x_p xi_q - x_q xi_p) in the
// block layout: real blocks first, then complex pairs.
Matrix williamson_hessian(const std::vector<double>& a, const std::vector<double>& c,
                          const std::vector<double>& d);

// new = S * old. The pulled-back quadratic part has the block normal form above.
struct WilliamsonFrame {
  Matrix S;
  Matrix S_inv;
  int ell = 0;
  int m = 0;
  std::vector<double> a, c, d;
  double symplectic_defect = 0.0;

  int dof() const { return static_cast<int>(S.rows() / 2); }
  // lambda_j per position: a_j for real blocks, c +- i d on complex-pair slots
  ComplexVector frequencies() const;
  Jet<double> normal_quadratic(int order = 2) const;
};

WilliamsonFrame williamson_normalize(const Jet<double>& p2, const SpectrumQuadruples& spec);
WilliamsonFrame williamson_normalize(const Jet<double>& p2, const SpectrumOptions& opts = {});

// Complex symplectic coordinates for the loxodromic blocks, new = C * old. Real
// slots are untouched. For a block (x, y) with duals (xi, eta):
// z = (y - i x)/sqrt2, z' = (y + i x)/sqrt2, zeta = (eta + i xi)/sqrt2, zeta' = (eta - i xi)/sqrt2.
struct ComplexFrame {
  ComplexMatrix C;
  ComplexMatrix C_inv;
  int ell = 0;
  int m = 0;
  ComplexVector lambda;  // eigenvalue of z_j zeta_j in the diagonalized quadratic part
};

ComplexMatrix complexification_matrix(int ell, int m);
ComplexFrame complexify(const WilliamsonFrame& frame);
// max-abs of C^T J C - J
double complex_symplectic_defect(const ComplexMatrix& c);

struct AnisotropicNorm {
  Matrix B0;

  int dim() const { return static_cast<int>(B0.rows()); }
  double squared(const Eigen::Ref<const Vector>& v) const;
  double operator()(const Eigen::Ref<const Vector>& v) const;
};

// Solves A0^T B + B A0 = I.
AnisotropicNorm lyapunov_B0(const Matrix& A0);
double anorm(const AnisotropicNorm& b, const Eigen::Ref<const Vector>& v);

// x-block of the linearized field in Williamson coordinates: diag(a), [[c, -d], [d, c]].
Matrix williamson_A0(const WilliamsonFrame& frame);

}  // namespace hypnf
