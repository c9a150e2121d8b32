#include "hypnf/symplectic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypnf {

namespace {

std::string format_complex(const Complex& z) {
  std::ostringstream os;
  os.precision(12);
  os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

void check_square_even(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0 || m.rows() % 2 != 0) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " must be a square 2n x 2n matrix");
  }
}

}  // namespace

FundamentalMatrix fundamental_matrix_from_hessian(const Matrix& hess, double convention_factor,
                                                  double max_condition) {
  check_square_even(hess, "Hessian");
  Eigen::JacobiSVD<Matrix> svd(hess);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  if (smax == 0.0 || smin <= smax / max_condition) {
    std::ostringstream os;
    os << "Hessian is singular (singular values in [" << smin << ", " << smax << "])";
    throw Error(ErrorKind::DegenerateHessian, os.str());
  }
  const int n = static_cast<int>(hess.rows() / 2);
  return {convention_factor * symplectic_j(n) * hess, convention_factor};
}

FundamentalMatrix fundamental_matrix(const Hamiltonian& h, const PhasePoint& rho0,
                                     const FundamentalOptions& opts) {
  if (rho0.dof() != h.dof()) {
    throw Error(ErrorKind::DimensionMismatch, "base point and Hamiltonian have different dof");
  }
  const Vector g = h.gradient(rho0.coords());
  if (g.norm() >= opts.grad_tol) {
    std::ostringstream os;
    os << "gradient norm " << g.norm() << " at the base point exceeds " << opts.grad_tol;
    throw Error(ErrorKind::NotCriticalPoint, os.str());
  }
  return fundamental_matrix_from_hessian(h.hessian(rho0.coords()), opts.convention_factor,
                                         opts.max_condition);
}

SpectrumQuadruples classify_spectrum(const FundamentalMatrix& f, const SpectrumOptions& opts) {
  check_square_even(f.F, "fundamental matrix");
  const Matrix l = f.linearization();
  const int dim = static_cast<int>(l.rows());
  const Matrix j = symplectic_j(dim / 2);
  const double lnorm = l.cwiseAbs().maxCoeff();
  if ((l.transpose() * j + j * l).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, lnorm)) {
    throw Error(ErrorKind::NormalizationFailed, "matrix is not Hamiltonian (L^T J + J L != 0)");
  }

  Eigen::EigenSolver<Matrix> es(l);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NormalizationFailed, "eigen-decomposition did not converge");
  }
  const ComplexVector ev = es.eigenvalues();
  SpectrumQuadruples out;
  out.spectral_radius = ev.cwiseAbs().maxCoeff();
  const double rad = out.spectral_radius;
  for (int i = 0; i < dim; ++i) {
    if (rad == 0.0 || std::abs(ev(i)) <= opts.spectral_gap_tol * rad) {
      throw Error(ErrorKind::ZeroEigenvalue, "zero eigenvalue " + format_complex(ev(i)));
    }
  }
  for (int i = 0; i < dim; ++i) {
    if (std::abs(ev(i).real()) < opts.spectral_gap_tol * rad) {
      throw Error(ErrorKind::PurelyImaginarySpectrum,
                  "purely imaginary spectrum: eigenvalue " + format_complex(ev(i)));
    }
  }
  {
    Eigen::JacobiSVD<ComplexMatrix> svd(es.eigenvectors());
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) < sv(0) / opts.max_eigvec_condition) {
      throw Error(ErrorKind::NonDiagonalizable,
                  "eigenvector matrix is numerically rank deficient");
    }
  }

  const double match = opts.match_tol * rad;
  auto present = [&](const Complex& z) {
    for (int i = 0; i < dim; ++i)
      if (std::abs(ev(i) - z) <= match) return true;
    return false;
  };
  std::vector<Complex> reps;
  for (int i = 0; i < dim; ++i) {
    Complex z = ev(i);
    if (z.real() <= 0.0) continue;
    const bool real = std::abs(z.imag()) <= match;
    if (!real && z.imag() < 0.0) continue;
    if (real) z = Complex(z.real(), 0.0);
    if (!present(-z) || (!real && (!present(std::conj(z)) || !present(-std::conj(z))))) {
      throw Error(ErrorKind::NormalizationFailed,
                  "eigenvalue " + format_complex(z) + " does not close a quadruple");
    }
    reps.push_back(z);
  }
  std::sort(reps.begin(), reps.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  const double mult = opts.multiplicity_tol * rad;
  for (const auto& z : reps) {
    const EigenType type = z.imag() == 0.0 ? EigenType::Real : EigenType::ComplexPair;
    if (!out.quads.empty() && std::abs(out.quads.back().lambda - z) <= mult) {
      ++out.quads.back().multiplicity;
      out.simple = false;
    } else {
      out.quads.push_back({z, 1, type});
    }
    (type == EigenType::Real ? out.ell : out.m) += 1;
  }
  if (out.ell + 2 * out.m != dim / 2) {
    throw Error(ErrorKind::NormalizationFailed, "eigenvalue count does not match the dimension");
  }
  return out;
}

Matrix quadratic_hessian(const Jet<double>& p) {
  const int n = p.dof();
  Matrix h = Matrix::Zero(2 * n, 2 * n);
  for (const auto& [m, c] : p.terms()) {
    if (m.degree() != 2) continue;
    int vars[2], k = 0;
    for (int v = 0; v < 2 * n; ++v)
      for (int e = 0; e < m.exponent(v, n); ++e) vars[k++] = v;
    if (vars[0] == vars[1]) {
      h(vars[0], vars[0]) += 2.0 * c;
    } else {
      h(vars[0], vars[1]) += c;
      h(vars[1], vars[0]) += c;
    }
  }
  return h;
}

Jet<double> quadratic_jet(const Matrix& hess, int order) {
  check_square_even(hess, "Hessian");
  const int n = static_cast<int>(hess.rows() / 2);
  Jet<double> p(n, order);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = a; b < 2 * n; ++b) {
      Monomial m;
      m.set_exponent(a, n, 1);
      m.set_exponent(b, n, m.exponent(b, n) + 1);
      p.add_term(m, a == b ? 0.5 * hess(a, a) : 0.5 * (hess(a, b) + hess(b, a)));
    }
  return p;
}

Matrix williamson_hessian(const std::vector<double>& a, const std::vector<double>& c,
                          const std::vector<double>& d) {
  if (c.size() != d.size()) throw Error(ErrorKind::DimensionMismatch, "c and d differ in length");
  const int ell = static_cast<int>(a.size()), m = static_cast<int>(c.size());
  const int n = ell + 2 * m;
  Matrix h = Matrix::Zero(2 * n, 2 * n);
  auto set = [&](int i, int k, double v) {
    h(i, k) += v;
    h(k, i) += v;
  };
  for (int j = 0; j < ell; ++j) set(j, n + j, a[static_cast<std::size_t>(j)]);
  for (int j = 0; j < m; ++j) {
    const int p = ell + 2 * j, q = p + 1;
    set(p, n + p, c[static_cast<std::size_t>(j)]);
    set(q, n + q, c[static_cast<std::size_t>(j)]);
    set(p, n + q, d[static_cast<std::size_t>(j)]);
    set(q, n + p, -d[static_cast<std::size_t>(j)]);
  }
  return h;
}

ComplexVector WilliamsonFrame::frequencies() const {
  const int n = dof();
  ComplexVector lam(n);
  for (int j = 0; j < ell; ++j) lam(j) = a[static_cast<std::size_t>(j)];
  for (int j = 0; j < m; ++j) {
    const auto k = static_cast<std::size_t>(j);
    lam(ell + 2 * j) = Complex(c[k], d[k]);
    lam(ell + 2 * j + 1) = Complex(c[k], -d[k]);
  }
  return lam;
}

Jet<double> WilliamsonFrame::normal_quadratic(int order) const {
  const int n = dof();
  Jet<double> p(n, order);
  auto add = [&](int xv, int xiv, double coeff) {
    Monomial mono;
    mono.set_exponent(xv, n, 1);
    mono.set_exponent(n + xiv, n, 1);
    p.add_term(mono, coeff);
  };
  for (int j = 0; j < ell; ++j) add(j, j, a[static_cast<std::size_t>(j)]);
  for (int j = 0; j < m; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const int s = ell + 2 * j, t = s + 1;
    add(s, s, c[k]);
    add(t, t, c[k]);
    add(s, t, d[k]);
    add(t, s, -d[k]);
  }
  return p;
}

namespace {

int closest_eigen(const ComplexVector& ev, const Complex& z) {
  int best = 0;
  for (int i = 1; i < ev.size(); ++i)
    if (std::abs(ev(i) - z) < std::abs(ev(best) - z)) best = i;
  return best;
}

// Unit vector with its largest-magnitude component real and positive.
ComplexVector fix_phase(ComplexVector w) {
  w /= w.norm();
  Eigen::Index k = 0;
  const double mx = w.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (std::abs(w(i)) >= mx * (1.0 - 1e-12)) {
      k = i;
      break;
    }
  return w * (std::conj(w(k)) / std::abs(w(k)));
}

Vector real_unit(const ComplexVector& w) {
  Vector v = fix_phase(w).real();
  v /= v.norm();
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-12 * scale) {
      if (v(i) < 0) v = -v;
      break;
    }
  return v;
}

}  // namespace

WilliamsonFrame williamson_normalize(const Jet<double>& p2, const SpectrumQuadruples& spec) {
  if (!spec.simple) {
    for (const auto& q : spec.quads)
      if (q.multiplicity > 1) {
        throw Error(ErrorKind::ResonantOrMultipleSpectrum,
                    "eigenvalue " + format_complex(q.lambda) + " has multiplicity " +
                        std::to_string(q.multiplicity));
      }
    throw Error(ErrorKind::ResonantOrMultipleSpectrum, "spectrum is not simple");
  }
  const int n = p2.dof();
  if (spec.ell + 2 * spec.m != n) {
    throw Error(ErrorKind::DimensionMismatch, "spectrum does not match the jet dimension");
  }
  const Matrix hess = quadratic_hessian(p2);
  const Matrix j = symplectic_j(n);
  const Matrix l = j * hess;
  Eigen::EigenSolver<Matrix> es(l);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NormalizationFailed, "eigen-decomposition did not converge");
  }
  const ComplexVector ev = es.eigenvalues();
  const ComplexMatrix vecs = es.eigenvectors();

  std::vector<Complex> real_reps, cplx_reps;
  for (const auto& q : spec.quads) (q.type == EigenType::Real ? real_reps : cplx_reps).push_back(q.lambda);
  std::sort(real_reps.begin(), real_reps.end(),
            [](const Complex& a, const Complex& b) { return a.real() < b.real(); });
  std::sort(cplx_reps.begin(), cplx_reps.end(), [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });

  Matrix e(2 * n, n), g(2 * n, n);
  int col = 0;
  for (const auto& z : real_reps) {
    e.col(col) = real_unit(vecs.col(closest_eigen(ev, z)));
    g.col(col) = real_unit(vecs.col(closest_eigen(ev, -z)));
    ++col;
  }
  for (const auto& z : cplx_reps) {
    const ComplexVector w = fix_phase(vecs.col(closest_eigen(ev, z)));
    const ComplexVector wm = fix_phase(vecs.col(closest_eigen(ev, -z)));
    e.col(col) = w.real();
    e.col(col + 1) = -w.imag();
    g.col(col) = wm.real();
    g.col(col + 1) = -wm.imag();
    col += 2;
  }
  const Matrix pairing = e.transpose() * j * g;
  Eigen::FullPivLU<Matrix> lu(pairing);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) {
    throw Error(ErrorKind::NormalizationFailed,
                "symplectic pairing of stable and unstable eigenvectors lost rank");
  }
  const Matrix f = g * lu.inverse();

  WilliamsonFrame frame;
  Matrix t(2 * n, 2 * n);
  t << e, f;
  frame.S = -j * t.transpose() * j;  // inverse of a symplectic T
  frame.S_inv = t;
  frame.ell = spec.ell;
  frame.m = spec.m;
  const Matrix hn = t.transpose() * hess * t;
  for (int k = 0; k < frame.ell; ++k) frame.a.push_back(hn(k, n + k));
  for (int k = 0; k < frame.m; ++k) {
    const int s = frame.ell + 2 * k;
    frame.c.push_back(0.5 * (hn(s, n + s) + hn(s + 1, n + s + 1)));
    frame.d.push_back(0.5 * (hn(s, n + s + 1) - hn(s + 1, n + s)));
  }
  frame.symplectic_defect = symplectic_defect(frame.S);
  return frame;
}

WilliamsonFrame williamson_normalize(const Jet<double>& p2, const SpectrumOptions& opts) {
  const auto f = fundamental_matrix_from_hessian(quadratic_hessian(p2), 1.0);
  return williamson_normalize(p2, classify_spectrum(f, opts));
}

ComplexMatrix complexification_matrix(int ell, int m) {
  const int n = ell + 2 * m;
  ComplexMatrix c = ComplexMatrix::Zero(2 * n, 2 * n);
  for (int k = 0; k < ell; ++k) {
    c(k, k) = 1.0;
    c(n + k, n + k) = 1.0;
  }
  const double s = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  for (int k = 0; k < m; ++k) {
    const int a = ell + 2 * k, b = a + 1;
    c(a, b) = s;        // z_a = (x_b - i x_a)/sqrt2
    c(a, a) = -i * s;
    c(b, b) = s;        // z_b = (x_b + i x_a)/sqrt2
    c(b, a) = i * s;
    c(n + a, n + b) = s;  // zeta_a = (xi_b + i xi_a)/sqrt2
    c(n + a, n + a) = i * s;
    c(n + b, n + b) = s;  // zeta_b = (xi_b - i xi_a)/sqrt2
    c(n + b, n + a) = -i * s;
  }
  return c;
}

double complex_symplectic_defect(const ComplexMatrix& c) {
  const int n = static_cast<int>(c.rows() / 2);
  const ComplexMatrix j = symplectic_j(n).cast<Complex>();
  return (c.transpose() * j * c - j).cwiseAbs().maxCoeff();
}

ComplexFrame complexify(const WilliamsonFrame& frame) {
  if (frame.m == 0) throw Error(ErrorKind::NoComplexBlocks, "frame has no loxodromic blocks");
  ComplexFrame out;
  out.ell = frame.ell;
  out.m = frame.m;
  out.C = complexification_matrix(frame.ell, frame.m);
  out.C_inv = out.C.inverse();
  out.lambda = frame.frequencies();
  return out;
}

double AnisotropicNorm::squared(const Eigen::Ref<const Vector>& v) const {
  if (v.size() != B0.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "anisotropic norm applied to a vector of wrong size");
  }
  return v.dot(B0 * v);
}

double AnisotropicNorm::operator()(const Eigen::Ref<const Vector>& v) const {
  return std::sqrt(std::max(0.0, squared(v)));
}

double anorm(const AnisotropicNorm& b, const Eigen::Ref<const Vector>& v) { return b(v); }

namespace {

// Detects the block layout diag(a_j) followed by [[c, -d], [d, c]] blocks; returns false otherwise.
bool closed_form_B0(const Matrix& a0, Matrix& b) {
  const int n = static_cast<int>(a0.rows());
  b = Matrix::Zero(n, n);
  Matrix rest = a0;
  int k = 0;
  while (k < n) {
    if (k + 1 < n && (a0(k + 1, k) != 0.0 || a0(k, k + 1) != 0.0)) {
      const double c = a0(k, k), d = a0(k + 1, k);
      if (a0(k + 1, k + 1) != c || a0(k, k + 1) != -d) return false;
      b(k, k) = b(k + 1, k + 1) = 0.5 / c;
      rest.block(k, k, 2, 2).setZero();
      k += 2;
    } else {
      b(k, k) = 0.5 / a0(k, k);
      rest(k, k) = 0.0;
      k += 1;
    }
  }
  return rest.cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

AnisotropicNorm lyapunov_B0(const Matrix& A0) {
  if (A0.rows() != A0.cols() || A0.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "A0 must be square");
  }
  const int n = static_cast<int>(A0.rows());
  Eigen::EigenSolver<Matrix> es(A0, false);
  for (int i = 0; i < n; ++i) {
    if (es.eigenvalues()(i).real() <= 0.0) {
      throw Error(ErrorKind::UnstableA0,
                  "A0 has eigenvalue " + format_complex(es.eigenvalues()(i)) + " with Re <= 0");
    }
  }
  Matrix b;
  if (!closed_form_B0(A0, b)) {
    // (I kron A0^T + A0^T kron I) vec B = vec I, column-major vec
    const Matrix at = A0.transpose();
    const Matrix id = Matrix::Identity(n, n);
    Matrix k = Matrix::Zero(n * n, n * n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) {
        // entry (r, c) of A0^T B + B A0
        const int row = c * n + r;
        for (int s = 0; s < n; ++s) {
          k(row, c * n + s) += at(r, s);  // A0^T(r, s) B(s, c)
          k(row, s * n + r) += A0(s, c);  // B(r, s) A0(s, c)
        }
      }
    Vector rhs = Eigen::Map<const Vector>(id.data(), n * n);
    Vector sol = k.fullPivLu().solve(rhs);
    b = Eigen::Map<Matrix>(sol.data(), n, n);
    b = 0.5 * (b + b.transpose()).eval();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> sa(b);
  if (sa.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorKind::UnstableA0, "Lyapunov solution is not positive definite");
  }
  return {b};
}

Matrix williamson_A0(const WilliamsonFrame& frame) {
  const int n = frame.dof();
  Matrix a = Matrix::Zero(n, n);
  for (int j = 0; j < frame.ell; ++j) a(j, j) = frame.a[static_cast<std::size_t>(j)];
  for (int j = 0; j < frame.m; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const int s = frame.ell + 2 * j;
    a(s, s) = a(s + 1, s + 1) = frame.c[k];
    a(s, s + 1) = -frame.d[k];
    a(s + 1, s) = frame.d[k];
  }
  return a;
}

}  // namespace hypnf
