#pragma once

// Shared generators and oracles for the unit and acceptance tests.

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "hypnf/normal_form.hpp"
#include "hypnf/symplectic.hpp"

namespace hypnf::test {

struct RandomQuadratic {
  std::vector<double> a, c, d;
  Matrix T;     // symplectic, normal coordinates = T * old
  Matrix hess;  // Hessian in the old coordinates
  Jet<double> p2;
};

// Random symplectic matrix built from exponentials of Hamiltonian matrices.
inline Matrix random_symplectic(int n, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix t = Matrix::Identity(2 * n, 2 * n);
  const Matrix j = symplectic_j(n);
  for (int k = 0; k < 3; ++k) {
    Matrix s(2 * n, 2 * n);
    for (int r = 0; r < 2 * n; ++r)
      for (int c = 0; c < 2 * n; ++c) s(r, c) = g(rng);
    s = 0.5 * (s + s.transpose()).eval() * (scale / std::sqrt(2.0 * n));
    t = (j * s).exp() * t;
  }
  return t;
}

// Distinct values in [lo, hi] separated by at least `gap`.
inline std::vector<double> distinct_values(int count, double lo, double hi, double gap,
                                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v;
  while (static_cast<int>(v.size()) < count) {
    const double x = u(rng);
    bool ok = true;
    for (double y : v) ok = ok && std::abs(x - y) >= gap;
    if (ok) v.push_back(x);
  }
  return v;
}

inline RandomQuadratic random_hyperbolic_quadratic(int ell, int m, std::mt19937_64& rng) {
  RandomQuadratic q;
  q.a = distinct_values(ell, 0.3, 3.0, 0.1, rng);
  q.c = distinct_values(m, 0.3, 3.0, 0.1, rng);
  std::uniform_real_distribution<double> ud(0.3, 3.0);
  for (int k = 0; k < m; ++k) q.d.push_back(ud(rng));
  const int n = ell + 2 * m;
  q.T = random_symplectic(n, rng);
  q.hess = q.T.transpose() * williamson_hessian(q.a, q.c, q.d) * q.T;
  q.p2 = quadratic_jet(q.hess);
  return q;
}

// B0 = int_0^inf exp(-s A^T) exp(-s A) ds by composite Gauss-Legendre on [0, S] panels.
inline Matrix lyapunov_quadrature(const Matrix& a) {
  static const double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                  0.9061798459386640};
  static const double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                    0.4786286704993665, 0.2369268850561891};
  Eigen::EigenSolver<Matrix> es(a, false);
  double rmin = 1e300;
  for (int i = 0; i < a.rows(); ++i) rmin = std::min(rmin, es.eigenvalues()(i).real());
  const double horizon = 45.0 / rmin;
  const int panels = 4000;
  const double h = horizon / panels;
  Matrix acc = Matrix::Zero(a.rows(), a.cols());
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) {
      const double s = mid + 0.5 * h * nodes[k];
      const Matrix e = (-s * a).exp();
      acc += 0.5 * h * weights[k] * e.transpose() * e;
    }
  }
  return acc;
}

// Random stable block matrix diag(a) + rotation-scaling blocks, optionally conjugated.
inline Matrix random_stable(int n, std::mt19937_64& rng, bool conjugate) {
  std::uniform_real_distribution<double> u(0.3, 2.0);
  Matrix a = Matrix::Zero(n, n);
  int k = 0;
  while (k < n) {
    if (k + 1 < n && u(rng) > 1.2) {
      const double c = u(rng), d = u(rng);
      a(k, k) = a(k + 1, k + 1) = c;
      a(k, k + 1) = -d;
      a(k + 1, k) = d;
      k += 2;
    } else {
      a(k, k) = u(rng);
      k += 1;
    }
  }
  if (conjugate) {
    Matrix p = Matrix::Identity(n, n) + 0.3 * Matrix::Random(n, n);
    a = p * a * p.inverse();
  }
  return a;
}

// Random jet with coefficients in [-1, 1] over degrees [min_deg, max_deg].
inline Jet<double> random_jet(int n, int order, int min_deg, int max_deg, std::mt19937_64& rng,
                              double density = 0.6) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  Jet<double> j(n, order);
  std::vector<int> e(static_cast<std::size_t>(2 * n), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == 2 * n) {
      const int deg = max_deg - left;
      if (deg < min_deg) return;
      if (coin(rng) > density) return;
      std::vector<int> a(e.begin(), e.begin() + n), b(e.begin() + n, e.end());
      j.add_term(Monomial::from_exponents(a, b), u(rng));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      e[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
    e[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, max_deg);
  return j;
}

// Random jet with small-denominator rational coefficients.
inline Jet<Rational> random_rational_jet(int n, int order, int min_deg, int max_deg,
                                         std::mt19937_64& rng, double density = 0.6) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
  auto dj = random_jet(n, order, min_deg, max_deg, rng, density);
  Jet<Rational> out(n, order);
  for (const auto& [m, c] : dj.terms()) {
    (void)c;
    Rational q(num(rng), den(rng));
    q.canonicalize();
    out.add_term(m, q);
  }
  return out;
}

inline Jet<double> to_double_jet(const Jet<Rational>& j) {
  return j.map_coefficients([](const Rational& c) { return c.get_d(); });
}

}  // namespace hypnf::test
