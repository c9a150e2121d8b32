#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hypnf/error.hpp"

namespace hypnf {

inline constexpr int kMaxDof = 6;

using Rational = mpq_class;
using Complex = std::complex<double>;

// x^alpha xi^beta. Exponents live at fixed offsets (alpha in [0, kMaxDof),
// beta in [kMaxDof, 2 kMaxDof)) so monomials compare independently of n.
class Monomial {
 public:
  Monomial() = default;

  static Monomial from_exponents(std::span<const int> alpha, std::span<const int> beta);

  int alpha(int j) const { return e_[static_cast<std::size_t>(j)]; }
  int beta(int j) const { return e_[static_cast<std::size_t>(kMaxDof + j)]; }

  // Phase variable v in [0, 2n): x_v for v < n, xi_{v-n} otherwise.
  int exponent(int var, int dof) const { return e_[slot(var, dof)]; }
  void set_exponent(int var, int dof, int value);

  int degree() const {
    int d = 0;
    for (auto v : e_) d += v;
    return d;
  }
  bool is_action(int dof) const {
    for (int j = 0; j < dof; ++j)
      if (alpha(j) != beta(j)) return false;
    return true;
  }

  Monomial operator+(const Monomial& o) const;
  bool operator==(const Monomial&) const = default;

  const std::array<std::uint8_t, 2 * kMaxDof>& raw() const { return e_; }

  std::string to_string(int dof) const;

 private:
  static std::size_t slot(int var, int dof) {
    return static_cast<std::size_t>(var < dof ? var : kMaxDof + (var - dof));
  }
  std::array<std::uint8_t, 2 * kMaxDof> e_{};
};

// Graded lexicographic order: lower total degree first, then x_1 > ... > x_n > xi_1 > ... .
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return a.raw() > b.raw();
  }
};

template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<double> {
  static bool is_zero(double c) { return c == 0.0; }
  static double magnitude(double c) { return std::abs(c); }
};

template <>
struct CoeffTraits<Complex> {
  static bool is_zero(const Complex& c) { return c == Complex(0.0, 0.0); }
  static double magnitude(const Complex& c) { return std::abs(c); }
};

template <>
struct CoeffTraits<Rational> {
  static bool is_zero(const Rational& c) { return sgn(c) == 0; }
  static double magnitude(const Rational& c) { return std::abs(c.get_d()); }
};

inline double to_double(double c) { return c; }
inline double to_double(const Rational& c) { return c.get_d(); }

// Truncated power series in 2n phase variables, exact through total degree
// `order`. Zero coefficients are never stored.
template <class C>
class Jet {
 public:
  using Coeff = C;
  using Terms = std::map<Monomial, C, GradedLex>;

  Jet() = default;
  Jet(int dof, int order) : dof_(dof), order_(order) {
    if (dof < 1 || dof > kMaxDof) {
      throw Error(ErrorKind::DimensionMismatch,
                  "jet dof must lie in [1, " + std::to_string(kMaxDof) + "]");
    }
    if (order < 0 || order > 255) {
      throw Error(ErrorKind::DimensionMismatch, "jet order must lie in [0, 255]");
    }
  }

  static Jet constant(int dof, int order, const C& c) {
    Jet j(dof, order);
    j.add_term(Monomial{}, c);
    return j;
  }
  static Jet variable(int dof, int order, int var, const C& c = C(1)) {
    Jet j(dof, order);
    Monomial m;
    m.set_exponent(var, dof, 1);
    j.add_term(m, c);
    return j;
  }
  static Jet monomial(int dof, int order, const Monomial& m, const C& c = C(1)) {
    Jet j(dof, order);
    j.add_term(m, c);
    return j;
  }

  int dof() const { return dof_; }
  int order() const { return order_; }
  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  C coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }

  // Accumulates c into the coefficient of m; terms above the order are dropped.
  void add_term(const Monomial& m, const C& c) {
    if (m.degree() > order_ || CoeffTraits<C>::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (CoeffTraits<C>::is_zero(it->second)) terms_.erase(it);
    }
  }

  void set_term(const Monomial& m, const C& c) {
    if (m.degree() > order_) return;
    if (CoeffTraits<C>::is_zero(c)) {
      terms_.erase(m);
    } else {
      terms_.insert_or_assign(m, c);
    }
  }

  int min_degree() const { return terms_.empty() ? -1 : terms_.begin()->first.degree(); }
  int max_degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first.degree(); }

  Jet homogeneous_part(int k) const {
    Jet out(dof_, order_);
    for (const auto& [m, c] : terms_)
      if (m.degree() == k) out.terms_.emplace_hint(out.terms_.end(), m, c);
    return out;
  }

  bool is_homogeneous(int k) const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [k](const auto& t) { return t.first.degree() == k; });
  }

  Jet truncated(int order) const {
    Jet out(dof_, order);
    for (const auto& [m, c] : terms_)
      if (m.degree() <= order) out.terms_.emplace_hint(out.terms_.end(), m, c);
    return out;
  }

  Jet with_order(int order) const { return truncated(order); }

  // d/d(var); var indexes the 2n phase variables.
  Jet derivative(int var) const {
    Jet out(dof_, order_);
    for (const auto& [m, c] : terms_) {
      const int e = m.exponent(var, dof_);
      if (e == 0) continue;
      Monomial d = m;
      d.set_exponent(var, dof_, e - 1);
      out.add_term(d, c * C(e));
    }
    return out;
  }

  Jet operator-() const {
    Jet out = *this;
    for (auto& [m, c] : out.terms_) c = -c;
    return out;
  }

  Jet& operator+=(const Jet& o) {
    check_same_dof(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check_same_dof(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Jet& operator*=(const C& s) {
    if (CoeffTraits<C>::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (CoeffTraits<C>::is_zero(it->second)) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, const C& s) { return a *= s; }
  friend Jet operator*(const C& s, Jet a) { return a *= s; }

  // Truncated product; the result has order min(a.order, b.order).
  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_same_dof(b);
    Jet out(a.dof_, std::min(a.order_, b.order_));
    for (const auto& [ma, ca] : a.terms_) {
      const int da = ma.degree();
      if (da > out.order_) break;
      for (const auto& [mb, cb] : b.terms_) {
        if (da + mb.degree() > out.order_) break;
        out.add_term(ma + mb, ca * cb);
      }
    }
    return out;
  }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.dof_ == b.dof_ && a.order_ == b.order_ && a.terms_ == b.terms_;
  }

  template <class F>
  auto map_coefficients(F&& f) const -> Jet<decltype(f(std::declval<const C&>()))> {
    using Out = decltype(f(std::declval<const C&>()));
    Jet<Out> out(dof_, order_);
    for (const auto& [m, c] : terms_) out.add_term(m, f(c));
    return out;
  }

  // Largest coefficient magnitude over all stored terms.
  double max_abs_coefficient() const {
    double mx = 0.0;
    for (const auto& [m, c] : terms_) mx = std::max(mx, CoeffTraits<C>::magnitude(c));
    return mx;
  }

  // Evaluates the polynomial at a point of scalar type T (double or complex).
  template <class T>
  T evaluate(std::span<const T> point) const {
    if (static_cast<int>(point.size()) != 2 * dof_) {
      throw Error(ErrorKind::DimensionMismatch, "jet evaluated at a point of wrong dimension");
    }
    std::vector<std::vector<T>> powers(point.size(), std::vector<T>(order_ + 1, T(1)));
    for (std::size_t v = 0; v < point.size(); ++v)
      for (int k = 1; k <= order_; ++k) powers[v][k] = powers[v][k - 1] * point[v];
    T acc(0);
    for (const auto& [m, c] : terms_) {
      T t = static_cast<T>(to_scalar(c));
      for (int v = 0; v < 2 * dof_; ++v) {
        const int e = m.exponent(v, dof_);
        if (e) t *= powers[static_cast<std::size_t>(v)][e];
      }
      acc += t;
    }
    return acc;
  }

 private:
  template <class T>
  static auto to_scalar(const T& c) {
    if constexpr (std::is_same_v<T, Rational>) {
      return c.get_d();
    } else {
      return c;
    }
  }

  void check_same_dof(const Jet& o) const {
    if (o.dof_ != dof_) throw Error(ErrorKind::DimensionMismatch, "jets of different dof");
  }

  int dof_ = 1;
  int order_ = 0;
  Terms terms_;
};

inline double to_double_or_self(const Rational& c) { return c.get_d(); }
inline double to_double_or_self(double c) { return c; }
inline Complex to_double_or_self(const Complex& c) { return c; }

// Substitutes old = M * new into p; M must be 2n x 2n. The result keeps p's order.
template <class C, class Mat>
auto substitute_linear(const Jet<C>& p, const Mat& m) -> Jet<typename Mat::Scalar> {
  using S = typename Mat::Scalar;
  const int n = p.dof();
  const int vars = 2 * n;
  if (m.rows() != vars || m.cols() != vars) {
    throw Error(ErrorKind::DimensionMismatch, "linear substitution matrix has wrong size");
  }
  const int order = p.order();
  // powers[v][k] = (sum_w M(v, w) y_w)^k
  std::vector<std::vector<Jet<S>>> powers(static_cast<std::size_t>(vars));
  for (int v = 0; v < vars; ++v) {
    Jet<S> lin(n, order);
    for (int w = 0; w < vars; ++w) {
      Monomial mono;
      mono.set_exponent(w, n, 1);
      lin.add_term(mono, m(v, w));
    }
    auto& pw = powers[static_cast<std::size_t>(v)];
    pw.push_back(Jet<S>::constant(n, order, S(1)));
    for (int k = 1; k <= order; ++k) pw.push_back(pw.back() * lin);
  }
  Jet<S> out(n, order);
  for (const auto& [mono, c] : p.terms()) {
    Jet<S> term = Jet<S>::constant(n, order, static_cast<S>(to_double_or_self(c)));
    for (int v = 0; v < vars; ++v) {
      const int e = mono.exponent(v, n);
      if (e) term = term * powers[static_cast<std::size_t>(v)][static_cast<std::size_t>(e)];
    }
    out += term;
  }
  return out;
}

}  // namespace hypnf
