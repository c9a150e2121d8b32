#pragma once

#include <map>
#include <vector>

#include "hypnf/jet.hpp"
#include "hypnf/symplectic.hpp"
#include "hypnf/types.hpp"

namespace hypnf {

// {f, g} = sum_j d_xi_j f d_x_j g - d_x_j f d_xi_j g, so {p, .} = H_p.
// The result has order min(f.order, g.order).
template <class C>
Jet<C> poisson(const Jet<C>& f, const Jet<C>& g) {
  if (f.dof() != g.dof()) throw Error(ErrorKind::DimensionMismatch, "poisson: jets of different dof");
  const int n = f.dof();
  Jet<C> out(n, std::min(f.order(), g.order()));
  const int order = out.order();
  for (const auto& [mf, cf] : f.terms()) {
    const int df = mf.degree();
    if (df == 0) continue;
    if (df - 1 > order) break;
    for (const auto& [mg, cg] : g.terms()) {
      const int dg = mg.degree();
      if (dg == 0) continue;
      if (df + dg - 2 > order) break;
      Monomial sum;
      bool have_sum = false;
      for (int j = 0; j < n; ++j) {
        const int w = mf.beta(j) * mg.alpha(j) - mf.alpha(j) * mg.beta(j);
        if (w == 0) continue;
        if (!have_sum) {
          sum = mf + mg;
          have_sum = true;
        }
        Monomial m = sum;
        m.set_exponent(j, n, sum.alpha(j) - 1);
        m.set_exponent(n + j, n, sum.beta(j) - 1);
        C term = cf * cg;
        term *= C(w);
        out.add_term(m, term);
      }
    }
  }
  return out;
}

struct Resonance {
  std::vector<int> k;
  Complex value;  // <k, lambda>
};

struct ResonanceReport {
  ComplexVector lambda;
  int max_order = 0;
  double tol = 0.0;
  // sign representatives: the first nonzero entry of k is positive
  std::vector<Resonance> resonances;
};

// All k with 0 < |k|_1 <= K and |<k, lambda>| < tol, ordered by |k|_1 then lexicographically.
ResonanceReport resonance_scan(const ComplexVector& lambda, int max_order, double tol = 1e-9);

// sum_k ad_f^k g / k! = g o exp(H_f), truncated at g's order. f must start at degree 3.
template <class C>
Jet<C> lie_transform(const Jet<C>& f, const Jet<C>& g) {
  if (f.dof() != g.dof()) {
    throw Error(ErrorKind::DimensionMismatch, "lie_transform: jets of different dof");
  }
  if (!f.empty() && f.min_degree() < 3) {
    throw Error(ErrorKind::GeneratorTooLowDegree,
                "generator has a term of degree " + std::to_string(f.min_degree()) + " < 3");
  }
  Jet<C> result = g;
  Jet<C> term = g;
  for (int k = 1; k <= g.order() + 1; ++k) {
    term = poisson(f, term).with_order(g.order());
    if (term.empty()) break;
    term *= C(1) / C(k);
    result += term;
  }
  return result;
}

// Polynomial in the action variables iota_j; keys are exponent vectors over iota.
template <class C>
struct ActionPolynomial {
  int dof = 1;
  std::map<std::vector<int>, C> coeffs;

  // iota_j -> x_j xi_j
  Jet<C> expand(int order) const {
    Jet<C> out(dof, order);
    for (const auto& [e, c] : coeffs) {
      std::vector<int> a(e.begin(), e.end());
      out.add_term(Monomial::from_exponents(a, a), c);
    }
    return out;
  }
};

// Coefficients of q over iota. Throws NonActionMonomial if q has a term with alpha != beta.
template <class C>
ActionPolynomial<C> action_form(const Jet<C>& q) {
  ActionPolynomial<C> out;
  out.dof = q.dof();
  std::string offenders;
  for (const auto& [m, c] : q.terms()) {
    if (!m.is_action(q.dof())) {
      offenders += (offenders.empty() ? "" : ", ") + m.to_string(q.dof());
      continue;
    }
    std::vector<int> e(static_cast<std::size_t>(q.dof()));
    for (int j = 0; j < q.dof(); ++j) e[static_cast<std::size_t>(j)] = m.alpha(j);
    out.coeffs.emplace(std::move(e), c);
  }
  if (!offenders.empty()) throw Error(ErrorKind::NonActionMonomial, "non-action monomials: " + offenders);
  return out;
}

struct BirkhoffOptions {
  double resonance_tol = 1e-9;  // relative to max |lambda|; unused in exact arithmetic
};

template <class C>
struct NormalFormResult {
  int dof = 1;
  int order = 2;
  std::vector<C> lambda;
  std::vector<Jet<C>> generators;  // f_3 .. f_N, f_k homogeneous of degree k
  ActionPolynomial<C> q0;
  Jet<C> normal_form;  // q0 expanded in the phase variables
  Jet<C> transformed;  // p o kappa through degree N
  int residual_degree = 3;
  double max_non_action = 0.0;  // largest non-action coefficient of `transformed`
};

// Raised on a small divisor; k is (alpha - beta) of the offending monomial.
class ResonanceError : public Error {
 public:
  ResonanceError(std::vector<int> k, Complex value, const std::string& message)
      : Error(ErrorKind::ResonanceObstruction, message), k_(std::move(k)), value_(value) {}
  const std::vector<int>& k() const { return k_; }
  Complex value() const { return value_; }

 private:
  std::vector<int> k_;
  Complex value_;
};

// Order-by-order normalization of p whose quadratic part is sum lambda_j x_j xi_j.
template <class C>
NormalFormResult<C> birkhoff_normalize(const Jet<C>& p, int order, const BirkhoffOptions& opts = {});

// p o Phi_3 o ... o Phi_N with Phi_k = exp(H_{f_k}).
template <class C>
Jet<C> apply_generators(const Jet<C>& p, const std::vector<Jet<C>>& generators) {
  Jet<C> h = p;
  for (const auto& f : generators) h = lie_transform(f, h);
  return h;
}

template <class C>
double max_non_action_coefficient(const Jet<C>& q) {
  double mx = 0.0;
  for (const auto& [m, c] : q.terms())
    if (!m.is_action(q.dof())) mx = std::max(mx, CoeffTraits<C>::magnitude(c));
  return mx;
}

// Block layout of a quadratic part in the Williamson form: ell real blocks, then m loxodromic pairs.
struct WilliamsonLayout {
  int ell = 0;
  int m = 0;
  std::vector<double> a, c, d;
};

// Reads the layout from the degree-2 part of p; throws NotWilliamson if it is off-form.
WilliamsonLayout williamson_layout(const Jet<double>& p, double tol = 0.0);

// Normalization of a real jet in Williamson coordinates, loxodromic blocks handled
// in the complex coordinates of complexification_matrix and mapped back.
struct RealNormalForm {
  int dof = 1;
  int order = 2;
  WilliamsonLayout layout;
  ComplexVector lambda;
  std::vector<Jet<double>> generators;
  ActionPolynomial<Complex> q0;  // iota_j = x_j xi_j on real slots, z_j zeta_j on complex ones
  Jet<double> normal_form;
  Jet<double> transformed;
  double realness_defect = 0.0;  // largest imaginary part dropped when returning to real form
  double max_non_normal = 0.0;   // max |transformed - normal_form| coefficient
};

RealNormalForm birkhoff_normalize_real(const Jet<double>& p, int order,
                                       const BirkhoffOptions& opts = {});

// Williamson coordinates of p: p(S^{-1} y), with the quadratic part snapped to the exact
// block form once it agrees to `snap_tol` relative.
Jet<double> to_williamson_coordinates(const Jet<double>& p, const WilliamsonFrame& frame,
                                      double snap_tol = 1e-9);

// lambda_j x_j = sqrt(2 lambda_j iota_j) cosh phi_j, xi_j = sqrt(2 lambda_j iota_j) sinh phi_j.
PhasePoint hyperbolic_action_angle(const std::vector<double>& lambda, const std::vector<double>& iota,
                                   const std::vector<double>& phi);

}  // namespace hypnf
