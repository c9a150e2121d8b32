#include "hypnf/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypnf {

namespace {

void enumerate_lattice(int n, int budget, std::vector<int>& k, int pos,
                       std::vector<std::vector<int>>& out) {
  if (pos == n) {
    out.push_back(k);
    return;
  }
  for (int v = -budget; v <= budget; ++v) {
    k[static_cast<std::size_t>(pos)] = v;
    enumerate_lattice(n, budget - std::abs(v), k, pos + 1, out);
  }
  k[static_cast<std::size_t>(pos)] = 0;
}

int l1(const std::vector<int>& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

std::string format_k(const std::vector<int>& k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
  return s + ")";
}

template <class C>
bool is_small(const C& mu, double tol, double scale) {
  if constexpr (std::is_same_v<C, Rational>) {
    (void)tol;
    (void)scale;
    return sgn(mu) == 0;
  } else {
    return std::abs(mu) < tol * scale;
  }
}

template <class C>
Complex as_complex(const C& c) {
  if constexpr (std::is_same_v<C, Rational>) {
    return Complex(c.get_d(), 0.0);
  } else {
    return Complex(c);
  }
}

template <class C>
std::string format_coeff(const C& c) {
  std::ostringstream os;
  os.precision(12);
  if constexpr (std::is_same_v<C, Rational>) {
    os << c.get_str();
  } else {
    os << c;
  }
  return os.str();
}

}  // namespace

ResonanceReport resonance_scan(const ComplexVector& lambda, int max_order, double tol) {
  ResonanceReport rep;
  rep.lambda = lambda;
  rep.max_order = max_order;
  rep.tol = tol;
  const int n = static_cast<int>(lambda.size());
  if (n == 0 || max_order < 1) return rep;
  std::vector<std::vector<int>> all;
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  enumerate_lattice(n, max_order, k, 0, all);
  for (const auto& v : all) {
    const auto first = std::find_if(v.begin(), v.end(), [](int x) { return x != 0; });
    if (first == v.end() || *first < 0) continue;
    Complex val(0.0, 0.0);
    for (int j = 0; j < n; ++j) val += static_cast<double>(v[static_cast<std::size_t>(j)]) * lambda(j);
    if (std::abs(val) < tol) rep.resonances.push_back({v, val});
  }
  std::sort(rep.resonances.begin(), rep.resonances.end(), [](const Resonance& a, const Resonance& b) {
    const int la = l1(a.k), lb = l1(b.k);
    return la != lb ? la < lb : a.k < b.k;
  });
  return rep;
}

template <class C>
NormalFormResult<C> birkhoff_normalize(const Jet<C>& p, int order, const BirkhoffOptions& opts) {
  const int n = p.dof();
  if (order < 2) throw Error(ErrorKind::DimensionMismatch, "normalization order must be >= 2");
  NormalFormResult<C> res;
  res.dof = n;
  res.order = order;
  res.residual_degree = order + 1;
  Jet<C> h = p.with_order(order);

  res.lambda.assign(static_cast<std::size_t>(n), C(0));
  for (const auto& [m, c] : h.terms()) {
    const int deg = m.degree();
    if (deg == 1) throw Error(ErrorKind::NotWilliamson, "jet has a linear term " + m.to_string(n));
    if (deg != 2) continue;
    if (!m.is_action(n)) {
      throw Error(ErrorKind::NotWilliamson,
                  "quadratic part has off-form monomial " + m.to_string(n) +
                      " (expected sum lambda_j x_j xi_j)");
    }
    for (int j = 0; j < n; ++j)
      if (m.alpha(j) == 1) res.lambda[static_cast<std::size_t>(j)] = c;
  }
  double scale = 0.0;
  for (int j = 0; j < n; ++j) {
    const C& lam = res.lambda[static_cast<std::size_t>(j)];
    if (CoeffTraits<C>::is_zero(lam)) {
      throw Error(ErrorKind::NotWilliamson,
                  "quadratic part lacks the x_" + std::to_string(j + 1) + " xi_" + std::to_string(j + 1) +
                      " term");
    }
    scale = std::max(scale, CoeffTraits<C>::magnitude(lam));
  }

  for (int k = 3; k <= order; ++k) {
    Jet<C> f(n, order);
    for (const auto& [m, c] : h.terms()) {
      if (m.degree() < k) continue;
      if (m.degree() > k) break;
      if (m.is_action(n)) continue;
      C mu(0);
      std::vector<int> kv(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        const int w = m.alpha(j) - m.beta(j);
        kv[static_cast<std::size_t>(j)] = w;
        if (w) mu += C(w) * res.lambda[static_cast<std::size_t>(j)];
      }
      if (is_small(mu, opts.resonance_tol, scale)) {
        throw ResonanceError(kv, as_complex(mu),
                             "resonant monomial " + m.to_string(n) + " at degree " + std::to_string(k) +
                                 ": <k, lambda> = " + format_coeff(mu) + " for k=" + format_k(kv));
      }
      C coeff = c;
      coeff /= mu;
      f.add_term(m, coeff);
    }
    if (!f.empty()) h = lie_transform(f, h);
    res.generators.push_back(std::move(f));
  }

  Jet<C> action_part(n, order);
  for (const auto& [m, c] : h.terms())
    if (m.is_action(n)) action_part.add_term(m, c);
  res.q0 = action_form(action_part);
  res.normal_form = res.q0.expand(order);
  res.max_non_action = max_non_action_coefficient(h);
  res.transformed = std::move(h);
  return res;
}

template NormalFormResult<double> birkhoff_normalize(const Jet<double>&, int, const BirkhoffOptions&);
template NormalFormResult<Rational> birkhoff_normalize(const Jet<Rational>&, int,
                                                       const BirkhoffOptions&);
template NormalFormResult<Complex> birkhoff_normalize(const Jet<Complex>&, int,
                                                      const BirkhoffOptions&);

WilliamsonLayout williamson_layout(const Jet<double>& p, double tol) {
  const int n = p.dof();
  Matrix b = Matrix::Zero(n, n);  // coefficient of x_i xi_j
  double scale = 0.0;
  for (const auto& [m, c] : p.terms()) {
    if (m.degree() == 1) throw Error(ErrorKind::NotWilliamson, "jet has a linear term " + m.to_string(n));
    if (m.degree() == 2) scale = std::max(scale, std::abs(c));
  }
  const double eps = tol * std::max(scale, 1.0);
  for (const auto& [m, c] : p.terms()) {
    if (m.degree() != 2) continue;
    int xi = -1, xj = -1;
    for (int j = 0; j < n; ++j) {
      if (m.alpha(j) == 1) xi = j;
      if (m.beta(j) == 1) xj = j;
    }
    if (xi >= 0 && xj >= 0) {
      b(xi, xj) = c;
    } else if (std::abs(c) > eps) {
      throw Error(ErrorKind::NotWilliamson, "quadratic part has off-form monomial " + m.to_string(n));
    }
  }
  WilliamsonLayout lay;
  Matrix rest = b;
  int j = 0;
  while (j < n) {
    const bool coupled = j + 1 < n && (std::abs(b(j, j + 1)) > eps || std::abs(b(j + 1, j)) > eps);
    if (coupled) {
      const double c = b(j, j), d = b(j, j + 1);
      if (std::abs(b(j + 1, j + 1) - c) > eps || std::abs(b(j + 1, j) + d) > eps) {
        throw Error(ErrorKind::NotWilliamson,
                    "block (" + std::to_string(j + 1) + "," + std::to_string(j + 2) +
                        ") is not of the form c(x xi + y eta) + d(x eta - y xi)");
      }
      lay.c.push_back(c);
      lay.d.push_back(d);
      ++lay.m;
      rest.block(j, j, 2, 2).setZero();
      j += 2;
    } else {
      if (lay.m > 0) {
        throw Error(ErrorKind::NotWilliamson, "real saddle blocks must precede loxodromic blocks");
      }
      if (std::abs(b(j, j)) <= eps) {
        throw Error(ErrorKind::NotWilliamson,
                    "quadratic part lacks the x_" + std::to_string(j + 1) + " xi_" +
                        std::to_string(j + 1) + " term");
      }
      lay.a.push_back(b(j, j));
      ++lay.ell;
      rest(j, j) = 0.0;
      j += 1;
    }
  }
  if (n > 0 && rest.cwiseAbs().maxCoeff() > eps) {
    throw Error(ErrorKind::NotWilliamson, "quadratic part couples different blocks");
  }
  return lay;
}

namespace {

Jet<double> real_part_checked(const Jet<Complex>& z, double& defect) {
  for (const auto& [m, c] : z.terms()) defect = std::max(defect, std::abs(c.imag()));
  return z.map_coefficients([](const Complex& c) { return c.real(); });
}

Jet<double> jet_difference_max(const Jet<double>& a, const Jet<double>& b, double& mx) {
  Jet<double> d = a - b;
  mx = d.max_abs_coefficient();
  return d;
}

}  // namespace

RealNormalForm birkhoff_normalize_real(const Jet<double>& p, int order, const BirkhoffOptions& opts) {
  RealNormalForm out;
  out.dof = p.dof();
  out.order = order;
  out.layout = williamson_layout(p);
  const int n = p.dof(), ell = out.layout.ell, m = out.layout.m;
  out.lambda = ComplexVector(n);
  for (int j = 0; j < ell; ++j) out.lambda(j) = out.layout.a[static_cast<std::size_t>(j)];
  for (int j = 0; j < m; ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.lambda(ell + 2 * j) = Complex(out.layout.c[k], out.layout.d[k]);
    out.lambda(ell + 2 * j + 1) = Complex(out.layout.c[k], -out.layout.d[k]);
  }

  if (m == 0) {
    auto nf = birkhoff_normalize<double>(p, order, opts);
    out.generators = nf.generators;
    out.q0.dof = n;
    for (const auto& [e, c] : nf.q0.coeffs) out.q0.coeffs.emplace(e, Complex(c, 0.0));
    out.normal_form = nf.normal_form;
    out.transformed = nf.transformed;
  } else {
    const ComplexMatrix cm = complexification_matrix(ell, m);
    const ComplexMatrix cinv = cm.adjoint();
    Jet<Complex> pc = substitute_linear(p, cinv);
    // the quadratic part is diagonal up to rounding; rebuild it exactly
    Jet<Complex> quad(n, pc.order());
    for (int j = 0; j < n; ++j) {
      Monomial mono;
      mono.set_exponent(j, n, 1);
      mono.set_exponent(n + j, n, 1);
      quad.add_term(mono, out.lambda(j));
    }
    const double scale = std::max(1.0, out.lambda.cwiseAbs().maxCoeff());
    if ((pc.homogeneous_part(2) - quad).max_abs_coefficient() > 1e-12 * scale) {
      throw Error(ErrorKind::NormalizationFailed, "complexified quadratic part is not diagonal");
    }
    Jet<Complex> pc_clean(n, pc.order());
    for (const auto& [mono, c] : pc.terms())
      if (mono.degree() != 2) pc_clean.add_term(mono, c);
    pc_clean += quad;

    auto nf = birkhoff_normalize<Complex>(pc_clean, order, opts);
    double defect = 0.0;
    for (const auto& f : nf.generators) out.generators.push_back(real_part_checked(substitute_linear(f, cm), defect));
    out.normal_form = real_part_checked(substitute_linear(nf.normal_form, cm), defect);
    out.transformed = real_part_checked(substitute_linear(nf.transformed, cm), defect);
    out.q0 = nf.q0;
    out.realness_defect = defect;
    const double coeff_scale = std::max(1.0, p.max_abs_coefficient());
    if (defect > 1e-10 * coeff_scale) {
      std::ostringstream os;
      os << "real form of the loxodromic normalization has imaginary residue " << defect;
      throw Error(ErrorKind::NormalizationFailed, os.str());
    }
  }
  jet_difference_max(out.transformed, out.normal_form, out.max_non_normal);
  return out;
}

Jet<double> to_williamson_coordinates(const Jet<double>& p, const WilliamsonFrame& frame,
                                      double snap_tol) {
  if (frame.dof() != p.dof()) throw Error(ErrorKind::DimensionMismatch, "frame and jet differ in dof");
  Jet<double> q = substitute_linear(p, frame.S_inv);
  const Jet<double> quad = frame.normal_quadratic(q.order());
  const double scale = std::max(1.0, frame.frequencies().cwiseAbs().maxCoeff());
  const double dev = (q.homogeneous_part(2) - quad).max_abs_coefficient();
  if (dev > snap_tol * scale) {
    std::ostringstream os;
    os << "quadratic part deviates from the block form by " << dev;
    throw Error(ErrorKind::NormalizationFailed, os.str());
  }
  Jet<double> out(q.dof(), q.order());
  for (const auto& [m, c] : q.terms())
    if (m.degree() != 2) out.add_term(m, c);
  out += quad;
  return out;
}

PhasePoint hyperbolic_action_angle(const std::vector<double>& lambda, const std::vector<double>& iota,
                                   const std::vector<double>& phi) {
  const std::size_t n = lambda.size();
  if (n == 0 || iota.size() != n || phi.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "lambda, iota and phi must have the same nonzero length");
  }
  Vector x(static_cast<Eigen::Index>(n)), xi(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (iota[j] < 0.0) {
      throw Error(ErrorKind::NegativeAction, "action iota_" + std::to_string(j + 1) + " is negative");
    }
    if (!(lambda[j] > 0.0)) {
      throw Error(ErrorKind::DimensionMismatch, "frequencies must be positive");
    }
    const double r = std::sqrt(2.0 * lambda[j] * iota[j]);
    x(static_cast<Eigen::Index>(j)) = r * std::cosh(phi[j]) / lambda[j];
    xi(static_cast<Eigen::Index>(j)) = r * std::sinh(phi[j]);
  }
  return PhasePoint::from_blocks(x, xi);
}

}  // namespace hypnf
