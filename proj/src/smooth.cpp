#include "hypnf/smooth.hpp"

#include <cmath>
#include <limits>

namespace hypnf {

// ---------------------------------------------------------------- PolynomialField

PolynomialField::PolynomialField(const Jet<double>& jet) : dof_(jet.dof()), order_(jet.order()) {
  const int vars = 2 * dof_;
  value_ = compile(jet);
  grad_.reserve(static_cast<std::size_t>(vars));
  for (int v = 0; v < vars; ++v) grad_.push_back(compile(jet.derivative(v)));
  for (int v = 0; v < vars; ++v) {
    const Jet<double> dv = jet.derivative(v);
    for (int w = v; w < vars; ++w) hess_.push_back(compile(dv.derivative(w)));
  }
}

PolynomialField::Compiled PolynomialField::compile(const Jet<double>& jet) const {
  Compiled c;
  const int vars = 2 * dof_;
  for (const auto& [m, coeff] : jet.terms()) {
    c.coeffs.push_back(coeff);
    for (int v = 0; v < vars; ++v) c.exps.push_back(static_cast<std::uint8_t>(m.exponent(v, dof_)));
  }
  return c;
}

void PolynomialField::fill_powers(const Eigen::Ref<const Vector>& rho,
                                  std::vector<double>& powers) const {
  const int vars = 2 * dof_;
  if (rho.size() != vars) {
    throw Error(ErrorKind::DimensionMismatch, "polynomial evaluated at a point of wrong dimension");
  }
  const int stride = order_ + 1;
  powers.assign(static_cast<std::size_t>(vars * stride), 1.0);
  for (int v = 0; v < vars; ++v) {
    double* p = powers.data() + v * stride;
    for (int k = 1; k <= order_; ++k) p[k] = p[k - 1] * rho[v];
  }
}

double PolynomialField::eval(const Compiled& c, const double* powers) const {
  const int vars = 2 * dof_;
  const int stride = order_ + 1;
  double acc = 0.0;
  const std::uint8_t* e = c.exps.data();
  for (double coeff : c.coeffs) {
    double t = coeff;
    for (int v = 0; v < vars; ++v)
      if (e[v]) t *= powers[v * stride + e[v]];
    acc += t;
    e += vars;
  }
  return acc;
}

double PolynomialField::value(const Eigen::Ref<const Vector>& rho) const {
  thread_local std::vector<double> powers;
  fill_powers(rho, powers);
  return eval(value_, powers.data());
}

void PolynomialField::add_gradient(const Eigen::Ref<const Vector>& rho, double scale,
                                   Eigen::Ref<Vector> grad) const {
  thread_local std::vector<double> powers;
  fill_powers(rho, powers);
  for (int v = 0; v < 2 * dof_; ++v) {
    const auto& c = grad_[static_cast<std::size_t>(v)];
    if (!c.empty()) grad[v] += scale * eval(c, powers.data());
  }
}

void PolynomialField::add_hessian(const Eigen::Ref<const Vector>& rho, double scale,
                                  Eigen::Ref<Matrix> hess) const {
  thread_local std::vector<double> powers;
  fill_powers(rho, powers);
  const int vars = 2 * dof_;
  std::size_t k = 0;
  for (int v = 0; v < vars; ++v) {
    for (int w = v; w < vars; ++w, ++k) {
      if (hess_[k].empty()) continue;
      const double h = scale * eval(hess_[k], powers.data());
      hess(v, w) += h;
      if (w != v) hess(w, v) += h;
    }
  }
}

// ---------------------------------------------------------------- MonomialBump

MonomialBump::MonomialBump(int dof, Monomial monomial, double eps, double radius, double plateau)
    : dof_(dof), monomial_(monomial), eps_(eps), radius_(radius), plateau_(plateau) {
  if (dof < 1 || dof > kMaxDof) throw Error(ErrorKind::DimensionMismatch, "bump dof out of range");
  if (!(plateau > 0.0 && plateau < 1.0)) {
    throw Error(ErrorKind::ParseError, "bump plateau must lie in (0, 1)");
  }
}

namespace {

// e^{-1/u} and its first two derivatives, zero for u <= 0.
void edge(double u, double& f, double& df, double& d2f) {
  if (u <= 0.0) {
    f = df = d2f = 0.0;
    return;
  }
  f = std::exp(-1.0 / u);
  const double u2 = u * u;
  df = f / u2;
  d2f = f * (1.0 / (u2 * u2) - 2.0 / (u2 * u));
}

}  // namespace

void MonomialBump::bump(double s, double& psi, double& dpsi, double& d2psi) const {
  if (s <= plateau_) {
    psi = 1.0;
    dpsi = d2psi = 0.0;
    return;
  }
  if (s >= 1.0) {
    psi = dpsi = d2psi = 0.0;
    return;
  }
  // h(u) = P / (P + Q), P = e(u), Q = e(1 - u), u = (1 - s) / (1 - plateau)
  const double u = (1.0 - s) / (1.0 - plateau_);
  double p, dp, d2p, q, dq, d2q;
  edge(u, p, dp, d2p);
  edge(1.0 - u, q, dq, d2q);
  dq = -dq;  // d/du of e(1 - u)
  const double d = p + q;
  const double num = dp * q - p * dq;
  const double dnum = d2p * q - p * d2q;
  const double dd = dp + dq;
  const double h = p / d;
  const double dh = num / (d * d);
  const double d2h = (dnum * d - 2.0 * num * dd) / (d * d * d);
  const double du = -1.0 / (1.0 - plateau_);
  psi = h;
  dpsi = dh * du;
  d2psi = d2h * du * du;
}

void MonomialBump::monomial_derivs(const Eigen::Ref<const Vector>& rho, double& m, Vector* grad,
                                   Matrix* hess) const {
  const int vars = 2 * dof_;
  if (rho.size() != vars) {
    throw Error(ErrorKind::DimensionMismatch, "bump evaluated at a point of wrong dimension");
  }
  // p[v][k] = rho_v^(e_v - k) * e_v (e_v - 1) ... falling factorial, for k = 0, 1, 2
  std::array<std::array<double, 3>, 2 * kMaxDof> p{};
  for (int v = 0; v < vars; ++v) {
    const int e = monomial_.exponent(v, dof_);
    const double x = rho[v];
    p[v][0] = std::pow(x, e);
    p[v][1] = e >= 1 ? e * std::pow(x, e - 1) : 0.0;
    p[v][2] = e >= 2 ? e * (e - 1) * std::pow(x, e - 2) : 0.0;
  }
  auto prod_except = [&](int a, int b, int ka, int kb) {
    double t = eps_;
    for (int v = 0; v < vars; ++v) {
      int k = 0;
      if (v == a) k += ka;
      if (v == b) k += kb;
      t *= p[v][k];
    }
    return t;
  };
  m = prod_except(-1, -1, 0, 0);
  if (grad) {
    for (int v = 0; v < vars; ++v) (*grad)[v] = prod_except(v, -1, 1, 0);
  }
  if (hess) {
    for (int v = 0; v < vars; ++v)
      for (int w = v; w < vars; ++w) {
        const double h = v == w ? prod_except(v, -1, 2, 0) : prod_except(v, w, 1, 1);
        (*hess)(v, w) = h;
        (*hess)(w, v) = h;
      }
  }
}

double MonomialBump::value(const Eigen::Ref<const Vector>& rho) const {
  double m;
  monomial_derivs(rho, m, nullptr, nullptr);
  if (radius_ <= 0.0) return m;
  double psi, dpsi, d2psi;
  bump(rho.squaredNorm() / (radius_ * radius_), psi, dpsi, d2psi);
  return m * psi;
}

void MonomialBump::add_gradient(const Eigen::Ref<const Vector>& rho, double scale,
                                Eigen::Ref<Vector> grad) const {
  double m;
  Vector gm(rho.size());
  monomial_derivs(rho, m, &gm, nullptr);
  if (radius_ <= 0.0) {
    grad += scale * gm;
    return;
  }
  const double r2 = radius_ * radius_;
  double psi, dpsi, d2psi;
  bump(rho.squaredNorm() / r2, psi, dpsi, d2psi);
  if (psi == 0.0 && dpsi == 0.0) return;
  grad += scale * (gm * psi + m * dpsi * (2.0 / r2) * rho);
}

void MonomialBump::add_hessian(const Eigen::Ref<const Vector>& rho, double scale,
                               Eigen::Ref<Matrix> hess) const {
  double m;
  Vector gm(rho.size());
  Matrix hm(rho.size(), rho.size());
  monomial_derivs(rho, m, &gm, &hm);
  if (radius_ <= 0.0) {
    hess += scale * hm;
    return;
  }
  const double r2 = radius_ * radius_;
  double psi, dpsi, d2psi;
  bump(rho.squaredNorm() / r2, psi, dpsi, d2psi);
  if (psi == 0.0 && dpsi == 0.0 && d2psi == 0.0) return;
  const Vector gw = dpsi * (2.0 / r2) * rho;
  Matrix hw = d2psi * (4.0 / (r2 * r2)) * rho * rho.transpose();
  hw.diagonal().array() += dpsi * 2.0 / r2;
  hess += scale * (hm * psi + gm * gw.transpose() + gw * gm.transpose() + m * hw);
}

// ---------------------------------------------------------------- FlatFunction

FlatFunction::FlatFunction(std::shared_ptr<const ScalarField> field, FlatnessCertificate cert,
                           bool identically_zero)
    : field_(std::move(field)), cert_(cert), zero_(identically_zero) {
  if (!field_) throw Error(ErrorKind::DimensionMismatch, "flat function needs a field");
  if (cert_.order < 0 || cert_.constant < 0.0) {
    throw Error(ErrorKind::ParseError, "flatness certificate must be nonnegative");
  }
}

FlatFunction FlatFunction::zero(int dof) {
  return FlatFunction(std::make_shared<ZeroField>(dof), {255, 0.0}, true);
}

FlatFunction FlatFunction::monomial_bump(int dof, const Monomial& m, double eps, double radius,
                                         double plateau) {
  auto field = std::make_shared<MonomialBump>(dof, m, eps, radius, plateau);
  if (eps == 0.0) return FlatFunction(field, {255, 0.0}, true);
  // |x^a xi^b| <= |rho|^deg and 0 <= psi <= 1
  return FlatFunction(field, {m.degree(), std::abs(eps)}, false);
}

CertificateCheck validate_certificate(const FlatFunction& g, const std::vector<Vector>& directions,
                                      double t_max, double shrink, int samples) {
  CertificateCheck out;
  out.min_slope = std::numeric_limits<double>::infinity();
  if (g.identically_zero()) {
    out.ok = true;
    return out;
  }
  const auto& cert = g.certificate();
  for (const auto& dir : directions) {
    const Vector u = dir / dir.norm();
    double prev_log_t = 0.0, prev_log_g = 0.0;
    bool have_prev = false;
    double slope_min_ray = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double t = t_max * std::pow(shrink, static_cast<double>(i) / (samples - 1));
      const double val = std::abs(g(t * u));
      out.max_ratio = std::max(out.max_ratio, val / (cert.constant * std::pow(t, cert.order)));
      if (val == 0.0) {
        have_prev = false;
        continue;
      }
      const double lt = std::log(t), lg = std::log(val);
      if (have_prev) slope_min_ray = std::min(slope_min_ray, (prev_log_g - lg) / (prev_log_t - lt));
      prev_log_t = lt;
      prev_log_g = lg;
      have_prev = true;
    }
    if (std::isfinite(slope_min_ray)) out.min_slope = std::min(out.min_slope, slope_min_ray);
  }
  out.ok = out.min_slope >= cert.order - 0.1 && out.max_ratio <= 1.0 + 1e-12;
  return out;
}

}  // namespace hypnf
