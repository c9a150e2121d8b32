#include "hypnf/homological.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <exception>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace hypnf {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

CutoffPair::CutoffPair(int order, AnisotropicNorm b0, double r_lo, double r_hi)
    : order_(order), b0_(std::move(b0)), r_lo_(r_lo), r_hi_(r_hi) {
  if (order < 1) throw Error(ErrorKind::ParseError, "cutoff profile order must be at least 1");
  if (!(r_lo > 0.5 && r_lo < r_hi && r_hi < 2.0)) {
    throw Error(ErrorKind::ParseError, "cutoff transition must lie strictly inside (1/2, 2)");
  }
  // S(s) = s^{k+1} sum_j C(k+j, j) C(2k+1, k-j) (-s)^j
  const int k = order;
  coeffs_.assign(static_cast<std::size_t>(2 * k + 2), 0.0);
  for (int j = 0; j <= k; ++j) {
    const double sign = j % 2 == 0 ? 1.0 : -1.0;
    coeffs_[static_cast<std::size_t>(k + 1 + j)] = sign * binomial(k + j, j) * binomial(2 * k + 1, k - j);
  }
}

double CutoffPair::smoothstep(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double acc = 0.0;
  for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * s + coeffs_[i];
  return acc;
}

double CutoffPair::profile(double r) const {
  if (r <= r_lo_) return 1.0;
  if (r >= r_hi_) return 0.0;
  const double s = (std::log(r) - std::log(r_lo_)) / (std::log(r_hi_) - std::log(r_lo_));
  return 1.0 - smoothstep(s);
}

double CutoffPair::ratio(const Vector& rho) const {
  const auto nb = block_norms(rho, b0_);
  if (nb.x == 0.0) return nb.xi == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                       : std::numeric_limits<double>::infinity();
  return nb.xi / nb.x;
}

double CutoffPair::chi_out(const Vector& rho) const {
  const auto nb = block_norms(rho, b0_);
  if (nb.x == 0.0 && nb.xi == 0.0)
    throw Error(ErrorKind::OriginUndefined, "cutoff undefined at origin");
  if (nb.xi <= r_lo_ * nb.x) return 1.0;
  if (nb.xi >= r_hi_ * nb.x) return 0.0;
  return profile(nb.xi / nb.x);
}

double CutoffPair::profile_integral() const {
  auto f = [this](double r) { return profile(r); };
  const double mid = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, r_lo_, r_hi_, 15, 1e-15);
  return r_lo_ + mid;
}

CutoffPair make_partition(int order, const AnisotropicNorm& b0) { return CutoffPair(order, b0); }

HomologicalSolver::HomologicalSolver(Hamiltonian h, FlatFunction g, CutoffPair cut,
                                     HomologicalOptions opts)
    : h_(std::move(h)), g_(std::move(g)), cut_(std::move(cut)), opts_(opts) {
  if (g_.dof() != h_.dof() || cut_.B0().dim() != h_.dof())
    throw Error(ErrorKind::DimensionMismatch, "Hamiltonian, right-hand side and cutoff disagree on n");
  lambda1_ = opts_.lambda1 > 0.0 ? opts_.lambda1 : smallest_rate(h_);
  const int nflat = g_.certificate().order;
  if (!g_.identically_zero() && nflat * lambda1_ <= opts_.slack) {
    std::ostringstream m;
    m << "flatness order " << nflat << " times lambda_1 = " << nflat * lambda1_
      << " does not exceed the slack " << opts_.slack;
    throw Error(ErrorKind::DecayMarginTooSmall, m.str());
  }
  decay_ = nflat * (lambda1_ - opts_.slack);
  if (!g_.identically_zero() && decay_ <= 0.0) {
    std::ostringstream m;
    m << "slack " << opts_.slack << " exceeds lambda_1 = " << lambda1_;
    throw Error(ErrorKind::DecayMarginTooSmall, m.str());
  }
}

double HomologicalSolver::integrate_side(const Vector& rho, bool out_side, HomologicalValue& v,
                                         double& span) const {
  span = 0.0;
  const int n = h_.dof();
  const auto& b0 = cut_.B0();
  const double r_edge = out_side ? cut_.r_hi() : cut_.r_lo();
  const auto nb0 = block_norms(rho, b0);
  // the cutoff support ends at r_edge, and the ratio moves away from the support
  if (out_side ? nb0.xi >= r_edge * nb0.x : nb0.xi <= r_edge * nb0.x) return 0.0;

  const double mu_min = Eigen::SelfAdjointEigenSolver<Matrix>(b0.B0).eigenvalues().minCoeff();
  const double cone = out_side ? 1.0 + cut_.r_hi() * cut_.r_hi()
                               : 1.0 + 1.0 / (cut_.r_lo() * cut_.r_lo());
  const auto& cert = g_.certificate();
  const double max_time = opts_.max_time_factor / lambda1_;

  auto integrand = [&](const Vector& y) {
    const double gv = g_(y);
    if (gv == 0.0) return 0.0;
    const double chi = out_side ? cut_.chi_out(y) : cut_.chi_in(y);
    return chi * gv;
  };

  double total = 0.0, abs_total = 0.0, panel_err = 0.0, tail = 0.0;
  double min_norm = rho.norm();
  bool converged = false;

  OdeHooks hooks;
  hooks.lipschitz = [this, n](const Vector& y) { return h_.vector_field_jacobian(y.head(2 * n)).norm(); };
  hooks.in_domain = [this](const Vector& y) {
    return y.allFinite() && y.norm() < opts_.flow.chart_radius;
  };
  // leaving the cutoff support
  hooks.events.push_back({[&b0, n, r_edge](double, const Vector& y) {
                            return b0(y.tail(n)) - r_edge * b0(y.head(n));
                          },
                          out_side ? +1 : -1, true});
  hooks.on_step = [&](const DenseStep& step, double t_end) {
    auto f = [&](double t) { return integrand(step.eval(t)); };
    double err = 0.0;
    const double a = std::min(step.t0, t_end), b = std::max(step.t0, t_end);
    double piece = 0.0;
    if (b > a) {
      // split at the plateau edges of the cutoff, where the integrand is only C^k
      std::vector<double> cuts{a, b};
      for (double edge : {cut_.r_lo(), cut_.r_hi()}) {
        auto gap = [&](double t) {
          const Vector y = step.eval(t);
          return b0(y.tail(n)) - edge * b0(y.head(n));
        };
        const double ga = gap(a), gb = gap(b);
        if (ga * gb < 0.0) {
          boost::uintmax_t iters = 100;
          auto tol = [](double l, double r) { return std::abs(r - l) <= 1e-15 * std::max(1.0, std::abs(l)); };
          auto r = boost::math::tools::toms748_solve(gap, a, b, ga, gb, tol, iters);
          cuts.push_back(0.5 * (r.first + r.second));
        }
      }
      std::sort(cuts.begin(), cuts.end());
      const double target = std::max(opts_.rel_tol, 1e-13);
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        if (cuts[c + 1] <= cuts[c]) continue;
        double e = 0.0;
        piece += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, cuts[c], cuts[c + 1], opts_.gk_depth, target, &e);
        err += e;
      }
    }
    total += piece;
    abs_total += std::abs(piece);
    panel_err += err;
    const Vector y = step.eval(t_end);
    min_norm = std::min(min_norm, y.norm());
    span = std::abs(t_end);
    // flat tail: the contracting block bounds the whole state in the support cone
    const auto nb = block_norms(y, b0);
    if (nb.x * nb.x + nb.xi * nb.xi < opts_.delta * opts_.delta) {
      const double contracting = out_side ? nb.x : nb.xi;
      const double state_bound = std::sqrt(cone * contracting * contracting / mu_min);
      tail = cert.constant * std::pow(state_bound, cert.order) / decay_;
      if (tail <= 0.5 * std::max(opts_.tol, opts_.rel_tol * std::abs(total))) {
        converged = true;
        return false;
      }
    } else {
      tail = std::numeric_limits<double>::infinity();
    }
    return true;
  };

  OdeOptions oo;
  oo.rtol = opts_.flow.rtol;
  oo.atol = opts_.flow.atol;
  oo.max_steps = opts_.flow.max_steps;
  OdeRhs rhs = [this](double, const Vector& y, Vector& dy) {
    dy.resize(y.size());
    h_.vector_field(y, dy);
  };
  const auto sol = integrate_dp5(rhs, 0.0, rho, out_side ? -max_time : max_time, oo, hooks);
  if (sol.stopped_by_event) {
    tail = 0.0;
  } else if (!converged) {
    std::ostringstream m;
    m << (out_side ? "backward" : "forward") << " integral did not terminate within t = "
      << max_time << " (tail bound " << tail << ")";
    throw Error(ErrorKind::HomologicalFailure, m.str());
  }
  v.tail_bound += tail;
  v.panel_error += panel_err;
  // integrand is homogeneous of degree about N_flat, so relative state error scales by N_flat + 1
  v.flow_error += (cert.order + 1.0) * abs_total * sol.global_error / std::max(min_norm, 1e-300);
  return total;
}

HomologicalValue HomologicalSolver::solve(const Vector& rho) const {
  if (rho.size() != 2 * h_.dof())
    throw Error(ErrorKind::DimensionMismatch, "evaluation point has the wrong dimension");
  if (rho.isZero(0.0)) throw Error(ErrorKind::OriginUndefined, "homological solution undefined at origin");
  HomologicalValue v;
  if (g_.identically_zero()) return v;
  double span = 0.0;
  v.f_out = integrate_side(rho, true, v, span);
  v.t_out = span;
  v.f_in = -integrate_side(rho, false, v, span);
  v.t_in = span;
  v.value = v.f_out + v.f_in;
  return v;
}

HomologicalValue solve_homological(const Hamiltonian& h, const FlatFunction& g,
                                   const CutoffPair& cut, const Vector& rho,
                                   const HomologicalOptions& opts) {
  return HomologicalSolver(h, g, cut, opts).solve(rho);
}

std::vector<HomologicalValue> solve_batch(const HomologicalSolver& solver,
                                          const std::vector<Vector>& points, ExecPolicy policy) {
  std::vector<HomologicalValue> out(points.size());
  const long count = static_cast<long>(points.size());
  if (policy == ExecPolicy::Serial) {
    for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = solver.solve(points[static_cast<std::size_t>(i)]);
    return out;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = solver.solve(points[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(hypnf_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ResidualReport residual_check(const Hamiltonian& h, const PointFunction& f, const PointFunction& g,
                              const std::vector<Vector>& points, double step, ExecPolicy policy,
                              const FlowOptions& flow) {
  ResidualReport rep;
  rep.rows.resize(points.size());
  auto row = [&](std::size_t i) {
    ResidualRow r;
    r.point = points[i];
    const Vector fwd = flow_map(h, points[i], step, flow);
    const Vector bwd = flow_map(h, points[i], -step, flow);
    r.derivative = (f(fwd) - f(bwd)) / (2.0 * step);
    r.g = g(points[i]);
    r.residual = std::abs(r.derivative - r.g);
    return r;
  };
  const long count = static_cast<long>(points.size());
  if (policy == ExecPolicy::Serial) {
    for (long i = 0; i < count; ++i) rep.rows[static_cast<std::size_t>(i)] = row(static_cast<std::size_t>(i));
  } else {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
      try {
        rep.rows[static_cast<std::size_t>(i)] = row(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(hypnf_residual_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  for (const auto& r : rep.rows) rep.max_residual = std::max(rep.max_residual, r.residual);
  return rep;
}

std::vector<Vector> read_points_csv(std::istream& is, int dof) {
  std::vector<Vector> pts;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (pts.empty() && lineno == 1) continue;  // header
      throw Error(ErrorKind::ParseError, "non-numeric point on line " + std::to_string(lineno));
    }
    if (static_cast<int>(vals.size()) != 2 * dof) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + " has " +
                                             std::to_string(vals.size()) + " values, expected " +
                                             std::to_string(2 * dof));
    }
    pts.push_back(Vector::Map(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return pts;
}

void write_homological_csv(std::ostream& os, const std::vector<Vector>& points,
                           const std::vector<HomologicalValue>& values,
                           const std::vector<double>& residuals) {
  if (points.empty()) {
    os << "f_value,tail_bound,panel_error,residual\n";
    return;
  }
  const int n = static_cast<int>(points.front().size() / 2);
  for (int i = 1; i <= n; ++i) os << "x" << i << ",";
  for (int i = 1; i <= n; ++i) os << "xi" << i << ",";
  os << "f_value,tail_bound,panel_error,residual\n" << std::setprecision(17);
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (Eigen::Index i = 0; i < points[k].size(); ++i) os << points[k][i] << ",";
    os << values[k].value << "," << values[k].tail_bound << "," << values[k].panel_error << ",";
    if (k < residuals.size()) {
      os << residuals[k];
    } else {
      os << "nan";
    }
    os << "\n";
  }
}

}  // namespace hypnf
