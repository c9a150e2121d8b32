#include "hypnf/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "hypnf/normal_form.hpp"

namespace hypnf {

namespace {

template <class F>
void for_each_index(long count, ExecPolicy policy, F&& body) {
  if (policy == ExecPolicy::Serial) {
    for (long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(hypnf_deformation_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

// K^T J K - J for K = I + D, D from centered displacement differences
double jacobian_defect(const std::vector<Vector>& plus, const std::vector<Vector>& minus,
                       const std::vector<double>& steps) {
  const auto dim = static_cast<Eigen::Index>(plus.size());
  Matrix k = Matrix::Identity(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const auto i = static_cast<std::size_t>(c);
    k.col(c) += (plus[i] - minus[i]) / (2.0 * steps[i]);
  }
  return symplectic_defect(k);
}

}  // namespace

void DeformationProblem::validate() const {
  const int n = q0.dof();
  if (r.dof() != n) throw Error(ErrorKind::DimensionMismatch, "remainder and q0 disagree on n");
  region.validate(n);
  if (s_steps < 1) throw Error(ErrorKind::ParseError, "s_steps must be at least 1");
  if (!(quad_tol > 0.0) || !(ode_tol > 0.0))
    throw Error(ErrorKind::ParseError, "tolerances must be positive");
  action_form(q0);
  const auto lay = williamson_layout(q0);
  if (lay.m != 0)
    throw Error(ErrorKind::NotWilliamson, "q0 must consist of real saddle blocks");
  for (double a : lay.a) {
    if (!(a > 0.0)) throw Error(ErrorKind::NotWilliamson, "q0 has a non-positive saddle rate");
  }
  if (!r.identically_zero() && r.certificate().order < 1)
    throw Error(ErrorKind::DecayMarginTooSmall, "remainder carries no flatness certificate");
}

GeneratorField::GeneratorField(Jet<double> q0, FlatFunction r, CutoffPair cut,
                               HomologicalOptions opts, double step_factor)
    : q0_(std::move(q0)), r_(std::move(r)), cut_(std::move(cut)), opts_(opts),
      step_factor_(step_factor) {}

HomologicalSolver GeneratorField::solver(double s) const {
  return HomologicalSolver(hamiltonian(s), r_, cut_, opts_);
}

GeneratorField::Sample GeneratorField::operator()(double s, const Vector& y) const {
  const auto dim = y.size();
  const int n = static_cast<int>(dim / 2);
  Sample out;
  out.gradient = Vector::Zero(dim);
  out.velocity = Vector::Zero(dim);
  // the origin is a fixed point of every kappa_s since r is flat there
  if (r_.identically_zero() || y.isZero(0.0)) return out;
  const auto solve = solver(s);
  const double scale = y.norm();
  double err = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double h = step_factor_ * std::max(std::abs(y[i]), 0.1 * scale);
    double f[4], e[4];
    const double offs[4] = {h, -h, 2.0 * h, -2.0 * h};
    for (int k = 0; k < 4; ++k) {
      Vector z = y;
      z[i] += offs[k];
      const auto v = solve.solve(z);
      f[k] = v.value;
      e[k] = v.error_estimate();
    }
    const double d2 = (f[0] - f[1]) / (2.0 * h);
    const double d4 = (8.0 * (f[0] - f[1]) - (f[2] - f[3])) / (12.0 * h);
    out.gradient[i] = d4;
    const double noise = (8.0 * (e[0] + e[1]) + e[2] + e[3]) / (12.0 * h);
    err = std::max(err, std::abs(d2 - d4) + noise);
  }
  // H_f = J grad f: x' = df/dxi, xi' = -df/dx
  out.velocity.head(n) = out.gradient.tail(n);
  out.velocity.tail(n) = -out.gradient.head(n);
  out.error = err;
  return out;
}

KappaMap::KappaMap(std::shared_ptr<const GeneratorField> field, int s_steps, double rtol,
                   double atol, long max_steps, bool identity)
    : field_(std::move(field)), s_steps_(s_steps), rtol_(rtol), atol_(atol),
      max_steps_(max_steps), identity_(identity) {}

KappaTrace KappaMap::trace(const Vector& rho) const {
  KappaTrace tr;
  tr.rho = rho;
  const auto dim = rho.size();
  tr.s.push_back(0.0);
  tr.displacement.push_back(Vector::Zero(dim));
  tr.node_error.push_back(0.0);
  if (identity_) {
    tr.node_gradient.push_back(Vector::Zero(dim));
    tr.node_speed.push_back(0.0);
    for (int k = 1; k <= s_steps_; ++k) {
      tr.s.push_back(static_cast<double>(k) / s_steps_);
      tr.displacement.push_back(Vector::Zero(dim));
      tr.node_gradient.push_back(Vector::Zero(dim));
      tr.node_speed.push_back(0.0);
      tr.node_error.push_back(0.0);
    }
    return tr;
  }

  const GeneratorField& field = *field_;
  auto eval = [&](double s, const Vector& d) {
    ++tr.field_evaluations;
    return field(s, rho + d);
  };
  // Bogacki-Shampine 3(2) with first-same-as-last
  Vector d = Vector::Zero(dim);
  double s = 0.0;
  auto k1 = eval(0.0, d);
  tr.node_gradient.push_back(k1.gradient);
  tr.node_speed.push_back(k1.velocity.norm());
  double h = 1.0 / s_steps_;
  for (int node = 1; node <= s_steps_; ++node) {
    const double target = static_cast<double>(node) / s_steps_;
    while (s < target) {
      if (tr.steps + tr.rejected >= max_steps_) {
        throw Error(ErrorKind::StepSizeCollapse, "s-integration exceeded the step budget");
      }
      bool last = false;
      const double proposed = h;
      if (s + h >= target - 1e-14 * target) {
        h = target - s;
        last = true;
      }
      const auto k2 = eval(s + 0.5 * h, d + 0.5 * h * k1.velocity);
      const auto k3 = eval(s + 0.75 * h, d + 0.75 * h * k2.velocity);
      const Vector dn = d + h * (2.0 / 9.0 * k1.velocity + 1.0 / 3.0 * k2.velocity +
                                 4.0 / 9.0 * k3.velocity);
      const auto k4 = eval(last ? target : s + h, dn);
      const Vector err = h * (-5.0 / 72.0 * k1.velocity + 1.0 / 12.0 * k2.velocity +
                              1.0 / 9.0 * k3.velocity - 1.0 / 8.0 * k4.velocity);
      double en = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double sc = atol_ + rtol_ * std::max(std::abs(d[i]), std::abs(dn[i]));
        en = std::max(en, std::abs(err[i]) / sc);
      }
      const bool accept = en <= 1.0;
      if (accept) {
        s = last ? target : s + h;
        d = dn;
        tr.ode_error += err.lpNorm<Eigen::Infinity>();
        tr.field_error +=
            h * std::max({k1.error, k2.error, k3.error, k4.error});
        k1 = k4;
        ++tr.steps;
      } else {
        ++tr.rejected;
      }
      const double fac = en > 0.0 ? 0.9 * std::pow(en, -1.0 / 3.0) : 5.0;
      h *= std::clamp(fac, 0.2, 5.0);
      // a step clipped at a node does not shrink the next proposal
      if (accept && last) h = std::max(h, proposed);
      if (!accept && h < 1e-12) throw Error(ErrorKind::StepSizeCollapse, "s-step collapsed");
    }
    tr.s.push_back(target);
    tr.displacement.push_back(d);
    tr.node_gradient.push_back(k1.gradient);
    tr.node_speed.push_back(k1.velocity.norm());
    tr.node_error.push_back(tr.error_estimate());
  }
  return tr;
}

ResidualStats residual_stats(std::vector<double> values) {
  ResidualStats st;
  if (values.empty()) return st;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  st.max = values.back();
  st.mean = sum / static_cast<double>(values.size());
  st.q50 = quantile(values, 0.5);
  st.q90 = quantile(values, 0.9);
  st.q99 = quantile(values, 0.99);
  return st;
}

namespace {

ConjugacyReport finish_report(ConjugacyReport rep) {
  rep.residual = residual_stats(rep.residuals);
  rep.baseline = residual_stats(rep.baselines);
  rep.reduction = rep.residual.max > 0.0 ? rep.baseline.max / rep.residual.max
                                         : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace

ConjugacyReport verify_conjugacy(const Hamiltonian& p, const PointMap& kappa, const Jet<double>& q0,
                                 const std::vector<Vector>& grid, ExecPolicy policy) {
  const Hamiltonian q(q0);
  ConjugacyReport rep;
  rep.points = grid;
  rep.images.resize(grid.size());
  rep.residuals.resize(grid.size());
  rep.baselines.resize(grid.size());
  for_each_index(static_cast<long>(grid.size()), policy, [&](std::size_t i) {
    rep.images[i] = kappa(grid[i]);
    const double base = q.value(grid[i]);
    rep.residuals[i] = std::abs(p.value(rep.images[i]) - base);
    rep.baselines[i] = std::abs(p.value(grid[i]) - base);
  });
  return finish_report(std::move(rep));
}

ConjugacyReport verify_conjugacy(const Hamiltonian& p, const KappaMap& kappa, const Jet<double>& q0,
                                 const std::vector<Vector>& grid, ExecPolicy policy) {
  const Hamiltonian q(q0);
  ConjugacyReport rep;
  rep.points = grid;
  rep.images.resize(grid.size());
  rep.residuals.resize(grid.size());
  rep.baselines.resize(grid.size());
  rep.errors.resize(grid.size());
  for_each_index(static_cast<long>(grid.size()), policy, [&](std::size_t i) {
    const auto tr = kappa.trace(grid[i]);
    rep.images[i] = tr.image();
    rep.errors[i] = tr.error_estimate();
    const double base = q.value(grid[i]);
    rep.residuals[i] = std::abs(p.value(rep.images[i]) - base);
    rep.baselines[i] = std::abs(p.value(grid[i]) - base);
  });
  return finish_report(std::move(rep));
}

std::vector<Vector> plane_grid(int dof, double half_width, int size) {
  if (size < 2) throw Error(ErrorKind::ParseError, "grid size must be at least 2");
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(size * size));
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      Vector v = Vector::Zero(2 * dof);
      v[0] = -half_width + 2.0 * half_width * i / (size - 1.0);
      v[dof] = -half_width + 2.0 * half_width * j / (size - 1.0);
      pts.push_back(v);
    }
  }
  return pts;
}

double map_symplectic_defect(const PointMap& kappa, const Vector& rho, double rel_step) {
  const auto dim = rho.size();
  const double h = rel_step * std::max(rho.norm(), 1e-3);
  Matrix k(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    Vector a = rho, b = rho;
    a[c] += h;
    b[c] -= h;
    k.col(c) = (kappa(a) - kappa(b)) / (2.0 * h);
  }
  return symplectic_defect(k);
}

DecayFit near_identity_decay(const KappaMap& kappa, const Vector& direction, double t_max,
                             double t_min, int samples, int power, ExecPolicy policy) {
  if (samples < 2 || !(t_min > 0.0) || !(t_max > t_min))
    throw Error(ErrorKind::ParseError, "decay ray needs 0 < t_min < t_max and at least 2 samples");
  DecayFit fit;
  fit.power = power;
  fit.radii.resize(static_cast<std::size_t>(samples));
  fit.defects.resize(static_cast<std::size_t>(samples));
  const Vector dir = direction.normalized();
  for_each_index(samples, policy, [&](std::size_t i) {
    const double t = t_max * std::pow(t_min / t_max, static_cast<double>(i) / (samples - 1));
    fit.radii[i] = t;
    fit.defects[i] = kappa.displacement(t * dir).norm();
  });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    fit.max_ratio = std::max(fit.max_ratio, fit.defects[i] / std::pow(fit.radii[i], power));
    if (!(fit.defects[i] > 0.0)) continue;
    const double lx = std::log(fit.radii[i]), ly = std::log(fit.defects[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used >= 2) fit.slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
  return fit;
}

void write_conjugacy_csv(std::ostream& os, const ConjugacyReport& rep) {
  const int n = rep.points.empty() ? 0 : static_cast<int>(rep.points.front().size() / 2);
  for (int i = 1; i <= n; ++i) os << "x" << i << ",";
  for (int i = 1; i <= n; ++i) os << "xi" << i << ",";
  os << "residual,baseline,error_estimate\n" << std::setprecision(17);
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    for (Eigen::Index i = 0; i < rep.points[k].size(); ++i) os << rep.points[k][i] << ",";
    os << rep.residuals[k] << "," << rep.baselines[k] << ",";
    if (k < rep.errors.size()) {
      os << rep.errors[k];
    } else {
      os << "nan";
    }
    os << "\n";
  }
}

ConjugacyResult deform(const DeformationProblem& prob, const DeformationOptions& opts) {
  prob.validate();
  const int n = prob.dof();
  const bool zero = prob.r.identically_zero();
  const Hamiltonian h0(prob.q0);
  const double lambda1 = smallest_rate(h0);

  double slack_q0 = 0.0, slack_q1 = 0.0, slack = 0.0;
  if (!zero) {
    if (std::isnan(opts.slack)) {
      GronwallOptions go;
      go.flow = opts.flow;
      go.policy = opts.policy;
      slack_q0 = estimate_gronwall(h0, prob.region, opts.gronwall_samples, opts.seed, go).slack;
      slack_q1 = estimate_gronwall(prob.perturbed(), prob.region, opts.gronwall_samples,
                                   opts.seed, go).slack;
      slack = std::max(slack_q0, slack_q1);
    } else {
      slack = opts.slack;
    }
  }

  HomologicalOptions ho;
  ho.flow = opts.flow;
  ho.tol = opts.quad_abs_floor;
  ho.rel_tol = prob.quad_tol;
  ho.lambda1 = lambda1;
  ho.slack = slack;
  ho.delta = prob.region.delta;
  auto field = std::make_shared<const GeneratorField>(
      prob.q0, prob.r, make_partition(opts.cutoff_order, prob.region.B0), ho,
      std::cbrt(prob.quad_tol));
  // validates the decay margin at every s, since the margin does not depend on s
  if (!zero) field->solver(1.0);

  ConjugacyResult res{KappaMap(field, prob.s_steps, prob.ode_tol, opts.ode_atol,
                               opts.max_s_steps, zero),
                      {}, {}, lambda1, slack, slack_q0, slack_q1, 0.0, 0.0, false};
  const KappaMap& kappa = res.kappa1;

  // monitored samples: the points themselves, plus difference stencils for the Jacobian
  const int nd = std::max(opts.diagnostic_points, 1);
  const int ns = std::clamp(opts.symplectic_points, 0, nd);
  std::vector<Vector> diag;
  for (int k = 0; k < nd; ++k) {
    std::seed_seq seq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(k),
                      std::uint64_t{0x6465666f726d}};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(2 * n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
    diag.push_back(opts.diagnostic_radius * prob.region.delta * v.normalized());
  }
  std::vector<Vector> probes = diag;
  std::vector<double> jac_steps;
  for (int k = 0; k < ns; ++k) {
    const double hj = opts.jacobian_step * diag[static_cast<std::size_t>(k)].norm();
    jac_steps.push_back(hj);
    for (int c = 0; c < 2 * n; ++c) {
      for (double sgn : {1.0, -1.0}) {
        Vector z = diag[static_cast<std::size_t>(k)];
        z[c] += sgn * hj;
        probes.push_back(z);
      }
    }
  }
  std::vector<KappaTrace> traces(probes.size());
  for_each_index(static_cast<long>(probes.size()), opts.policy,
                 [&](std::size_t i) { traces[i] = kappa.trace(probes[i]); });

  double rmax = 0.0;
  for (const auto& v : diag) rmax = std::max(rmax, std::abs(prob.r(v)));
  for (int node = 0; node <= prob.s_steps; ++node) {
    const auto ni = static_cast<std::size_t>(node);
    NodeDiagnostics nd_out;
    nd_out.s = traces.front().s[ni];
    const Hamiltonian qs = field->hamiltonian(nd_out.s);
    Vector vf(2 * n);
    for (int k = 0; k < nd; ++k) {
      const auto& tr = traces[static_cast<std::size_t>(k)];
      const Vector y = tr.rho + tr.displacement[ni];
      nd_out.conjugacy_residual =
          std::max(nd_out.conjugacy_residual, std::abs(qs.value(y) - h0.value(tr.rho)));
      qs.vector_field(y, vf);
      const double hres = std::abs(tr.node_gradient[ni].dot(vf) - prob.r(y));
      nd_out.homological_residual =
          std::max(nd_out.homological_residual, rmax > 0.0 ? hres / rmax : hres);
      nd_out.generator_norm = std::max(nd_out.generator_norm, tr.node_speed[ni]);
      nd_out.error_estimate = std::max(nd_out.error_estimate, tr.node_error[ni]);
    }
    if (nd_out.s > 0.0 && rmax > 0.0)
      nd_out.normalized_residual = nd_out.conjugacy_residual / (nd_out.s * rmax);
    for (int k = 0; k < ns; ++k) {
      std::vector<Vector> plus, minus;
      const std::size_t base = static_cast<std::size_t>(nd + k * 4 * n);
      for (int c = 0; c < 2 * n; ++c) {
        plus.push_back(traces[base + static_cast<std::size_t>(2 * c)].displacement[ni]);
        minus.push_back(traces[base + static_cast<std::size_t>(2 * c + 1)].displacement[ni]);
      }
      const std::vector<double> steps(static_cast<std::size_t>(2 * n),
                                      jac_steps[static_cast<std::size_t>(k)]);
      nd_out.symplectic_defect =
          std::max(nd_out.symplectic_defect, jacobian_defect(plus, minus, steps));
    }
    res.max_symplectic_defect = std::max(res.max_symplectic_defect, nd_out.symplectic_defect);
    res.nodes.push_back(nd_out);
  }

  const std::size_t m = res.nodes.size();
  if (m >= 4) {
    const double a = res.nodes[m - 4].normalized_residual, b = res.nodes[m - 3].normalized_residual,
                 c = res.nodes[m - 2].normalized_residual, d = res.nodes[m - 1].normalized_residual;
    if (a < b && b < c && c < d && d > 0.5) {
      std::ostringstream msg;
      msg << "conjugacy residual grew over the last three s-nodes to " << d
          << " times s max|r|";
      throw Error(ErrorKind::ResidualDiverging, msg.str());
    }
  }

  const double hw =
      opts.grid_half_width > 0.0 ? opts.grid_half_width : 2.0 * prob.region.delta / 3.0;
  res.grid = verify_conjugacy(prob.perturbed(), kappa, prob.q0, plane_grid(n, hw, opts.grid_size),
                              opts.policy);
  for (double e : res.grid.errors) res.max_error_estimate = std::max(res.max_error_estimate, e);
  res.accepted = res.max_symplectic_defect <= opts.symp_tol &&
                 (zero || res.grid.residual.max < res.grid.baseline.max);
  return res;
}

}  // namespace hypnf
