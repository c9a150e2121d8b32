#include "hypnf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace hypnf {

namespace {

OdeOptions ode_options(const FlowOptions& f, double rtol) {
  OdeOptions o;
  o.rtol = rtol;
  o.atol = f.atol;
  o.max_steps = f.max_steps;
  return o;
}

OdeHooks flow_hooks(const Hamiltonian& h, const FlowOptions& opts) {
  OdeHooks hooks;
  const int dim = 2 * h.dof();
  hooks.lipschitz = [&h, dim](const Vector& y) {
    return h.vector_field_jacobian(y.head(dim)).norm();
  };
  const double radius = opts.chart_radius;
  hooks.in_domain = [radius, dim](const Vector& y) {
    return y.allFinite() && y.head(dim).norm() < radius;
  };
  return hooks;
}

void fill_samples(Trajectory& tr, bool variational) {
  const int dim = 2 * tr.dof;
  tr.times.clear();
  tr.states.clear();
  tr.dkappa.clear();
  auto push = [&](double t, const Vector& y) {
    tr.times.push_back(t);
    tr.states.push_back(y.head(dim));
    if (variational) tr.dkappa.push_back(Eigen::Map<const Matrix>(y.data() + dim, dim, dim));
  };
  if (tr.dense.steps.empty()) {
    push(tr.dense.t_start, tr.dense.y_end);
    return;
  }
  push(tr.dense.steps.front().t0, tr.dense.steps.front().start());
  for (std::size_t i = 0; i + 1 < tr.dense.steps.size(); ++i)
    push(tr.dense.steps[i].t1, tr.dense.steps[i].end());
  push(tr.dense.t_end, tr.dense.y_end);
}

Trajectory run_flow(const Hamiltonian& h, const Vector& rho0, double t0, double t1,
                    const FlowOptions& opts, bool variational) {
  const int n = h.dof();
  const int dim = 2 * n;
  if (rho0.size() != dim) {
    throw Error(ErrorKind::DimensionMismatch, "initial point has " + std::to_string(rho0.size()) +
                                                  " coordinates, expected " + std::to_string(dim));
  }
  Vector y0 = rho0;
  OdeRhs rhs;
  if (variational) {
    y0.resize(dim + dim * dim);
    y0.head(dim) = rho0;
    Eigen::Map<Matrix>(y0.data() + dim, dim, dim).setIdentity();
    rhs = [&h, dim](double, const Vector& y, Vector& dy) {
      dy.resize(y.size());
      h.vector_field(y.head(dim), dy.head(dim));
      const Matrix jac = h.vector_field_jacobian(y.head(dim));
      Eigen::Map<Matrix>(dy.data() + dim, dim, dim) =
          jac * Eigen::Map<const Matrix>(y.data() + dim, dim, dim);
    };
  } else {
    rhs = [&h](double, const Vector& y, Vector& dy) {
      dy.resize(y.size());
      h.vector_field(y, dy);
    };
  }
  const double p0 = h.value(rho0);
  const double energy_tol = opts.energy_tol_factor * (1.0 + std::abs(p0));
  double rtol = opts.rtol;
  for (int attempt = 0;; ++attempt) {
    Trajectory tr;
    tr.dof = n;
    tr.rtol_used = rtol;
    tr.atol_used = opts.atol;
    tr.dense = integrate_dp5(rhs, t0, y0, t1, ode_options(opts, rtol), flow_hooks(h, opts));
    tr.global_error = tr.dense.global_error;
    fill_samples(tr, variational);
    double drift = 0.0;
    for (const auto& s : tr.states) drift = std::max(drift, std::abs(h.value(s) - p0));
    tr.energy_drift = drift;
    if (drift <= energy_tol) return tr;
    if (attempt >= opts.energy_retries || rtol <= 1e-15) {
      std::ostringstream m;
      m << "energy drift " << drift << " exceeds " << energy_tol << " at rtol " << rtol;
      throw Error(ErrorKind::EnergyDrift, m.str());
    }
    rtol = std::max(rtol * 1e-2, 1e-15);
  }
}

Matrix variational_block(const Vector& y, int dim) {
  return Eigen::Map<const Matrix>(y.data() + dim, dim, dim);
}

}  // namespace

Vector Trajectory::state(double t) const { return dense(t).head(2 * dof); }

Matrix Trajectory::dkappa_at(double t) const {
  if (!has_dkappa()) throw Error(ErrorKind::DimensionMismatch, "trajectory has no variational data");
  return variational_block(dense(t), 2 * dof);
}

double Trajectory::max_symplectic_defect() const {
  double d = 0.0;
  for (const auto& m : dkappa) d = std::max(d, symplectic_defect(m));
  return d;
}

void Trajectory::write_csv(std::ostream& os) const {
  const int n = dof;
  const int dim = 2 * n;
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",xi" << i;
  if (has_dkappa())
    for (int r = 1; r <= dim; ++r)
      for (int c = 1; c <= dim; ++c) os << ",dkappa_" << r << "_" << c;
  os << "\n" << std::setprecision(17);
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << times[k];
    for (int i = 0; i < dim; ++i) os << "," << states[k][i];
    if (has_dkappa())
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) os << "," << dkappa[k](r, c);
    os << "\n";
  }
}

Trajectory integrate(const Hamiltonian& h, const Vector& rho0, double t0, double t1,
                     const FlowOptions& opts) {
  return run_flow(h, rho0, t0, t1, opts, false);
}

Trajectory variational_flow(const Hamiltonian& h, const Vector& rho0, double t0, double t1,
                            const FlowOptions& opts) {
  return run_flow(h, rho0, t0, t1, opts, true);
}

Vector flow_map(const Hamiltonian& h, const Vector& rho, double t, const FlowOptions& opts) {
  return integrate(h, rho, 0.0, t, opts).dense.y_end;
}

void RegionSpec::validate(int n) const {
  if (!(delta > 0.0)) throw Error(ErrorKind::ParseError, "region delta must be positive");
  if (!(cone_factor > 0.0)) throw Error(ErrorKind::ParseError, "cone factor must be positive");
  if (B0.dim() != n) {
    throw Error(ErrorKind::DimensionMismatch,
                "B0 is " + std::to_string(B0.dim()) + "x" + std::to_string(B0.dim()) +
                    " but the Hamiltonian has " + std::to_string(n) + " degrees of freedom");
  }
}

RegionSpec region_from_frame(const WilliamsonFrame& frame, double delta) {
  RegionSpec r;
  r.delta = delta;
  r.B0 = lyapunov_B0(williamson_A0(frame));
  return r;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Out: return "out";
    case Region::In: return "in";
    case Region::Both: return "both";
    case Region::Neither: return "neither";
  }
  return "neither";
}

BlockNorms block_norms(const Vector& rho, const AnisotropicNorm& b0) {
  const int n = b0.dim();
  if (rho.size() != 2 * n)
    throw Error(ErrorKind::DimensionMismatch, "phase point does not match the B0 dimension");
  return {b0(rho.head(n)), b0(rho.tail(n))};
}

Region region_membership(const Vector& rho, const RegionSpec& spec) {
  const auto nb = block_norms(rho, spec.B0);
  const bool ball = nb.x * nb.x + nb.xi * nb.xi < spec.delta * spec.delta;
  const bool out = ball && nb.xi < spec.cone_factor * nb.x;
  const bool in = ball && nb.x < spec.cone_factor * nb.xi;
  if (out && in) return Region::Both;
  if (out) return Region::Out;
  if (in) return Region::In;
  return Region::Neither;
}

const char* hit_name(HitKind k) {
  switch (k) {
    case HitKind::MinusOut: return "t_minus_out";
    case HitKind::PlusOut: return "t_plus_out";
    case HitKind::MinusIn: return "t_minus_in";
    case HitKind::PlusIn: return "t_plus_in";
  }
  return "";
}

const HitTime& HittingTimes::get(HitKind k) const {
  switch (k) {
    case HitKind::MinusOut: return t_minus_out;
    case HitKind::PlusOut: return t_plus_out;
    case HitKind::MinusIn: return t_minus_in;
    case HitKind::PlusIn: return t_plus_in;
  }
  return t_minus_out;
}

namespace {

SpectrumQuadruples jet_spectrum(const Hamiltonian& h) {
  const Matrix hess = quadratic_hessian(h.jet().homogeneous_part(2));
  return classify_spectrum(fundamental_matrix_from_hessian(hess, 1.0));
}

// Crossing function for each hitting time and its gradient.
struct Crossing {
  HitKind kind;
  const RegionSpec* spec;

  double g(const Vector& rho) const {
    const auto nb = block_norms(rho, spec->B0);
    const double c = spec->cone_factor;
    switch (kind) {
      case HitKind::MinusOut: return nb.xi - c * nb.x;
      case HitKind::PlusIn: return nb.x - c * nb.xi;
      case HitKind::PlusOut:
      case HitKind::MinusIn: return nb.x * nb.x + nb.xi * nb.xi - spec->delta * spec->delta;
    }
    return 0.0;
  }

  Vector grad(const Vector& rho) const {
    const int n = spec->B0.dim();
    const Matrix& b = spec->B0.B0;
    const auto nb = block_norms(rho, spec->B0);
    const double c = spec->cone_factor;
    Vector gr(2 * n);
    switch (kind) {
      case HitKind::MinusOut:
        gr.head(n) = -c * b * rho.head(n) / std::max(nb.x, 1e-300);
        gr.tail(n) = b * rho.tail(n) / std::max(nb.xi, 1e-300);
        break;
      case HitKind::PlusIn:
        gr.head(n) = b * rho.head(n) / std::max(nb.x, 1e-300);
        gr.tail(n) = -c * b * rho.tail(n) / std::max(nb.xi, 1e-300);
        break;
      default:
        gr.head(n) = 2.0 * b * rho.head(n);
        gr.tail(n) = 2.0 * b * rho.tail(n);
    }
    return gr;
  }
};

bool backward(HitKind k) { return k == HitKind::MinusOut || k == HitKind::MinusIn; }

}  // namespace

double smallest_rate(const Hamiltonian& h) {
  const auto spec = jet_spectrum(h);
  return spec.quads.front().lambda.real();
}

double largest_rate(const Hamiltonian& h) {
  const auto spec = jet_spectrum(h);
  return spec.quads.back().lambda.real();
}

HitTime hitting_time(const Hamiltonian& h, const Vector& rho0, const RegionSpec& spec, HitKind kind,
                     const HitOptions& opts) {
  spec.validate(h.dof());
  const auto nb = block_norms(rho0, spec.B0);
  if (nb.x == 0.0 && nb.xi == 0.0) {
    std::string label = hit_name(kind);
    label[0] = 'T';
    throw Error(ErrorKind::OriginUndefined, label + " undefined at origin");
  }
  HitTime out;
  // points numerically on the stable or unstable manifold never reach the crossing
  const bool on_plus = nb.xi < opts.flat_tol * nb.x;   // I_+ : xi = 0
  const bool on_minus = nb.x < opts.flat_tol * nb.xi;  // I_- : x = 0
  const bool infinite = ((kind == HitKind::MinusOut || kind == HitKind::MinusIn) && on_plus) ||
                        ((kind == HitKind::PlusOut || kind == HitKind::PlusIn) && on_minus);
  if (infinite) {
    out.status = HitTime::Status::Infinite;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  Crossing cr{kind, &spec};
  if (cr.g(rho0) >= 0.0) return out;  // already on or past the boundary

  const double lambda1 = opts.lambda1 > 0.0 ? opts.lambda1 : smallest_rate(h);
  const double horizon = opts.horizon > 0.0 ? opts.horizon : 50.0 / lambda1;
  const double t1 = backward(kind) ? -horizon : horizon;

  OdeHooks hooks = flow_hooks(h, opts.flow);
  hooks.event_root_tol = opts.root_tol;
  hooks.events.push_back({[&cr](double, const Vector& y) { return cr.g(y); }, +1, true});
  OdeRhs rhs = [&h](double, const Vector& y, Vector& dy) {
    dy.resize(y.size());
    h.vector_field(y, dy);
  };
  const auto sol = integrate_dp5(rhs, 0.0, rho0, t1, ode_options(opts.flow, opts.flow.rtol), hooks);
  if (!sol.stopped_by_event) {
    std::ostringstream m;
    m << hit_name(kind) << ": no crossing within horizon " << horizon;
    throw Error(ErrorKind::NoCrossingWithinHorizon, m.str());
  }
  const Vector& y = sol.y_end;
  Vector field(y.size());
  h.vector_field(y, field);
  const Vector gr = cr.grad(y);
  const double gdot = std::abs(gr.dot(field));
  out.value = std::abs(sol.t_end);
  out.error = opts.root_tol + (gdot > 0.0 ? gr.norm() * sol.global_error / gdot : 0.0);
  return out;
}

HittingTimes hitting_times(const Hamiltonian& h, const Vector& rho0, const RegionSpec& spec,
                           const HitOptions& opts) {
  HitOptions o = opts;
  if (o.lambda1 <= 0.0) o.lambda1 = smallest_rate(h);
  HittingTimes ht;
  ht.t_minus_out = hitting_time(h, rho0, spec, HitKind::MinusOut, o);
  ht.t_plus_out = hitting_time(h, rho0, spec, HitKind::PlusOut, o);
  ht.t_minus_in = hitting_time(h, rho0, spec, HitKind::MinusIn, o);
  ht.t_plus_in = hitting_time(h, rho0, spec, HitKind::PlusIn, o);
  if (o.check_reentry && !ht.t_plus_out.is_infinite() && ht.t_plus_out.value > 0.0) {
    // look for a return into the outgoing region after leaving the ball
    const double t_exit = ht.t_plus_out.value;
    const double extra = 2.0 / o.lambda1;
    Crossing ball{HitKind::PlusOut, &spec};
    OdeHooks hooks = flow_hooks(h, o.flow);
    hooks.events.push_back({[&ball](double, const Vector& y) { return ball.g(y); }, 0, false});
    OdeRhs rhs = [&h](double, const Vector& y, Vector& dy) {
      dy.resize(y.size());
      h.vector_field(y, dy);
    };
    try {
      const auto sol = integrate_dp5(rhs, 0.0, rho0, t_exit + extra, ode_options(o.flow, o.flow.rtol), hooks);
      for (const auto& hit : sol.hits) {
        if (hit.t > t_exit * (1.0 + 1e-9) + 1e-9 &&
            region_membership(sol(hit.t + 1e-6 * extra), spec) != Region::Neither &&
            region_membership(sol(hit.t + 1e-6 * extra), spec) != Region::In) {
          ht.reentry_detected = true;
        }
      }
    } catch (const Error&) {
      // leaving the chart after exit is not a re-entry
    }
  }
  return ht;
}

Rates log_norm_rates(const Hamiltonian& h, const Vector& rho, const AnisotropicNorm& b0) {
  const int n = b0.dim();
  Vector field(rho.size());
  h.vector_field(rho, field);
  Rates r;
  const double nx2 = b0.squared(rho.head(n));
  const double nxi2 = b0.squared(rho.tail(n));
  if (nx2 > 0.0) r.x = rho.head(n).dot(b0.B0 * field.head(n)) / nx2;
  if (nxi2 > 0.0) r.xi = -rho.tail(n).dot(b0.B0 * field.tail(n)) / nxi2;
  return r;
}

Vector sample_outgoing(const RegionSpec& spec, std::uint64_t seed, std::uint64_t index,
                       double min_radius_fraction) {
  const int n = spec.B0.dim();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(n), xi(n);
  for (int i = 0; i < n; ++i) x[i] = g(rng);
  for (int i = 0; i < n; ++i) xi[i] = g(rng);
  x /= spec.B0(x);
  xi /= spec.B0(xi);
  const double radius = spec.delta * (min_radius_fraction + (1.0 - min_radius_fraction) * u(rng));
  const double ratio = spec.cone_factor * 0.999 * u(rng);
  const double a = radius / std::sqrt(1.0 + ratio * ratio);
  Vector rho(2 * n);
  rho << a * x, ratio * a * xi;
  return rho;
}

namespace {

struct SampleStats {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  long points = 0;
  bool monotone = true;
};

SampleStats gronwall_sample(const Hamiltonian& h, const RegionSpec& spec, std::uint64_t seed,
                            std::uint64_t index, double lambda1, const GronwallOptions& opts) {
  SampleStats st;
  const Vector rho0 = sample_outgoing(spec, seed, index, opts.min_radius_fraction);
  const double horizon = 50.0 / lambda1;
  // the trajectory piece inside the outgoing region, backward and forward from rho0
  Crossing cone{HitKind::MinusOut, &spec};
  Crossing ball{HitKind::PlusOut, &spec};
  OdeRhs rhs = [&h](double, const Vector& y, Vector& dy) {
    dy.resize(y.size());
    h.vector_field(y, dy);
  };
  for (int side = 0; side < 2; ++side) {
    OdeHooks hooks = flow_hooks(h, opts.flow);
    hooks.events.push_back({[&cone](double, const Vector& y) { return cone.g(y); }, +1, true});
    hooks.events.push_back({[&ball](double, const Vector& y) { return ball.g(y); }, +1, true});
    const double t1 = side == 0 ? -horizon : horizon;
    const auto sol = integrate_dp5(rhs, 0.0, rho0, t1, ode_options(opts.flow, opts.flow.rtol), hooks);
    const double span = std::abs(sol.t_end);
    const int probes = static_cast<int>(
        std::clamp(span * opts.probes_per_unit_time, 10.0, 2000.0));
    for (int k = 0; k < probes; ++k) {
      const double t = sol.t_end * (static_cast<double>(k) / probes);
      const Vector rho = sol(t);
      if (region_membership(rho, spec) == Region::Neither || region_membership(rho, spec) == Region::In)
        continue;
      const Rates r = log_norm_rates(h, rho, spec.B0);
      for (double v : {r.x, r.xi}) {
        if (std::isnan(v)) continue;
        st.lo = std::min(st.lo, v);
        st.hi = std::max(st.hi, v);
        if (!(v > 0.0)) st.monotone = false;
      }
      ++st.points;
    }
  }
  return st;
}

}  // namespace

GronwallReport estimate_gronwall(const Hamiltonian& h, const RegionSpec& spec, int samples,
                                 std::uint64_t seed, const GronwallOptions& opts) {
  spec.validate(h.dof());
  if (samples < 1) throw Error(ErrorKind::InsufficientSamples, "at least one sample is required");
  const auto sp = jet_spectrum(h);
  GronwallReport rep;
  rep.lambda1 = sp.quads.front().lambda.real();
  rep.lambdan = sp.quads.back().lambda.real();
  rep.delta = spec.delta;
  rep.samples = samples;
  rep.seed = seed;

  std::vector<SampleStats> stats(static_cast<std::size_t>(samples));
  std::exception_ptr failure;
  if (opts.policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < samples; ++i) {
      try {
        stats[static_cast<std::size_t>(i)] =
            gronwall_sample(h, spec, seed, static_cast<std::uint64_t>(i), rep.lambda1, opts);
      } catch (...) {
#pragma omp critical(hypnf_gronwall_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  } else {
    for (int i = 0; i < samples; ++i)
      stats[static_cast<std::size_t>(i)] =
          gronwall_sample(h, spec, seed, static_cast<std::uint64_t>(i), rep.lambda1, opts);
  }
  if (failure) std::rethrow_exception(failure);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : stats) {
    lo = std::min(lo, s.lo);
    hi = std::max(hi, s.hi);
    rep.points_checked += s.points;
    rep.monotone = rep.monotone && s.monotone;
  }
  if (rep.points_checked < samples) {
    throw Error(ErrorKind::InsufficientSamples,
                "only " + std::to_string(rep.points_checked) +
                    " probe points landed inside the outgoing region");
  }
  rep.lambda_minus = lo;
  rep.lambda_plus = hi;
  rep.slack = std::max({0.0, rep.lambda1 - lo, hi - rep.lambdan});
  return rep;
}

DeltaCertificate certify_delta(const Hamiltonian& h, const RegionSpec& spec, int samples,
                               std::uint64_t seed, int max_halvings, const GronwallOptions& opts) {
  RegionSpec s = spec;
  for (int k = 0; k <= max_halvings; ++k) {
    auto rep = estimate_gronwall(h, s, samples, seed, opts);
    if (rep.monotone) return {s.delta, k, rep};
    s.delta *= 0.5;
  }
  throw Error(ErrorKind::InsufficientSamples,
              "monotonicity did not hold after " + std::to_string(max_halvings) + " halvings");
}

}  // namespace hypnf
