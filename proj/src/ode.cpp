#include "hypnf/ode.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <sstream>

namespace hypnf {

namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double scaled_norm(const Vector& v, const Vector& y0, const Vector& y1, const OdeOptions& o) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = v[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(std::max<Eigen::Index>(v.size(), 1)));
}

bool all_finite(const Vector& v) { return v.allFinite(); }

bool crosses(double before, double after, int direction) {
  const bool rise = before < 0.0 && after >= 0.0;
  const bool fall = before > 0.0 && after <= 0.0;
  if (direction > 0) return rise;
  if (direction < 0) return fall;
  return rise || fall;
}

}  // namespace

Vector DenseStep::eval(double t) const {
  const double h = t1 - t0;
  const double s = h == 0.0 ? 0.0 : (t - t0) / h;
  const double s1 = 1.0 - s;
  return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
}

Vector OdeSolution::operator()(double t) const {
  if (steps.empty()) return y_end;
  const bool fwd = forward();
  auto before = [&](double a, double b) { return fwd ? a < b : a > b; };
  if (!before(t, t_end) && t != t_end) {
    if (before(t_end, t)) return y_end;
  }
  // binary search on step end times
  std::size_t lo = 0, hi = steps.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (before(steps[mid].t1, t)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return steps[lo].eval(t);
}

OdeSolution integrate_dp5(const OdeRhs& f, double t0, const Vector& y0, double t1,
                          const OdeOptions& opts, const OdeHooks& hooks) {
  OdeSolution sol;
  sol.t_start = t0;
  sol.t_end = t0;
  sol.y_end = y0;
  if (t1 == t0) return sol;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const Eigen::Index dim = y0.size();

  Vector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), yt(dim), y1(dim),
      err(dim);
  Vector y = y0;
  double t = t0;
  f(t, y, k1);
  ++sol.evaluations;

  // initial step from the scale of y and y'
  double h;
  if (opts.initial_step > 0.0) {
    h = opts.initial_step;
  } else {
    const double dn0 = scaled_norm(y, y, y, opts);
    const double dn1 = scaled_norm(k1, y, y, opts);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, std::abs(t1 - t0));
    yt = y + dir * h0 * k1;
    f(t + dir * h0, yt, k2);
    ++sol.evaluations;
    const double dn2 = scaled_norm(Vector(k2 - k1), y, y, opts) / h0;
    const double mx = std::max(dn1, dn2);
    const double h1 = mx <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / mx, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opts.max_step, std::abs(t1 - t0)});

  std::vector<double> g_prev(hooks.events.size());
  for (std::size_t e = 0; e < hooks.events.size(); ++e) g_prev[e] = hooks.events[e].g(t, y);

  bool last_rejected = false;
  while (true) {
    if (sol.accepted + sol.rejected >= opts.max_steps) {
      std::ostringstream m;
      m << "step budget of " << opts.max_steps << " exhausted at t=" << t;
      throw Error(ErrorKind::StepSizeCollapse, m.str());
    }
    const double remaining = std::abs(t1 - t);
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h < opts.min_step_rel * std::max(1.0, std::abs(t))) {
      std::ostringstream m;
      m << "step size " << h << " collapsed at t=" << t;
      throw Error(ErrorKind::StepSizeCollapse, m.str());
    }
    const double hs = dir * h;

    yt = y + hs * a21 * k1;
    f(t + c2 * hs, yt, k2);
    yt = y + hs * (a31 * k1 + a32 * k2);
    f(t + c3 * hs, yt, k3);
    yt = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * hs, yt, k4);
    yt = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * hs, yt, k5);
    yt = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double t_new = final_step ? t1 : t + hs;
    f(t_new, yt, k6);
    y1 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(t_new, y1, k7);
    sol.evaluations += 6;

    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = all_finite(y1) && all_finite(err) ? scaled_norm(err, y, y1, opts)
                                                         : std::numeric_limits<double>::infinity();

    if (!(en <= 1.0)) {
      ++sol.rejected;
      const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
      h *= std::min(fac, 1.0);
      last_rejected = true;
      continue;
    }

    if (hooks.in_domain && !hooks.in_domain(y1)) {
      std::ostringstream m;
      m << "state left the chart at t=" << t_new;
      throw Error(ErrorKind::LeftDomain, m.str());
    }

    DenseStep step;
    step.t0 = t;
    step.t1 = t_new;
    step.r1 = y;
    step.r2 = y1 - y;
    step.r3 = hs * k1 - step.r2;
    step.r4 = step.r2 - hs * k7 - step.r3;
    step.r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

    // events: probe interior points to catch double crossings inside one step
    double t_stop = t_new;
    int stop_event = -1;
    for (std::size_t e = 0; e < hooks.events.size(); ++e) {
      const auto& ev = hooks.events[e];
      double ga = g_prev[e];
      double ta = t;
      const int probes = std::max(1, hooks.event_subsamples);
      for (int q = 1; q <= probes; ++q) {
        const double tb = q == probes ? t_new : t + (t_new - t) * q / probes;
        const Vector yb = q == probes ? y1 : step.eval(tb);
        const double gb = ev.g(tb, yb);
        if (crosses(ga, gb, ev.direction)) {
          auto gfun = [&](double s) { return ev.g(s, step.eval(s)); };
          double lo = std::min(ta, tb), hi = std::max(ta, tb);
          double glo = gfun(lo), ghi = gfun(hi);
          double root;
          if (glo == 0.0) {
            root = lo;
          } else if (ghi == 0.0) {
            root = hi;
          } else {
            boost::uintmax_t iters = 200;
            const double tol_abs = hooks.event_root_tol;
            auto tol = [tol_abs](double a, double b) { return std::abs(b - a) <= tol_abs; };
            auto r = boost::math::tools::toms748_solve(gfun, lo, hi, glo, ghi, tol, iters);
            root = 0.5 * (r.first + r.second);
          }
          EventHit hit;
          hit.index = static_cast<int>(e);
          hit.t = root;
          hit.y = step.eval(root);
          sol.hits.push_back(hit);
          if (ev.terminal && (stop_event < 0 || dir * (root - t_stop) < 0.0)) {
            t_stop = root;
            stop_event = static_cast<int>(e);
          }
          if (ev.terminal) break;
        }
        ga = gb;
        ta = tb;
      }
      g_prev[e] = ga;
    }
    if (stop_event >= 0) {
      // keep only hits up to the terminal time
      std::vector<EventHit> kept;
      for (auto& hh : sol.hits)
        if (dir * (hh.t - t_stop) <= 0.0) kept.push_back(std::move(hh));
      sol.hits = std::move(kept);
    }

    // global error: propagate the previous error with the local Lipschitz bound
    const double frac = std::abs((t_stop - t) / hs);
    const double lip = hooks.lipschitz ? hooks.lipschitz(y1) : 0.0;
    sol.global_error = sol.global_error * std::exp(lip * h * frac) + err.norm() * frac;

    ++sol.accepted;
    sol.steps.push_back(step);
    const bool keep_going = hooks.on_step ? hooks.on_step(sol.steps.back(), t_stop) : true;

    if (stop_event >= 0) {
      sol.t_end = t_stop;
      sol.y_end = step.eval(t_stop);
      sol.stopped_by_event = true;
      return sol;
    }
    t = t_new;
    y = y1;
    k1 = k7;
    sol.t_end = t;
    sol.y_end = y;
    if (!keep_going) {
      sol.stopped_by_callback = true;
      return sol;
    }
    if (final_step) return sol;

    double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-10), -0.2)));
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    h = std::min(h * fac, opts.max_step);
  }
}

}  // namespace hypnf
