#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "hypnf/flow.hpp"
#include "support.hpp"

using namespace hypnf;

namespace {

Monomial mono(std::vector<int> a, std::vector<int> b) { return Monomial::from_exponents(a, b); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::ParseError;
}

Hamiltonian saddle(double lambda = 1.0) {
  Jet<double> p(1, 2);
  p.add_term(mono({1}, {1}), lambda);
  return Hamiltonian(p);
}

Hamiltonian diag_saddle(const std::vector<double>& lam, int order = 2) {
  const int n = static_cast<int>(lam.size());
  Jet<double> p(n, order);
  for (int j = 0; j < n; ++j) {
    Monomial m;
    m.set_exponent(j, n, 1);
    m.set_exponent(n + j, n, 1);
    p.add_term(m, lam[static_cast<std::size_t>(j)]);
  }
  return Hamiltonian(p);
}

// xi^2 - x^2 + 0.1 x^3
Hamiltonian cubic_saddle() {
  Jet<double> p(1, 3);
  p.add_term(mono({0}, {2}), 1.0);
  p.add_term(mono({2}, {0}), -1.0);
  p.add_term(mono({3}, {0}), 0.1);
  return Hamiltonian(p);
}

// x xi (1 + c x + c xi): cubic saddle with straightened invariant manifolds
Hamiltonian cubic_williamson(double c) {
  Jet<double> p(1, 3);
  p.add_term(mono({1}, {1}), 1.0);
  p.add_term(mono({2}, {1}), c);
  p.add_term(mono({1}, {2}), c);
  return Hamiltonian(p);
}

RegionSpec spec_1d(double delta) {
  RegionSpec s;
  s.delta = delta;
  s.B0 = lyapunov_B0(Matrix::Identity(1, 1));
  return s;
}

}  // namespace

TEST_CASE("integrate: linear saddle closed form and energy") {
  auto h = saddle();
  Vector rho(2);
  rho << 1.0, 1.0;
  auto tr = integrate(h, rho, 0.0, 1.0);
  CHECK(std::abs(tr.dense.y_end[0] - std::exp(1.0)) < 1e-10);
  CHECK(std::abs(tr.dense.y_end[1] - std::exp(-1.0)) < 1e-10);
  for (const auto& s : tr.states) CHECK(std::abs(h.value(s) - 1.0) < 1e-12);
  // dense output between steps
  for (double t : {0.13, 0.5, 0.77}) {
    auto s = tr.state(t);
    CHECK(std::abs(s[0] - std::exp(t)) < 1e-9);
  }
  CHECK(tr.global_error < 1e-9);
  // backward direction
  auto back = integrate(h, rho, 0.0, -1.0);
  CHECK(std::abs(back.dense.y_end[0] - std::exp(-1.0)) < 1e-10);
}

TEST_CASE("integrate: cubic saddle matches a tighter reference run") {
  auto h = cubic_saddle();
  Vector rho(2);
  rho << 0.1, -0.05;
  FlowOptions loose;
  loose.rtol = 1e-10;
  FlowOptions tight;
  tight.rtol = 1e-13;
  auto a = integrate(h, rho, 0.0, 2.0, loose);
  auto b = integrate(h, rho, 0.0, 2.0, tight);
  CHECK((a.dense.y_end - b.dense.y_end).norm() < 1e-8);
  CHECK((a.dense.y_end - b.dense.y_end).norm() <= a.global_error + b.global_error);
  CHECK(a.energy_drift < 1e-9);
}

TEST_CASE("integrate: errors") {
  auto h = saddle();
  Vector rho(2);
  rho << 1.0, 1.0;
  FlowOptions o;
  o.chart_radius = 2.0;
  CHECK(kind_of([&] { integrate(h, rho, 0.0, 5.0, o); }) == ErrorKind::LeftDomain);
  Vector bad(3);
  bad << 1, 2, 3;
  CHECK(kind_of([&] { integrate(h, bad, 0.0, 1.0); }) == ErrorKind::DimensionMismatch);
  // finite-time blow-up of x' = x^2 type dynamics: p = x^2 xi
  Jet<double> p(1, 3);
  p.add_term(mono({2}, {1}), 1.0);
  Vector r(2);
  r << 1.0, 0.0;
  CHECK(kind_of([&] { integrate(Hamiltonian(p), r, 0.0, 2.0); }) == ErrorKind::StepSizeCollapse);
}

TEST_CASE("trajectory csv export") {
  auto tr = variational_flow(saddle(), Vector::Constant(2, 0.5), 0.0, 0.1);
  std::ostringstream os;
  tr.write_csv(os);
  const auto s = os.str();
  CHECK(s.rfind("t,x1,xi1,dkappa_1_1,dkappa_1_2,dkappa_2_1,dkappa_2_2\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(tr.times.size()) + 1);
}

TEST_CASE("variational flow") {
  SUBCASE("linear saddle gives diag(e^t, e^-t)") {
    auto tr = variational_flow(saddle(), Vector::Constant(2, 0.3), 0.0, 1.5);
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = std::exp(1.5);
    expect(1, 1) = std::exp(-1.5);
    CHECK((tr.dkappa.back() - expect).norm() < 1e-9);
  }
  SUBCASE("cubic saddle: symplectic, unimodular, group property, finite differences") {
    auto h = cubic_saddle();
    Vector rho(2);
    rho << 0.2, 0.1;
    auto tr = variational_flow(h, rho, 0.0, 1.0);
    CHECK(tr.max_symplectic_defect() < 1e-8);
    for (const auto& m : tr.dkappa) CHECK(std::abs(m.determinant() - 1.0) < 1e-9);
    // dkappa_{t+s}(rho) = dkappa_t(kappa_s rho) dkappa_s(rho)
    const double s = 0.4, t = 0.6;
    auto first = variational_flow(h, rho, 0.0, s);
    auto second = variational_flow(h, first.dense.y_end.head(2), 0.0, t);
    Matrix composed = second.dkappa.back() * first.dkappa.back();
    CHECK((composed - tr.dkappa.back()).norm() < 1e-7);
    // finite-difference Jacobian
    Matrix fd(2, 2);
    const double eps = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vector e = Vector::Zero(2);
      e[c] = eps;
      fd.col(c) = (flow_map(h, rho + e, 1.0) - flow_map(h, rho - e, 1.0)) / (2 * eps);
    }
    CHECK((fd - tr.dkappa.back()).norm() < 1e-5);
  }
  SUBCASE("random 2-DOF quadratic: dkappa = exp(t L)") {
    std::mt19937_64 rng(11);
    auto q = test::random_hyperbolic_quadratic(0, 1, rng);
    Hamiltonian h(quadratic_jet(q.hess));
    const Matrix l = symplectic_j(2) * q.hess;
    auto tr = variational_flow(h, Vector::Constant(4, 0.1), 0.0, 0.7);
    CHECK((tr.dkappa.back() - (0.7 * l).exp()).norm() < 1e-8 * (0.7 * l).exp().norm());
  }
}

TEST_CASE("region membership examples") {
  auto s = spec_1d(1.0);
  CHECK(region_membership(Vector::Map(std::vector<double>{0.5, 0.0}.data(), 2), s) == Region::Out);
  CHECK(region_membership(Vector::Map(std::vector<double>{0.3, 0.3}.data(), 2), s) == Region::Both);
  CHECK(region_membership(Vector::Map(std::vector<double>{2.0, 0.0}.data(), 2), s) == Region::Neither);
  CHECK(region_membership(Vector::Map(std::vector<double>{0.0, 0.5}.data(), 2), s) == Region::In);
  Vector bad(4);
  bad.setZero();
  CHECK(kind_of([&] { region_membership(bad, s); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("hitting times: linear oracles") {
  auto h = saddle();
  auto s = spec_1d(1.0);
  Vector rho(2);
  rho << 1.0, 0.5;
  auto t = hitting_time(h, rho, s, HitKind::MinusOut);
  CHECK(std::abs(t.value - std::log(2.0)) < 1e-10);
  Vector axis(2);
  axis << 0.1, 0.0;
  CHECK(hitting_time(h, axis, s, HitKind::MinusOut).is_infinite());
  auto tp = hitting_time(h, axis, s, HitKind::PlusOut);
  CHECK(std::abs(tp.value - std::log(200.0) / 2) < 1e-10);
  CHECK(tp.error < 1e-8);
  CHECK(kind_of([&] { hitting_time(h, Vector::Zero(2), s, HitKind::PlusOut); }) ==
        ErrorKind::OriginUndefined);
  try {
    hitting_time(h, Vector::Zero(2), s, HitKind::MinusOut);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("T_minus_out undefined at origin") != std::string::npos);
  }
  // incoming side by symmetry
  Vector r2(2);
  r2 << 0.5, 1.0;
  CHECK(std::abs(hitting_time(h, r2, s, HitKind::PlusIn).value - std::log(2.0)) < 1e-10);
  Vector yaxis(2);
  yaxis << 0.0, 0.1;
  CHECK(std::abs(hitting_time(h, yaxis, s, HitKind::MinusIn).value - std::log(200.0) / 2) < 1e-10);
  CHECK(hitting_time(h, yaxis, s, HitKind::PlusIn).is_infinite());
  // horizon
  HitOptions o;
  o.horizon = 0.1;
  CHECK(kind_of([&] { hitting_time(h, axis, s, HitKind::PlusOut, o); }) ==
        ErrorKind::NoCrossingWithinHorizon);
}

TEST_CASE("hitting times: consistency on a nonlinear saddle") {
  auto h = cubic_williamson(0.3);
  auto s = spec_1d(0.4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    Vector rho(2);
    rho << u(rng), u(rng);
    if (region_membership(rho, s) == Region::Neither) continue;
    auto ht = hitting_times(h, rho, s);
    CHECK_FALSE(ht.reentry_detected);
    for (HitKind kind : {HitKind::MinusOut, HitKind::PlusOut, HitKind::MinusIn, HitKind::PlusIn}) {
      const auto& tm = ht.get(kind);
      if (tm.is_infinite() || tm.value == 0.0) continue;
      const bool back = kind == HitKind::MinusOut || kind == HitKind::MinusIn;
      const double sign = back ? -1.0 : 1.0;
      auto at = [&](double t) { return flow_map(h, rho, sign * t); };
      auto gap = [&](const Vector& r) {
        auto nb = block_norms(r, s.B0);
        switch (kind) {
          case HitKind::MinusOut: return nb.xi - 2 * nb.x;
          case HitKind::PlusIn: return nb.x - 2 * nb.xi;
          default: return nb.x * nb.x + nb.xi * nb.xi - s.delta * s.delta;
        }
      };
      CHECK(std::abs(gap(at(tm.value))) < 1e-9);
      CHECK(gap(at(tm.value * (1 + 1e-4))) > 0.0);
      CHECK(gap(at(tm.value * (1 - 1e-4))) < 0.0);
      ++checked;
    }
  }
  CHECK(checked > 10);
}

TEST_CASE("log-norm rates and monotonicity") {
  auto s = spec_1d(0.5);
  auto rates = log_norm_rates(saddle(2.0), Vector::Constant(2, 0.1), s.B0);
  CHECK(std::abs(rates.x - 2.0) < 1e-14);
  CHECK(std::abs(rates.xi - 2.0) < 1e-14);
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rho = sample_outgoing(s, 7, i);
    auto r = region_membership(rho, s);
    CHECK((r == Region::Out || r == Region::Both));
  }
  CHECK(sample_outgoing(s, 7, 3) == sample_outgoing(s, 7, 3));
}

TEST_CASE("gronwall: linear models") {
  auto s = spec_1d(0.3);
  auto rep = estimate_gronwall(saddle(), s, 16, 0);
  CHECK(std::abs(rep.lambda_minus - 1.0) < 1e-12);
  CHECK(std::abs(rep.lambda_plus - 1.0) < 1e-12);
  CHECK(rep.monotone);
  CHECK(rep.slack < 1e-12);

  auto h2 = diag_saddle({1.0, 2.0});
  RegionSpec s2;
  s2.delta = 0.3;
  Matrix a0 = Matrix::Zero(2, 2);
  a0(0, 0) = 1.0;
  a0(1, 1) = 2.0;
  s2.B0 = lyapunov_B0(a0);
  auto rep2 = estimate_gronwall(h2, s2, 32, 5);
  CHECK(rep2.lambda_minus >= 0.99);
  CHECK(rep2.lambda_plus <= 2.01);
  CHECK(rep2.monotone);
  CHECK(kind_of([&] { estimate_gronwall(h2, s2, 0, 5); }) == ErrorKind::InsufficientSamples);
}

TEST_CASE("gronwall: serial and parallel agree exactly") {
  auto h = cubic_williamson(0.5);
  auto s = spec_1d(0.2);
  GronwallOptions ser;
  ser.policy = ExecPolicy::Serial;
  GronwallOptions par;
  par.policy = ExecPolicy::Parallel;
  auto a = estimate_gronwall(h, s, 24, 9, ser);
  auto b = estimate_gronwall(h, s, 24, 9, par);
  CHECK(a.lambda_minus == b.lambda_minus);
  CHECK(a.lambda_plus == b.lambda_plus);
  CHECK(a.points_checked == b.points_checked);
}

TEST_CASE("gronwall: slack shrinks with delta on the cubic saddle") {
  auto h = cubic_williamson(1.0);
  auto big = estimate_gronwall(h, spec_1d(0.05), 32, 1);
  auto small = estimate_gronwall(h, spec_1d(0.025), 32, 1);
  CHECK(big.slack < 0.2 * big.lambda1);
  CHECK(big.slack / small.slack >= 1.5);
  CHECK(big.monotone);
}

TEST_CASE("certify_delta halves until monotone") {
  auto h = cubic_williamson(1.0);
  auto cert = certify_delta(h, spec_1d(2.0), 16, 0);
  CHECK(cert.report.monotone);
  CHECK(cert.delta < 2.0);
  CHECK(cert.halvings >= 1);
}
