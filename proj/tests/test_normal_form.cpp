#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hypnf/jet_io.hpp"
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

template <class C>
Jet<C> diag_quadratic(const std::vector<C>& lam, int order) {
  const int n = static_cast<int>(lam.size());
  Jet<C> p(n, order);
  for (int j = 0; j < n; ++j) {
    Monomial m;
    m.set_exponent(j, n, 1);
    m.set_exponent(n + j, n, 1);
    p.add_term(m, lam[static_cast<std::size_t>(j)]);
  }
  return p;
}

// All monomials of exact degree k in 2n variables.
std::vector<Monomial> monomials_of_degree(int n, int k) {
  std::vector<Monomial> out;
  std::vector<int> e(static_cast<std::size_t>(2 * n), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == 2 * n - 1) {
      e[static_cast<std::size_t>(pos)] = left;
      std::vector<int> a(e.begin(), e.begin() + n), b(e.begin() + n, e.end());
      out.push_back(Monomial::from_exponents(a, b));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      e[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, k);
  return out;
}

}  // namespace

TEST_CASE("resonance scan examples") {
  SUBCASE("(1, sqrt2) non-resonant through 10") {
    ComplexVector lam(2);
    lam << 1.0, std::sqrt(2.0);
    CHECK(resonance_scan(lam, 10).resonances.empty());
  }
  SUBCASE("(1, 2) has k = (2, -1)") {
    ComplexVector lam(2);
    lam << 1.0, 2.0;
    auto rep = resonance_scan(lam, 3);
    REQUIRE(rep.resonances.size() == 1);
    CHECK(rep.resonances[0].k == std::vector<int>{2, -1});
  }
  SUBCASE("single frequency") {
    ComplexVector lam(1);
    lam << 1.3;
    CHECK(resonance_scan(lam, 12).resonances.empty());
  }
}

TEST_CASE("resonance scan agrees with brute-force enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> small(1, 3);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 3; ++trial) {
      ComplexVector lam(n);
      for (int j = 0; j < n; ++j) lam(j) = static_cast<double>(small(rng));
      const int K = 4 + trial;
      auto rep = resonance_scan(lam, K);
      // brute force over the box [-K, K]^n
      std::vector<std::vector<int>> expect;
      std::vector<int> k(static_cast<std::size_t>(n));
      const int side = 2 * K + 1;
      int total = 1;
      for (int j = 0; j < n; ++j) total *= side;
      for (int idx = 0; idx < total; ++idx) {
        int r = idx, l1 = 0;
        for (int j = 0; j < n; ++j) {
          k[static_cast<std::size_t>(j)] = r % side - K;
          r /= side;
          l1 += std::abs(k[static_cast<std::size_t>(j)]);
        }
        if (l1 == 0 || l1 > K) continue;
        int first = 0;
        for (int v : k)
          if (v != 0) {
            first = v;
            break;
          }
        if (first < 0) continue;
        double s = 0;
        for (int j = 0; j < n; ++j) s += k[static_cast<std::size_t>(j)] * lam(j).real();
        if (s == 0.0) expect.push_back(k);
      }
      CHECK(expect.size() == rep.resonances.size());
      for (const auto& e : expect) {
        bool found = false;
        for (const auto& r : rep.resonances) found = found || r.k == e;
        CHECK(found);
      }
      for (std::size_t i = 1; i < rep.resonances.size(); ++i) {
        auto l1 = [](const std::vector<int>& v) {
          int s = 0;
          for (int x : v) s += std::abs(x);
          return s;
        };
        const auto& a = rep.resonances[i - 1].k;
        const auto& b = rep.resonances[i].k;
        CHECK((l1(a) < l1(b) || (l1(a) == l1(b) && a < b)));
      }
    }
}

TEST_CASE("birkhoff: cubic saddle, N = 3") {
  Jet<Rational> p(1, 3);
  p.add_term(mono({1}, {1}), Rational(1));
  p.add_term(mono({3}, {0}), Rational(1));
  auto nf = birkhoff_normalize(p, 3);
  REQUIRE(nf.generators.size() == 1);
  // {f, p2} = -(a - b) f_c x^a xi^b cancels x^3 when f_c = 1/3
  CHECK(nf.generators[0].coeff(mono({3}, {0})) == Rational(1, 3));
  CHECK(nf.generators[0].is_homogeneous(3));
  CHECK(nf.q0.coeffs.size() == 1);
  CHECK(nf.q0.coeffs.at({1}) == Rational(1));
  CHECK(nf.max_non_action == 0.0);
  CHECK(nf.residual_degree == 4);
  CHECK(apply_generators(p, nf.generators) == nf.transformed);
  // same in floating point
  auto nfd = birkhoff_normalize(test::to_double_jet(p), 3);
  CHECK(std::abs(nfd.generators[0].coeff(mono({3}, {0})) - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("birkhoff: already normal") {
  auto p = diag_quadratic<double>({1.5}, 6);
  auto nf = birkhoff_normalize(p, 6);
  for (const auto& f : nf.generators) CHECK(f.empty());
  CHECK(nf.q0.coeffs.size() == 1);
  CHECK(nf.q0.coeffs.at({1}) == 1.5);
}

TEST_CASE("birkhoff: N = 2 returns the quadratic actions only") {
  std::mt19937_64 rng(1);
  auto p = diag_quadratic<double>({1.0, std::sqrt(2.0)}, 5) + test::random_jet(2, 5, 3, 5, rng);
  auto nf = birkhoff_normalize(p, 2);
  CHECK(nf.generators.empty());
  CHECK(nf.q0.coeffs.size() == 2);
  CHECK(nf.q0.coeffs.at({1, 0}) == 1.0);
  CHECK(nf.q0.coeffs.at({0, 1}) == std::sqrt(2.0));
}

TEST_CASE("birkhoff: 2-DOF (1, sqrt2) agrees with an independent linear solve") {
  std::mt19937_64 rng(42);
  const int n = 2, N = 4;
  const std::vector<double> lam = {1.0, std::sqrt(2.0)};
  auto p2 = diag_quadratic<double>(lam, N);
  auto p = p2 + test::random_jet(n, N, 3, 3, rng, 1.0);
  auto nf = birkhoff_normalize(p, N);
  CHECK(nf.max_non_action < 1e-13);

  // oracle: for each degree, solve {f_k, p2} = -(non-action part of h_k) as a dense system
  Jet<double> h = p;
  for (int k = 3; k <= N; ++k) {
    auto basis = monomials_of_degree(n, k);
    std::vector<Monomial> unknowns;
    for (const auto& m : basis)
      if (!m.is_action(n)) unknowns.push_back(m);
    Matrix a(basis.size(), unknowns.size());
    Vector rhs(basis.size());
    for (std::size_t c = 0; c < unknowns.size(); ++c) {
      auto col = poisson(Jet<double>::monomial(n, N, unknowns[c]), p2);
      for (std::size_t r = 0; r < basis.size(); ++r) a(r, c) = col.coeff(basis[r]);
    }
    for (std::size_t r = 0; r < basis.size(); ++r)
      rhs(r) = basis[r].is_action(n) ? 0.0 : -h.coeff(basis[r]);
    Vector sol = a.colPivHouseholderQr().solve(rhs);
    Jet<double> f(n, N);
    for (std::size_t c = 0; c < unknowns.size(); ++c) f.add_term(unknowns[c], sol(c));
    CHECK((f - nf.generators[static_cast<std::size_t>(k - 3)]).max_abs_coefficient() < 1e-12);
    h = lie_transform(f, h);
  }
  double off = 0.0;
  for (const auto& [m, c] : h.terms())
    if (!m.is_action(n)) off = std::max(off, std::abs(c));
  CHECK(off < 1e-12);
  CHECK((h - nf.transformed).max_abs_coefficient() < 1e-12);
  // q0 round-trips through action form
  auto q = nf.q0.expand(N);
  CHECK(action_form(q).coeffs == nf.q0.coeffs);
  CHECK(q == nf.normal_form);
}

TEST_CASE("birkhoff: resonance obstruction names the vector") {
  Jet<Rational> p(2, 3);
  p.add_term(mono({1, 0}, {1, 0}), Rational(1));
  p.add_term(mono({0, 1}, {0, 1}), Rational(2));
  p.add_term(mono({2, 0}, {0, 1}), Rational(1));
  try {
    birkhoff_normalize(p, 3);
    FAIL("expected ResonanceObstruction");
  } catch (const ResonanceError& e) {
    CHECK(e.kind() == ErrorKind::ResonanceObstruction);
    CHECK(e.k() == std::vector<int>{2, -1});
    CHECK(std::string(e.what()).find("(2,-1)") != std::string::npos);
  }
}

TEST_CASE("birkhoff: off-form quadratic parts are rejected") {
  Jet<double> p(1, 3);
  p.add_term(mono({2}, {0}), 1.0);
  p.add_term(mono({0}, {2}), -1.0);
  CHECK(kind_of([&] { birkhoff_normalize(p, 3); }) == ErrorKind::NotWilliamson);
  Jet<double> q(1, 3);
  q.add_term(mono({1}, {1}), 1.0);
  q.add_term(mono({1}, {0}), 1.0);
  CHECK(kind_of([&] { birkhoff_normalize(q, 3); }) == ErrorKind::NotWilliamson);
}

TEST_CASE("birkhoff: rational mode cancels exactly; float agrees") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 4; ++trial) {
    const int N = 5;
    std::vector<Rational> lam = {Rational(1), Rational(13, 7)};
    auto p = diag_quadratic<Rational>(lam, N) + test::random_rational_jet(2, N, 3, N, rng, 0.4);
    auto nf = birkhoff_normalize(p, N);
    CHECK(nf.max_non_action == 0.0);
    for (std::size_t k = 0; k < nf.generators.size(); ++k) CHECK(nf.generators[k].is_homogeneous(static_cast<int>(k) + 3));
    auto nfd = birkhoff_normalize(test::to_double_jet(p), N);
    const double scale = std::max(1.0, test::to_double_jet(nf.transformed).max_abs_coefficient());
    CHECK((test::to_double_jet(nf.transformed) - nfd.transformed).max_abs_coefficient() < 1e-9 * scale);
  }
}

TEST_CASE("birkhoff: loxodromic block through complex coordinates") {
  std::mt19937_64 rng(31);
  const int N = 5;
  Jet<double> p2 = quadratic_jet(williamson_hessian({0.7}, {1.0}, {1.0}), N);
  auto p = p2 + test::random_jet(3, N, 3, 4, rng, 0.15);
  auto nf = birkhoff_normalize_real(p, N);
  CHECK(nf.layout.ell == 1);
  CHECK(nf.layout.m == 1);
  CHECK(nf.realness_defect < 1e-10);
  CHECK(nf.max_non_normal < 1e-9);
  // generators are real and transform p into the normal form
  auto h = apply_generators(p, nf.generators);
  CHECK((h - nf.normal_form).max_abs_coefficient() < 1e-9);
  // normal form commutes with the quadratic part (it is a function of the actions)
  CHECK(poisson(p2, nf.normal_form).max_abs_coefficient() < 1e-9);
}

TEST_CASE("to_williamson_coordinates snaps the quadratic part") {
  std::mt19937_64 rng(3);
  auto q = test::random_hyperbolic_quadratic(2, 0, rng);
  auto p = quadratic_jet(q.hess, 4) + test::random_jet(2, 4, 3, 4, rng, 0.3);
  auto fr = williamson_normalize(p.homogeneous_part(2));
  auto pw = to_williamson_coordinates(p, fr);
  auto lay = williamson_layout(pw);
  CHECK(lay.ell == 2);
  auto nf = birkhoff_normalize_real(pw, 4);
  CHECK(nf.max_non_normal < 1e-10);
}

TEST_CASE("action_form examples") {
  Jet<double> q(2, 4);
  q.add_term(mono({1, 0}, {1, 0}), 3.0);
  q.add_term(mono({1, 1}, {1, 1}), 2.0);
  auto a = action_form(q);
  CHECK(a.coeffs.size() == 2);
  CHECK(a.coeffs.at({1, 0}) == 3.0);
  CHECK(a.coeffs.at({1, 1}) == 2.0);
  CHECK(a.expand(4) == q);
  Jet<double> bad(2, 2);
  bad.add_term(mono({1, 0}, {0, 1}), 1.0);
  CHECK(kind_of([&] { action_form(bad); }) == ErrorKind::NonActionMonomial);
}

TEST_CASE("hyperbolic action-angle coordinates") {
  auto p = hyperbolic_action_angle({1.0}, {0.5}, {0.0});
  CHECK(std::abs(p[0] - 1.0) < 1e-15);
  CHECK(std::abs(p[1]) < 1e-15);
  auto q = hyperbolic_action_angle({1.0}, {0.5}, {std::log(2.0)});
  CHECK(std::abs(q[0] - 1.25) < 1e-15);
  CHECK(std::abs(q[1] - 0.75) < 1e-15);
  CHECK(std::abs(q[1] * q[1] - q[0] * q[0] + 1.0) < 1e-14);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int k = 0; k < 50; ++k) {
    const double lam = u(rng), iota = u(rng), phi = u(rng) - 1.0;
    auto r = hyperbolic_action_angle({lam}, {iota}, {phi});
    CHECK(std::abs(r[1] * r[1] - lam * lam * r[0] * r[0] + 2 * lam * iota) < 1e-12);
  }
  CHECK(kind_of([&] { hyperbolic_action_angle({1.0}, {-0.1}, {0.0}); }) == ErrorKind::NegativeAction);
}

TEST_CASE("normal form json serialization round-trips") {
  Jet<Rational> p(1, 4);
  p.add_term(mono({1}, {1}), Rational(1));
  p.add_term(mono({2}, {1}), Rational(1, 3));
  auto nf = birkhoff_normalize(p, 4);
  for (const auto& f : nf.generators) CHECK(rational_jet_from_json(jet_to_json(f)) == f);
}
