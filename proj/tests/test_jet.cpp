#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "hypnf/jet_io.hpp"
#include "hypnf/normal_form.hpp"

using namespace hypnf;

namespace {

Monomial mono(std::vector<int> a, std::vector<int> b) { return Monomial::from_exponents(a, b); }

Jet<double> random_jet(int n, int order, int min_deg, std::mt19937_64& rng, double density = 0.6) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Jet<double> j(n, order);
  std::vector<int> e(static_cast<std::size_t>(2 * n), 0);
  // enumerate all exponent vectors up to `order`
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == 2 * n) {
      int deg = order - left;
      if (deg < min_deg) return;
      if (std::uniform_real_distribution<double>(0, 1)(rng) > density) return;
      std::vector<int> a(e.begin(), e.begin() + n), b(e.begin() + n, e.end());
      j.add_term(Monomial::from_exponents(a, b), u(rng));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      e[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
    e[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, order);
  return j;
}

double eval(const Jet<double>& j, const Vector& v) {
  return j.evaluate<double>(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace

TEST_CASE("monomial exponents and ordering") {
  auto m = mono({2, 0}, {0, 1});
  CHECK(m.degree() == 3);
  CHECK(m.alpha(0) == 2);
  CHECK(m.beta(1) == 1);
  CHECK(m.exponent(3, 2) == 1);
  CHECK_FALSE(m.is_action(2));
  CHECK(mono({1, 1}, {1, 1}).is_action(2));
  GradedLex lt;
  CHECK(lt(mono({1}, {0}), mono({1}, {1})));  // lower degree first
  CHECK(lt(mono({2}, {0}), mono({1}, {1})));  // x before xi within a degree
  CHECK_THROWS_AS(mono({-1}, {0}), Error);
}

TEST_CASE("jet arithmetic is exactly graded and drops zeros") {
  Jet<double> x = Jet<double>::variable(1, 4, 0);
  Jet<double> xi = Jet<double>::variable(1, 4, 1);
  auto p = (x + xi) * (x - xi);
  CHECK(p.coeff(mono({2}, {0})) == 1.0);
  CHECK(p.coeff(mono({0}, {2})) == -1.0);
  CHECK(p.coeff(mono({1}, {1})) == 0.0);
  CHECK(p.size() == 2);
  auto q = p * p * p;  // degree 6 > order 4
  CHECK(q.empty());
  CHECK((p - p).empty());
  auto r = p;
  r *= 0.0;
  CHECK(r.empty());
}

TEST_CASE("graded product: degree-k part depends only on parts summing to k") {
  std::mt19937_64 rng(7);
  auto a = random_jet(2, 5, 0, rng), b = random_jet(2, 5, 0, rng);
  auto prod = a * b;
  for (int k = 0; k <= 5; ++k) {
    Jet<double> expect(2, 5);
    for (int i = 0; i <= k; ++i) expect += a.homogeneous_part(i) * b.homogeneous_part(k - i);
    CHECK((prod.homogeneous_part(k) - expect).max_abs_coefficient() < 1e-14);
  }
}

TEST_CASE("rational jets are exact") {
  Jet<Rational> x = Jet<Rational>::variable(1, 6, 0, Rational(1, 3));
  auto p = x * x * x;
  CHECK(p.coeff(mono({3}, {0})) == Rational(1, 27));
  p *= Rational(27);
  CHECK(p.coeff(mono({3}, {0})) == Rational(1));
}

TEST_CASE("jet json round-trip") {
  std::mt19937_64 rng(3);
  auto j = random_jet(2, 4, 0, rng);
  auto back = jet_from_json(jet_to_json(j));
  CHECK(back == j);
  Jet<Rational> jr(1, 3);
  jr.add_term(mono({1}, {1}), Rational(2, 7));
  CHECK(rational_jet_from_json(jet_to_json(jr)) == jr);
  Json doc = {{"n", 1}, {"N", 3}, {"terms", {{{"alpha", {1}}, {"beta", {1}}, {"coeff", "1/3"}}}}};
  CHECK(rational_jet_from_json(doc).coeff(mono({1}, {1})) == Rational(1, 3));
}

TEST_CASE("jet json rejects malformed documents") {
  CHECK_THROWS_AS(jet_from_json(Json::parse(R"({"n":1,"terms":[]})")), Error);
  CHECK_THROWS_AS(jet_from_json(Json::parse(R"({"n":1,"N":1,"terms":[]})")), Error);
  CHECK_THROWS_AS(jet_from_json(Json::parse(R"({"n":2,"N":3,"terms":[{"alpha":[1],"beta":[0,0],"coeff":1}]})")),
                  Error);
  CHECK_THROWS_AS(jet_from_json(Json::parse(R"({"n":1,"N":2,"terms":[{"alpha":[3],"beta":[0],"coeff":1}]})")),
                  Error);
  try {
    jet_from_json(Json::parse(R"({"n":1,"N":2})"));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }
}

TEST_CASE("derivative and evaluation agree with finite differences") {
  std::mt19937_64 rng(11);
  auto j = random_jet(2, 5, 0, rng);
  Vector v(4);
  v << 0.3, -0.2, 0.1, 0.4;
  for (int var = 0; var < 4; ++var) {
    Vector vp = v, vm = v;
    vp[var] += 1e-6;
    vm[var] -= 1e-6;
    const double fd = (eval(j, vp) - eval(j, vm)) / 2e-6;
    CHECK(std::abs(fd - eval(j.derivative(var), v)) < 1e-7);
  }
}

TEST_CASE("linear substitution matches composition at points") {
  std::mt19937_64 rng(5);
  auto j = random_jet(2, 4, 0, rng);
  Matrix m = Matrix::Random(4, 4);
  auto s = substitute_linear(j, m);
  Vector y(4);
  y << 0.1, 0.2, -0.3, 0.05;
  CHECK(std::abs(eval(s, y) - eval(j, m * y)) < 1e-12);
}

TEST_CASE("poisson bracket examples") {
  auto x = Jet<double>::variable(1, 6, 0);
  auto xi = Jet<double>::variable(1, 6, 1);
  auto one = poisson(x, xi);
  CHECK(one.coeff(Monomial{}) == -1.0);
  CHECK(poisson(xi, x).coeff(Monomial{}) == 1.0);
  auto xxi = x * xi;
  auto r = poisson(xxi, x);
  CHECK(r == x);
  CHECK(poisson(xxi, xi) == -xi);
  // {lambda x xi, x^a xi^b} = lambda (a - b) x^a xi^b
  const double lam = 1.7;
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b) {
      auto m = Jet<double>::monomial(1, 6, mono({a}, {b}));
      auto br = poisson(lam * xxi, m);
      CHECK(std::abs(br.coeff(mono({a}, {b})) - lam * (a - b)) < 1e-15);
      CHECK(br.size() <= 1);
    }
}

TEST_CASE("poisson is bilinear, antisymmetric, Leibniz and Jacobi") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = random_jet(2, 6, 1, rng, 0.3), g = random_jet(2, 6, 1, rng, 0.3),
         h = random_jet(2, 6, 1, rng, 0.3);
    CHECK((poisson(f, g) + poisson(g, f)).max_abs_coefficient() < 1e-13);
    CHECK((poisson(f, 2.0 * g + h) - 2.0 * poisson(f, g) - poisson(f, h)).max_abs_coefficient() < 1e-12);
    // Leibniz, compared on degrees unaffected by truncation
    auto lhs = poisson(f, g * h).truncated(3);
    auto rhs = (poisson(f, g) * h + g * poisson(f, h)).truncated(3);
    CHECK((lhs - rhs).max_abs_coefficient() < 1e-12);
    auto jac = poisson(f, poisson(g, h)) + poisson(g, poisson(h, f)) + poisson(h, poisson(f, g));
    CHECK(jac.truncated(2).max_abs_coefficient() < 1e-12);
  }
}

TEST_CASE("poisson rejects mismatched dof") {
  CHECK_THROWS_AS(poisson(Jet<double>(1, 3), Jet<double>(2, 3)), Error);
}

TEST_CASE("lie transform examples") {
  auto x = Jet<double>::variable(1, 3, 0);
  auto xi = Jet<double>::variable(1, 3, 1);
  const double eps = 0.25;
  auto f = eps * (x * x * xi);
  // constants are unchanged
  auto c = Jet<double>::constant(1, 3, 2.5);
  CHECK(lie_transform(f, c) == c);
  // xi(1) = x^2 xi / x(1)^2 with x(1) = x/(1 - eps x), so x xi o Phi = x xi - eps x^2 xi
  auto r = lie_transform(f, x * xi);
  CHECK(r.coeff(mono({1}, {1})) == 1.0);
  CHECK(std::abs(r.coeff(mono({2}, {1})) + eps) < 1e-15);
  CHECK(r.size() == 2);
  // generator of low degree is rejected
  try {
    lie_transform(x * xi, x);
    FAIL("expected GeneratorTooLowDegree");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GeneratorTooLowDegree);
  }
}

namespace {

// time-1 flow of H_f by classical RK4, f given as a jet
Vector flow_of(const Jet<double>& f, Vector y, int steps) {
  const int n = f.dof();
  std::vector<Jet<double>> grad;
  for (int v = 0; v < 2 * n; ++v) grad.push_back(f.derivative(v));
  auto field = [&](const Vector& z) {
    Vector out(2 * n);
    for (int j = 0; j < n; ++j) {
      out[j] = eval(grad[static_cast<std::size_t>(n + j)], z);
      out[n + j] = -eval(grad[static_cast<std::size_t>(j)], z);
    }
    return out;
  };
  const double h = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    Vector k1 = field(y), k2 = field(y + 0.5 * h * k1), k3 = field(y + 0.5 * h * k2), k4 = field(y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST_CASE("lie transform matches the numerically integrated time-one flow") {
  std::mt19937_64 rng(99);
  const int n = 2, order = 4;
  auto f = random_jet(n, order, 3, rng, 0.5);
  auto g = random_jet(n, order, 2, rng, 0.5);
  auto lg = lie_transform(f, g);
  Vector dir(4);
  dir << 0.6, -0.3, 0.5, 0.55;
  double prev = 0.0;
  for (double t : {0.04, 0.02, 0.01}) {
    Vector rho = t * dir;
    const double exact = eval(g.truncated(order), flow_of(f, rho, 200));
    const double err = std::abs(exact - eval(lg, rho));
    // remainder is O(|rho|^(N+1)): halving rho shrinks it by about 2^5
    if (prev > 0.0) CHECK(err < prev / 16.0);
    if (t == 0.01) CHECK(err < 1e-8);
    prev = err;
  }
}

TEST_CASE("coordinate functions transported by lie transforms stay canonical") {
  std::mt19937_64 rng(17);
  const int n = 2, order = 6;
  auto f = random_jet(n, order, 3, rng, 0.4);
  std::vector<Jet<double>> X;
  for (int v = 0; v < 2 * n; ++v) X.push_back(lie_transform(f, Jet<double>::variable(n, order, v)));
  const Matrix j = symplectic_j(n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b) {
      // {X_a, X_b} = {rho_a, rho_b} o Phi = -J(a, b) through order N - 2 (bracket loses 2 degrees)
      auto br = poisson(X[static_cast<std::size_t>(a)], X[static_cast<std::size_t>(b)]).truncated(order - 2);
      br.add_term(Monomial{}, j(a, b));
      CHECK(br.max_abs_coefficient() < 1e-12);
    }
}
