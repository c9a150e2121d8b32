#include "hypnf/jet_io.hpp"

namespace hypnf {

namespace {

template <class C, class F>
Json to_json_impl(const Jet<C>& jet, F&& coeff) {
  const int n = jet.dof();
  Json doc;
  doc["n"] = n;
  doc["N"] = jet.order();
  Json terms = Json::array();
  for (const auto& [m, c] : jet.terms()) {
    Json t;
    Json a = Json::array(), b = Json::array();
    for (int j = 0; j < n; ++j) {
      a.push_back(m.alpha(j));
      b.push_back(m.beta(j));
    }
    t["alpha"] = std::move(a);
    t["beta"] = std::move(b);
    t["coeff"] = coeff(c);
    terms.push_back(std::move(t));
  }
  doc["terms"] = std::move(terms);
  return doc;
}

Rational parse_rational(const Json& c) {
  if (c.is_number()) return Rational(c.get<double>());
  if (c.is_string()) {
    Rational q;
    if (q.set_str(c.get<std::string>(), 10) != 0) {
      throw Error(ErrorKind::ParseError, "invalid rational coefficient '" + c.get<std::string>() + "'");
    }
    q.canonicalize();
    return q;
  }
  throw Error(ErrorKind::ParseError, "coefficient must be a number or a \"p/q\" string");
}

template <class C, class F>
Jet<C> from_json_impl(const Json& doc, F&& coeff) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "jet document must be an object");
  if (!doc.contains("n") || !doc["n"].is_number_integer()) {
    throw Error(ErrorKind::ParseError, "jet document needs an integer 'n'");
  }
  if (!doc.contains("N") || !doc["N"].is_number_integer()) {
    throw Error(ErrorKind::ParseError, "jet document needs an integer 'N'");
  }
  const int n = doc["n"].get<int>(), order = doc["N"].get<int>();
  if (n < 1 || n > kMaxDof) {
    throw Error(ErrorKind::ParseError, "n must lie in [1, " + std::to_string(kMaxDof) + "]");
  }
  if (order < 2 || order > 255) throw Error(ErrorKind::ParseError, "N must lie in [2, 255]");
  if (!doc.contains("terms") || !doc["terms"].is_array()) {
    throw Error(ErrorKind::ParseError, "jet document needs a 'terms' array");
  }
  Jet<C> jet(n, order);
  std::size_t idx = 0;
  for (const auto& t : doc["terms"]) {
    const std::string where = "term " + std::to_string(idx++);
    if (!t.is_object() || !t.contains("alpha") || !t.contains("beta") || !t.contains("coeff")) {
      throw Error(ErrorKind::ParseError, where + " needs alpha, beta and coeff");
    }
    std::vector<int> a, b;
    for (const char* key : {"alpha", "beta"}) {
      const auto& arr = t[key];
      if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
        throw Error(ErrorKind::ParseError, where + ": '" + key + "' must have length n");
      }
      for (const auto& e : arr) {
        if (!e.is_number_integer() || e.get<int>() < 0) {
          throw Error(ErrorKind::ParseError, where + ": exponents must be nonnegative integers");
        }
        (key[0] == 'a' ? a : b).push_back(e.get<int>());
      }
    }
    Monomial m;
    try {
      m = Monomial::from_exponents(a, b);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, where + ": " + e.what());
    }
    if (m.degree() > order) {
      throw Error(ErrorKind::ParseError, where + " exceeds the truncation order N");
    }
    jet.add_term(m, coeff(t["coeff"]));
  }
  return jet;
}

}  // namespace

Json jet_to_json(const Jet<double>& jet) {
  return to_json_impl(jet, [](double c) { return Json(c); });
}

Json jet_to_json(const Jet<Rational>& jet) {
  return to_json_impl(jet, [](const Rational& c) { return Json(c.get_str()); });
}

Json jet_to_json(const Jet<Complex>& jet) {
  return to_json_impl(jet, [](const Complex& c) { return Json::array({c.real(), c.imag()}); });
}

Jet<double> jet_from_json(const Json& doc) {
  return from_json_impl<double>(doc, [](const Json& c) {
    if (c.is_number()) return c.get<double>();
    return parse_rational(c).get_d();
  });
}

Jet<Rational> rational_jet_from_json(const Json& doc) {
  return from_json_impl<Rational>(doc, parse_rational);
}

}  // namespace hypnf
