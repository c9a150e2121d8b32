#pragma once

#include <json.hpp>
#include <string>

#include "hypnf/jet.hpp"

namespace hypnf {

using Json = nlohmann::json;  // keys sorted, so output is canonical

// {n, N, terms: [{alpha, beta, coeff}]}, terms in graded-lex order.
Json jet_to_json(const Jet<double>& jet);
// Rational coefficients serialize as "p/q" strings.
Json jet_to_json(const Jet<Rational>& jet);
// Complex coefficients serialize as [re, im].
Json jet_to_json(const Jet<Complex>& jet);

// Coefficients may be numbers or "p/q" strings.
Jet<double> jet_from_json(const Json& doc);
// Numbers convert to the exact rational value of their binary representation.
Jet<Rational> rational_jet_from_json(const Json& doc);

}  // namespace hypnf
