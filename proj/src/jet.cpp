#include "hypnf/jet.hpp"

#include <sstream>

namespace hypnf {

Monomial Monomial::from_exponents(std::span<const int> alpha, std::span<const int> beta) {
  if (alpha.size() != beta.size() || alpha.size() > static_cast<std::size_t>(kMaxDof)) {
    throw Error(ErrorKind::DimensionMismatch, "exponent arrays must have equal length <= kMaxDof");
  }
  const int n = static_cast<int>(alpha.size());
  Monomial m;
  for (int j = 0; j < n; ++j) {
    m.set_exponent(j, n, alpha[static_cast<std::size_t>(j)]);
    m.set_exponent(n + j, n, beta[static_cast<std::size_t>(j)]);
  }
  return m;
}

void Monomial::set_exponent(int var, int dof, int value) {
  if (value < 0 || value > 255) {
    throw Error(ErrorKind::DimensionMismatch, "monomial exponent out of range");
  }
  e_[slot(var, dof)] = static_cast<std::uint8_t>(value);
}

Monomial Monomial::operator+(const Monomial& o) const {
  Monomial r;
  for (std::size_t i = 0; i < e_.size(); ++i) {
    const int v = e_[i] + o.e_[i];
    if (v > 255) throw Error(ErrorKind::DimensionMismatch, "monomial exponent overflow");
    r.e_[i] = static_cast<std::uint8_t>(v);
  }
  return r;
}

std::string Monomial::to_string(int dof) const {
  std::ostringstream os;
  os << "x^(";
  for (int j = 0; j < dof; ++j) os << (j ? "," : "") << alpha(j);
  os << ") xi^(";
  for (int j = 0; j < dof; ++j) os << (j ? "," : "") << beta(j);
  os << ")";
  return os.str();
}

}  // namespace hypnf
