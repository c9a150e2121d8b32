#include "hypnf/hamiltonian.hpp"

namespace hypnf {

Hamiltonian::Hamiltonian(Jet<double> jet)
    : jet_(std::move(jet)), poly_(std::make_shared<PolynomialField>(jet_)) {}

Hamiltonian::Hamiltonian(Jet<double> jet, FlatFunction remainder, double remainder_scale)
    : jet_(std::move(jet)),
      poly_(std::make_shared<PolynomialField>(jet_)),
      remainder_(std::move(remainder)),
      scale_(remainder_scale) {
  if (remainder_->dof() != jet_.dof()) {
    throw Error(ErrorKind::DimensionMismatch, "remainder and jet have different dof");
  }
}

Hamiltonian Hamiltonian::with_remainder_scale(double s) const {
  Hamiltonian h = *this;
  h.scale_ = s;
  return h;
}

double Hamiltonian::value(const Eigen::Ref<const Vector>& rho) const {
  double v = poly_->value(rho);
  if (has_remainder()) v += scale_ * (*remainder_)(rho);
  return v;
}

Vector Hamiltonian::gradient(const Eigen::Ref<const Vector>& rho) const {
  Vector g = Vector::Zero(rho.size());
  poly_->add_gradient(rho, 1.0, g);
  if (has_remainder()) remainder_->field().add_gradient(rho, scale_, g);
  return g;
}

Matrix Hamiltonian::hessian(const Eigen::Ref<const Vector>& rho) const {
  Matrix h = Matrix::Zero(rho.size(), rho.size());
  poly_->add_hessian(rho, 1.0, h);
  if (has_remainder()) remainder_->field().add_hessian(rho, scale_, h);
  return h;
}

void Hamiltonian::vector_field(const Eigen::Ref<const Vector>& rho, Eigen::Ref<Vector> out) const {
  const int n = dof();
  thread_local Vector g;
  g.setZero(rho.size());
  poly_->add_gradient(rho, 1.0, g);
  if (has_remainder()) remainder_->field().add_gradient(rho, scale_, g);
  out.head(n) = g.tail(n);
  out.tail(n) = -g.head(n);
}

Matrix Hamiltonian::vector_field_jacobian(const Eigen::Ref<const Vector>& rho) const {
  return symplectic_j(dof()) * hessian(rho);
}

}  // namespace hypnf
