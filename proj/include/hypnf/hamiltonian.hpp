#pragma once

#include <memory>
#include <optional>

#include "hypnf/jet.hpp"
#include "hypnf/smooth.hpp"
#include "hypnf/types.hpp"

namespace hypnf {

// p = jet + remainder_scale * remainder, evaluable with derivatives.
class Hamiltonian {
 public:
  explicit Hamiltonian(Jet<double> jet);
  Hamiltonian(Jet<double> jet, FlatFunction remainder, double remainder_scale = 1.0);

  int dof() const { return jet_.dof(); }
  const Jet<double>& jet() const { return jet_; }
  const std::optional<FlatFunction>& remainder() const { return remainder_; }
  double remainder_scale() const { return scale_; }
  bool has_remainder() const { return remainder_.has_value() && scale_ != 0.0; }

  Hamiltonian with_remainder_scale(double s) const;

  double value(const Eigen::Ref<const Vector>& rho) const;
  Vector gradient(const Eigen::Ref<const Vector>& rho) const;
  Matrix hessian(const Eigen::Ref<const Vector>& rho) const;
  // rho' = J grad p, written into out
  void vector_field(const Eigen::Ref<const Vector>& rho, Eigen::Ref<Vector> out) const;
  // J Hess p
  Matrix vector_field_jacobian(const Eigen::Ref<const Vector>& rho) const;

 private:
  Jet<double> jet_;
  std::shared_ptr<const PolynomialField> poly_;
  std::optional<FlatFunction> remainder_;
  double scale_ = 0.0;
};

}  // namespace hypnf
