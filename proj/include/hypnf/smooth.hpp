#pragma once

#include <memory>
#include <vector>

#include "hypnf/jet.hpp"
#include "hypnf/types.hpp"

namespace hypnf {

// Smooth real function on phase space with analytic first and second derivatives.
class ScalarField {
 public:
  virtual ~ScalarField() = default;

  virtual int dof() const = 0;
  virtual double value(const Eigen::Ref<const Vector>& rho) const = 0;
  // grad += scale * gradient
  virtual void add_gradient(const Eigen::Ref<const Vector>& rho, double scale,
                            Eigen::Ref<Vector> grad) const = 0;
  // hess += scale * Hessian
  virtual void add_hessian(const Eigen::Ref<const Vector>& rho, double scale,
                           Eigen::Ref<Matrix> hess) const = 0;

  Vector gradient(const Eigen::Ref<const Vector>& rho) const {
    Vector g = Vector::Zero(rho.size());
    add_gradient(rho, 1.0, g);
    return g;
  }
  Matrix hessian(const Eigen::Ref<const Vector>& rho) const {
    Matrix h = Matrix::Zero(rho.size(), rho.size());
    add_hessian(rho, 1.0, h);
    return h;
  }
};

// Polynomial compiled from a Jet<double> for fast repeated evaluation.
class PolynomialField final : public ScalarField {
 public:
  explicit PolynomialField(const Jet<double>& jet);

  int dof() const override { return dof_; }
  double value(const Eigen::Ref<const Vector>& rho) const override;
  void add_gradient(const Eigen::Ref<const Vector>& rho, double scale,
                    Eigen::Ref<Vector> grad) const override;
  void add_hessian(const Eigen::Ref<const Vector>& rho, double scale,
                   Eigen::Ref<Matrix> hess) const override;

 private:
  struct Compiled {
    std::vector<double> coeffs;
    std::vector<std::uint8_t> exps;  // row-major, 2n entries per term
    bool empty() const { return coeffs.empty(); }
  };
  Compiled compile(const Jet<double>& jet) const;
  double eval(const Compiled& c, const double* powers) const;
  void fill_powers(const Eigen::Ref<const Vector>& rho, std::vector<double>& powers) const;

  int dof_;
  int order_;
  Compiled value_;
  std::vector<Compiled> grad_;  // d/d rho_v
  std::vector<Compiled> hess_;  // upper triangle, (v, w) with v <= w
};

// eps * x^alpha xi^beta * psi(|rho|^2 / R^2), with psi a C-infinity bump equal
// to 1 on |rho| <= sqrt(plateau) R and 0 outside |rho| >= R. radius <= 0 means no bump.
class MonomialBump final : public ScalarField {
 public:
  MonomialBump(int dof, Monomial monomial, double eps, double radius, double plateau = 0.5);

  int dof() const override { return dof_; }
  double value(const Eigen::Ref<const Vector>& rho) const override;
  void add_gradient(const Eigen::Ref<const Vector>& rho, double scale,
                    Eigen::Ref<Vector> grad) const override;
  void add_hessian(const Eigen::Ref<const Vector>& rho, double scale,
                   Eigen::Ref<Matrix> hess) const override;

  const Monomial& monomial() const { return monomial_; }
  double eps() const { return eps_; }
  double radius() const { return radius_; }
  double plateau() const { return plateau_; }

 private:
  // psi and its first two derivatives with respect to s = |rho|^2 / R^2.
  void bump(double s, double& psi, double& dpsi, double& d2psi) const;
  void monomial_derivs(const Eigen::Ref<const Vector>& rho, double& m, Vector* grad,
                       Matrix* hess) const;

  int dof_;
  Monomial monomial_;
  double eps_;
  double radius_;
  double plateau_;
};

class ZeroField final : public ScalarField {
 public:
  explicit ZeroField(int dof) : dof_(dof) {}
  int dof() const override { return dof_; }
  double value(const Eigen::Ref<const Vector>&) const override { return 0.0; }
  void add_gradient(const Eigen::Ref<const Vector>&, double, Eigen::Ref<Vector>) const override {}
  void add_hessian(const Eigen::Ref<const Vector>&, double, Eigen::Ref<Matrix>) const override {}

 private:
  int dof_;
};

// |g(rho)| <= constant * |rho|^order near the fixed point.
struct FlatnessCertificate {
  int order = 0;
  double constant = 0.0;
};

// A smooth function vanishing to finite order at the origin, carrying its
// flatness certificate.
class FlatFunction {
 public:
  FlatFunction(std::shared_ptr<const ScalarField> field, FlatnessCertificate cert,
               bool identically_zero = false);

  static FlatFunction zero(int dof);
  static FlatFunction monomial_bump(int dof, const Monomial& m, double eps, double radius,
                                    double plateau = 0.5);

  int dof() const { return field_->dof(); }
  const ScalarField& field() const { return *field_; }
  std::shared_ptr<const ScalarField> field_ptr() const { return field_; }
  const FlatnessCertificate& certificate() const { return cert_; }
  bool identically_zero() const { return zero_; }

  double operator()(const Eigen::Ref<const Vector>& rho) const { return field_->value(rho); }

 private:
  std::shared_ptr<const ScalarField> field_;
  FlatnessCertificate cert_;
  bool zero_;
};

struct CertificateCheck {
  double min_slope = 0.0;   // smallest fitted log|g| / log|rho| slope over the rays
  double max_ratio = 0.0;   // max |g| / (C |rho|^N) over the samples
  bool ok = false;
};

// Empirical validation along rays t * direction, t from t_max down to t_max * shrink.
CertificateCheck validate_certificate(const FlatFunction& g, const std::vector<Vector>& directions,
                                      double t_max, double shrink = 1e-2, int samples = 12);

}  // namespace hypnf
