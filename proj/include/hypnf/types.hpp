#pragma once

#include <Eigen/Dense>
#include <initializer_list>

#include "hypnf/error.hpp"

namespace hypnf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// Point of T*R^n, coordinates ordered (x_1..x_n, xi_1..xi_n).
class PhasePoint {
 public:
  PhasePoint() = default;
  explicit PhasePoint(Vector coords) : coords_(std::move(coords)) {
    if (coords_.size() == 0 || coords_.size() % 2 != 0) {
      throw Error(ErrorKind::DimensionMismatch,
                  "phase point needs an even, nonzero number of coordinates");
    }
  }
  PhasePoint(std::initializer_list<double> values)
      : PhasePoint(Vector::Map(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

  static PhasePoint zero(int dof) { return PhasePoint(Vector::Zero(2 * dof)); }
  static PhasePoint from_blocks(const Vector& x, const Vector& xi) {
    Vector v(x.size() + xi.size());
    v << x, xi;
    return PhasePoint(std::move(v));
  }

  int dof() const { return static_cast<int>(coords_.size() / 2); }
  const Vector& coords() const { return coords_; }
  Vector& coords() { return coords_; }
  auto x() const { return coords_.head(dof()); }
  auto xi() const { return coords_.tail(dof()); }
  double operator[](Eigen::Index i) const { return coords_[i]; }
  double norm() const { return coords_.norm(); }

  friend bool operator==(const PhasePoint& a, const PhasePoint& b) {
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
  }

 private:
  Vector coords_;
};

// Standard symplectic matrix [[0, I], [-I, 0]]; the flow of p is rho' = J grad p.
Matrix symplectic_j(int dof);

// max-abs entry of M^T J M - J.
double symplectic_defect(const Matrix& m);

// Serial execution is the reference path kept for testing the OpenMP kernels.
enum class ExecPolicy { Serial, Parallel };

}  // namespace hypnf
