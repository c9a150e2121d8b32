#include "hypnf/types.hpp"

namespace hypnf {

Matrix symplectic_j(int dof) {
  Matrix j = Matrix::Zero(2 * dof, 2 * dof);
  j.topRightCorner(dof, dof).setIdentity();
  j.bottomLeftCorner(dof, dof) = -Matrix::Identity(dof, dof);
  return j;
}

double symplectic_defect(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0) {
    throw Error(ErrorKind::DimensionMismatch, "symplectic_defect needs a square 2n x 2n matrix");
  }
  const Matrix j = symplectic_j(static_cast<int>(m.rows() / 2));
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

}  // namespace hypnf
