#pragma once

#include <Eigen/Dense>

namespace invlearn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Coefficients of an element of the discretized solution space H1.
/// The basis is orthonormal, so the H1 inner product is the dot product.
using ParamVector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction checks finiteness and symmetry
/// (|M_ij - M_ji| <= 1e-12 max(1, |M_ij|)) and stores the exact symmetric part.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index dim);
  static SymMatrix diagonal(const Vector& diag);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Vector operator*(const Vector& v) const { return m_ * v; }

 private:
  Matrix m_;
};

/// Eigenpairs of a positive semidefinite SymMatrix, eigenvalues descending.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // orthonormal columns

  Eigen::Index size() const noexcept { return eigenvalues.size(); }
  double max_eigenvalue() const;
  /// Eigenvalues with round-off negatives clipped to zero.
  Vector clipped() const;
  /// Number of eigenvalues above rel_tol * max_eigenvalue.
  Eigen::Index rank(double rel_tol = 1e-12) const;
};

/// Symmetric eigendecomposition of a PSD matrix. Eigenvalues below
/// -1e-10 * max|lambda| mean the input is indefinite and raise DomainError.
SpectralDecomposition sym_eig(const SymMatrix& m);

/// V diag(max(lambda,0)^r) V^T. Throws DomainError for r < 0.
SymMatrix frac_power(const SpectralDecomposition& d, double r);

/// frac_power(d, r) * v without forming the matrix.
Vector apply_frac_power(const SpectralDecomposition& d, double r, const Vector& v);

/// Solves (m + shift I) x = rhs for PSD m and shift > 0.
Vector spd_solve(const SymMatrix& m, double shift, const Vector& rhs);

/// Largest singular value of a general dense matrix.
double operator_norm(const Matrix& m);

}  // namespace invlearn
