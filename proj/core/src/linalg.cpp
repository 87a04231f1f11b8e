#include "invlearn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "invlearn/errors.hpp"

namespace invlearn {
namespace {

// FNV-1a over the raw bytes; identifies the offending matrix in error messages.
std::string fingerprint(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    std::uint64_t bits = 0;
    const double v = m.data()[k];
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << m.rows() << "x" << m.cols() << ":" << std::hex << h;
  return os.str();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ContractError("SymMatrix: matrix must be square and nonempty");
  }
  if (!m.allFinite()) throw DomainError("SymMatrix: non-finite entry");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double tol = 1e-12 * std::max({1.0, std::abs(m(i, j)), std::abs(m(j, i))});
      if (std::abs(m(i, j) - m(j, i)) > tol) {
        std::ostringstream os;
        os << "SymMatrix: asymmetric entry (" << i << "," << j << ")";
        throw DomainError(os.str());
      }
    }
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

double SpectralDecomposition::max_eigenvalue() const {
  return eigenvalues.size() == 0 ? 0.0 : eigenvalues(0);
}

Vector SpectralDecomposition::clipped() const { return eigenvalues.cwiseMax(0.0); }

Eigen::Index SpectralDecomposition::rank(double rel_tol) const {
  const double cut = rel_tol * std::max(max_eigenvalue(), 0.0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) > cut) ++r;
  }
  return r;
}

SpectralDecomposition sym_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw EigensolverFailure("eigensolver failure for matrix " + fingerprint(m.matrix()));
  }
  const Eigen::Index n = m.dim();
  SpectralDecomposition d;
  d.eigenvalues.resize(n);
  d.eigenvectors.resize(n, n);
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < n; ++i) {
    d.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
    d.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  const double scale = d.eigenvalues.cwiseAbs().maxCoeff();
  if (d.eigenvalues(n - 1) < -1e-10 * scale) {
    std::ostringstream os;
    os << "sym_eig: matrix is indefinite (min eigenvalue " << d.eigenvalues(n - 1)
       << ", scale " << scale << ") " << fingerprint(m.matrix());
    throw DomainError(os.str());
  }
  return d;
}

SymMatrix frac_power(const SpectralDecomposition& d, double r) {
  if (!(r >= 0.0)) throw DomainError("frac_power: exponent must be nonnegative");
  Vector powered = d.clipped();
  for (Eigen::Index i = 0; i < powered.size(); ++i) {
    powered(i) = (r == 0.0) ? 1.0 : std::pow(powered(i), r);
  }
  Matrix out = d.eigenvectors * powered.asDiagonal() * d.eigenvectors.transpose();
  return SymMatrix(0.5 * (out + out.transpose()));
}

Vector apply_frac_power(const SpectralDecomposition& d, double r, const Vector& v) {
  if (!(r >= 0.0)) throw DomainError("frac_power: exponent must be nonnegative");
  if (v.size() != d.size()) throw ContractError("apply_frac_power: dimension mismatch");
  if (r == 0.0) return v;
  Vector coeffs = d.eigenvectors.transpose() * v;
  const Vector lam = d.clipped();
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs(i) *= std::pow(lam(i), r);
  return d.eigenvectors * coeffs;
}

Vector spd_solve(const SymMatrix& m, double shift, const Vector& rhs) {
  if (!(shift > 0.0)) throw DomainError("spd_solve: shift must be positive");
  if (rhs.size() != m.dim()) throw ContractError("spd_solve: rhs dimension mismatch");
  Matrix shifted = m.matrix();
  shifted.diagonal().array() += shift;
  Eigen::LLT<Matrix> llt(shifted);
  Vector x;
  if (llt.info() == Eigen::Success) {
    x = llt.solve(rhs);
  } else {
    x = shifted.ldlt().solve(rhs);
  }
  // One step of iterative refinement keeps the residual at round-off level
  // for poorly conditioned shifts.
  const Vector r = rhs - shifted * x;
  x += (llt.info() == Eigen::Success) ? Vector(llt.solve(r)) : Vector(shifted.ldlt().solve(r));
  return x;
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace invlearn
