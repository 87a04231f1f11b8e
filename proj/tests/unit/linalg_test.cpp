#include <gtest/gtest.h>

#include <random>

#include "invlearn/errors.hpp"
#include "invlearn/linalg.hpp"
#include "invlearn/rng.hpp"

using namespace invlearn;

namespace {

Matrix random_spd(Eigen::Index dim, RngStream& rng, double shift = 0.1) {
  Matrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = rng.normal();
  Matrix m = a * a.transpose() / static_cast<double>(dim) + shift * Matrix::Identity(dim, dim);
  return 0.5 * (m + m.transpose());
}

Matrix reconstruct(const SpectralDecomposition& d) {
  return d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.transpose();
}

}  // namespace

TEST(SymMatrix, RejectsAsymmetricAndNonFinite) {
  Matrix m(2, 2);
  m << 1, 2, 2.1, 1;
  EXPECT_THROW(SymMatrix{m}, DomainError);
  m << 1, std::nan(""), std::nan(""), 1;
  EXPECT_THROW(SymMatrix{m}, DomainError);
  EXPECT_THROW(SymMatrix{Matrix(2, 3)}, ContractError);
}

TEST(SymEig, DiagonalCase) {
  const auto d = sym_eig(SymMatrix::diagonal(Vector::LinSpaced(2, 1, 2)));
  EXPECT_DOUBLE_EQ(d.eigenvalues(0), 2.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues(1), 1.0);
  EXPECT_NEAR(std::abs(d.eigenvectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.eigenvectors(0, 1)), 1.0, 1e-15);
}

TEST(SymEig, Identity) {
  const auto d = sym_eig(SymMatrix::identity(4));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.eigenvalues(i), 1.0);
}

TEST(SymEig, RandomSpdReconstruction) {
  RngStream rng(42, 0);
  for (Eigen::Index dim : {3, 17, 64, 200}) {
    const Matrix m = random_spd(dim, rng);
    const auto d = sym_eig(SymMatrix(m));
    EXPECT_LE((m - reconstruct(d)).norm() / m.norm(), 1e-9);
    EXPECT_LE((d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(dim, dim)).norm(), 1e-9);
    for (Eigen::Index i = 1; i < dim; ++i) EXPECT_GE(d.eigenvalues(i - 1), d.eigenvalues(i));
  }
}

TEST(SymEig, IndefiniteRaises) {
  Matrix m(2, 2);
  m << 1, 0, 0, -0.5;
  EXPECT_THROW(sym_eig(SymMatrix(m)), DomainError);
}

TEST(SymEig, RoundOffNegativesAreClipped) {
  Matrix m(2, 2);
  m << 1, 0, 0, -1e-13;
  const auto d = sym_eig(SymMatrix(m));
  EXPECT_EQ(d.clipped()(1), 0.0);
  EXPECT_EQ(d.rank(), 1);
}

TEST(FracPower, ExactRoots) {
  Vector diag(2);
  diag << 4, 1;
  const auto d = sym_eig(SymMatrix::diagonal(diag));
  const Matrix half = frac_power(d, 0.5).matrix();
  EXPECT_NEAR(half(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(half(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(half(0, 1), 0.0, 1e-14);
  EXPECT_LE((frac_power(d, 1.0).matrix() - Matrix(diag.asDiagonal())).norm(), 1e-14);
  EXPECT_LE((frac_power(d, 0.0).matrix() - Matrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_THROW(frac_power(d, -0.1), DomainError);
}

TEST(FracPower, ZeroPowerIsIdentityEvenOnSingularSpectrum) {
  Vector diag(3);
  diag << 1, 0, 0;
  const auto d = sym_eig(SymMatrix::diagonal(diag));
  EXPECT_LE((frac_power(d, 0.0).matrix() - Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(FracPower, SemigroupProperty) {
  RngStream rng(7, 1);
  const auto d = sym_eig(SymMatrix(random_spd(24, rng)));
  const double rs[] = {0.25, 0.5, 1.0};
  for (double r1 : rs) {
    for (double r2 : rs) {
      const Matrix lhs = frac_power(d, r1 + r2).matrix();
      const Matrix rhs = frac_power(d, r1).matrix() * frac_power(d, r2).matrix();
      EXPECT_LE((lhs - rhs).norm() / lhs.norm(), 1e-9) << r1 << " " << r2;
    }
  }
}

TEST(FracPower, ApplyMatchesMatrix) {
  RngStream rng(8, 1);
  const auto d = sym_eig(SymMatrix(random_spd(16, rng)));
  Vector v(16);
  for (int i = 0; i < 16; ++i) v(i) = rng.normal();
  EXPECT_LE((apply_frac_power(d, 0.5, v) - frac_power(d, 0.5) * v).norm(), 1e-12);
}

TEST(SpdSolve, SmallExamples) {
  Vector rhs(2);
  rhs << 2, 2;
  const Vector x = spd_solve(SymMatrix::identity(2), 1.0, rhs);
  EXPECT_NEAR(x(0), 1.0, 1e-15);
  EXPECT_NEAR(x(1), 1.0, 1e-15);
  Vector diag(2);
  diag << 1, 3;
  rhs << 2, 4;
  const Vector y = spd_solve(SymMatrix::diagonal(diag), 1.0, rhs);
  EXPECT_NEAR(y(0), 1.0, 1e-15);
  EXPECT_NEAR(y(1), 1.0, 1e-15);
  EXPECT_THROW(spd_solve(SymMatrix::identity(2), 0.0, rhs), DomainError);
  EXPECT_THROW(spd_solve(SymMatrix::identity(2), -1.0, rhs), DomainError);
}

TEST(SpdSolve, AgreesWithDenseInverseOnRandomInstances) {
  RngStream rng(2024, 3);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.index(64));
    const Matrix m = random_spd(dim, rng, 0.0);
    const double shift = 0.01 + rng.uniform();
    Vector rhs(dim);
    for (Eigen::Index i = 0; i < dim; ++i) rhs(i) = rng.normal();
    const Vector x = spd_solve(SymMatrix(m), shift, rhs);
    const Matrix shifted = m + shift * Matrix::Identity(dim, dim);
    EXPECT_LE((shifted * x - rhs).norm(), 1e-10 * rhs.norm());
    const Vector oracle = shifted.inverse() * rhs;
    EXPECT_LE((x - oracle).norm(), 1e-10 * oracle.norm());
  }
}

TEST(OperatorNorm, MatchesLargestSingularValue) {
  Matrix m(2, 2);
  m << 3, 0, 0, -4;
  EXPECT_NEAR(operator_norm(m), 4.0, 1e-14);
}
