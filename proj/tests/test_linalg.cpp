#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lracma/linalg.hpp"
#include "lracma/random.hpp"

using namespace lracma;

namespace {

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

SymMatrix random_spd(int d, Rng& rng) {
  Matrix b(d, d);
  rng.fill_normal(b);
  return SymMatrix(b.transpose() * b + 1e-3 * Matrix::Identity(d, d));
}

Matrix two_one() { return (Matrix(2, 2) << 2, 1, 1, 2).finished(); }

}  // namespace

TEST(SymMatrix, MirrorsLowerTriangle) {
  Matrix a(2, 2);
  a << 1, 99, 2, 3;
  const SymMatrix s(a);
  EXPECT_EQ(s(0, 1), 2.0);
  EXPECT_EQ(s(1, 0), 2.0);
}

TEST(SymMatrix, RejectsNonSquareAndEmpty) {
  EXPECT_THROW(SymMatrix(Matrix(2, 3)), Error);
  EXPECT_THROW(SymMatrix(Matrix(0, 0)), Error);
}

TEST(SymEig, Identity) {
  const auto e = sym_eig(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values[i], 1.0, 1e-15);
  EXPECT_LE(max_abs(e.vectors.transpose() * e.vectors - Matrix::Identity(3, 3)), 1e-10);
}

TEST(SymEig, Diagonal) {
  const auto e = sym_eig(SymMatrix::diagonal(Vector::Map(std::array{4.0, 9.0}.data(), 2)));
  EXPECT_NEAR(e.values[0], 4.0, 1e-14);
  EXPECT_NEAR(e.values[1], 9.0, 1e-14);
}

TEST(SymEig, TwoByTwoFromCharacteristicPolynomial) {
  // (2 - l)^2 - 1 = 0 gives l = 1, 3.
  const auto e = sym_eig(SymMatrix(two_one()));
  EXPECT_NEAR(e.values[0], 1.0, 1e-14);
  EXPECT_NEAR(e.values[1], 3.0, 1e-14);
}

TEST(SymEig, NonFiniteEntryIsInvalidMatrix) {
  Matrix a = Matrix::Identity(2, 2);
  a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    sym_eig(SymMatrix(a));
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidMatrix);
  }
}

TEST(SymEig, ReconstructionAndOrthonormalityOnRandomSpd) {
  Rng rng(11);
  for (int d : {1, 2, 5, 10, 30}) {
    const SymMatrix a = random_spd(d, rng);
    const auto e = sym_eig(a);
    EXPECT_LE(max_abs(e.vectors.transpose() * e.vectors - Matrix::Identity(d, d)), 1e-10);
    const Matrix rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LE(max_abs(rebuilt - a.matrix()), 1e-9 * std::max(1.0, max_abs(a.matrix())));
    for (int i = 1; i < d; ++i) EXPECT_LE(e.values[i - 1], e.values[i]);
  }
}

TEST(SymEig, DeterministicForIdenticalInput) {
  Rng rng(5);
  const SymMatrix a = random_spd(8, rng);
  const auto e1 = sym_eig(a);
  const auto e2 = sym_eig(a);
  EXPECT_EQ(e1.values, e2.values);
  EXPECT_EQ(e1.vectors, e2.vectors);
}

TEST(SpdSqrt, DiagonalAndIdentity) {
  const auto r = spd_sqrt(SymMatrix::diagonal(Vector::Map(std::array{4.0, 9.0}.data(), 2)));
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
  EXPECT_LE(max_abs(spd_sqrt(SymMatrix::identity(4)).matrix() - Matrix::Identity(4, 4)), 1e-15);
}

TEST(SpdSqrt, TwoByTwoHasRootEigenvaluesOnSameVectors) {
  const SymMatrix a(two_one());
  const auto ea = sym_eig(a);
  const auto er = sym_eig(spd_sqrt(a));
  EXPECT_NEAR(er.values[0], 1.0, 1e-14);
  EXPECT_NEAR(er.values[1], std::sqrt(3.0), 1e-14);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(std::abs(ea.vectors.col(j).dot(er.vectors.col(j))), 1.0, 1e-12);
  }
}

TEST(SpdInvSqrt, Examples) {
  const auto r = spd_inv_sqrt(SymMatrix::diagonal(Vector::Map(std::array{4.0, 9.0}.data(), 2)));
  EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_LE(max_abs(spd_inv_sqrt(SymMatrix::identity(3)).matrix() - Matrix::Identity(3, 3)), 1e-15);
  const auto s = spd_inv_sqrt(SymMatrix(100.0 * Matrix::Identity(2, 2)));
  EXPECT_LE(max_abs(s.matrix() - 0.1 * Matrix::Identity(2, 2)), 1e-15);
}

TEST(SpdRoots, RandomSpdProperties) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 12;
    const SymMatrix a = random_spd(d, rng);
    const Matrix r = spd_sqrt(a).matrix();
    const Matrix ri = spd_inv_sqrt(a).matrix();
    EXPECT_LE(max_abs(r * r - a.matrix()), 1e-8 * std::max(1.0, max_abs(a.matrix())));
    EXPECT_LE(max_abs(ri * r - Matrix::Identity(d, d)), 1e-8);
    EXPECT_EQ(r, r.transpose());
    const double det = spd_det(a);
    EXPECT_NEAR(det / sym_eig(a).values.prod(), 1.0, 1e-10);
  }
}

TEST(SpdDet, Examples) {
  EXPECT_NEAR(spd_det(SymMatrix::diagonal(Vector::Constant(2, 4.0))), 16.0, 1e-13);
  for (int d : {1, 3, 7}) EXPECT_NEAR(spd_det(SymMatrix::identity(d)), 1.0, 1e-14);
  EXPECT_NEAR(spd_det(SymMatrix(two_one())), 3.0, 1e-13);
}

TEST(SpdDet, OverflowIsNumericalRange) {
  const SymMatrix big = SymMatrix::diagonal(Vector::Constant(4, 1e200));
  try {
    spd_det(big);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalRange);
  }
  EXPECT_NEAR(spd_log_det(sym_eig(big)), 4.0 * std::log(1e200), 1e-9);
}

TEST(Clamping, TinyEigenvaluesAreFloored) {
  const SymMatrix a = SymMatrix::diagonal(Vector::Map(std::array{1e-30, 1.0}.data(), 2));
  const auto e = sym_eig(a);
  const auto clamped = clamped_eigenvalues(e.values);
  EXPECT_EQ(clamped[0], kEigenFloorRatio);
  const SymMatrix repaired = spd_repair(a, e);
  EXPECT_NEAR(repaired(0, 0), kEigenFloorRatio, 1e-35);
  // Healthy matrices come back untouched, bit for bit.
  const SymMatrix healthy(two_one());
  EXPECT_EQ(spd_repair(healthy, sym_eig(healthy)).matrix(), healthy.matrix());
}

TEST(Clamping, NoPositiveEigenvalueIsNotPositiveDefinite) {
  const SymMatrix neg(-Matrix::Identity(2, 2));
  try {
    spd_sqrt(neg);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}
