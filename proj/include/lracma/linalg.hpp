#pragma once

// Small dense symmetric linear algebra used by the optimizer: eigensystems,
// SPD square roots, determinants and eigenvalue-floor repair.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "lracma/error.hpp"

namespace lracma {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Eigenvalues below this fraction of the largest one are raised to it.
inline constexpr double kEigenFloorRatio = 1e-20;

/// Dense symmetric matrix. Only the lower triangle of the input is read; the
/// upper triangle is always a mirror of it, so symmetry is exact.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() < 1) {
      throw Error(ErrorCode::InvalidMatrix,
                  "symmetric matrix must be square with dim >= 1, got " +
                      std::to_string(a_.rows()) + "x" + std::to_string(a_.cols()));
    }
    mirror_lower();
  }

  static SymMatrix identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }

  static SymMatrix diagonal(const Vector& diag) {
    return SymMatrix(Matrix(diag.asDiagonal()));
  }

  Eigen::Index dim() const noexcept { return a_.rows(); }
  const Matrix& matrix() const noexcept { return a_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }

  bool all_finite() const { return a_.allFinite(); }

  friend SymMatrix operator*(double s, const SymMatrix& m) { return SymMatrix(s * m.a_); }

 private:
  void mirror_lower() {
    for (Eigen::Index j = 1; j < a_.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) a_(i, j) = a_(j, i);
    }
  }

  Matrix a_;
};

struct EigenDecomposition {
  Vector values;   // nondecreasing
  Matrix vectors;  // orthonormal columns
};

inline EigenDecomposition sym_eig(const SymMatrix& a) {
  if (!a.all_finite()) {
    throw Error(ErrorCode::InvalidMatrix, "matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidMatrix, "eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Applies the eigenvalue floor. Throws NotPositiveDefinite if nothing
/// positive remains to anchor the floor.
inline Vector clamped_eigenvalues(const Vector& values) {
  const double largest = values.maxCoeff();
  if (!(largest > 0.0) || !std::isfinite(largest)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "largest eigenvalue is " + std::to_string(largest));
  }
  const double floor = kEigenFloorRatio * largest;
  Vector out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::max(out[i], floor);
  if (!(out.minCoeff() > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "eigenvalue floor underflowed to zero");
  }
  return out;
}

/// Q f(Λ) Qᵀ for an already decomposed SPD matrix.
template <class F>
SymMatrix spd_function(const EigenDecomposition& eig, F&& f) {
  const Vector clamped = clamped_eigenvalues(eig.values);
  Vector mapped(clamped.size());
  for (Eigen::Index i = 0; i < clamped.size(); ++i) mapped[i] = f(clamped[i]);
  return SymMatrix(eig.vectors * mapped.asDiagonal() * eig.vectors.transpose());
}

inline SymMatrix spd_sqrt(const EigenDecomposition& eig) {
  return spd_function(eig, [](double x) { return std::sqrt(x); });
}
inline SymMatrix spd_sqrt(const SymMatrix& a) { return spd_sqrt(sym_eig(a)); }

inline SymMatrix spd_inv_sqrt(const EigenDecomposition& eig) {
  return spd_function(eig, [](double x) { return 1.0 / std::sqrt(x); });
}
inline SymMatrix spd_inv_sqrt(const SymMatrix& a) { return spd_inv_sqrt(sym_eig(a)); }

inline double spd_det(const EigenDecomposition& eig) {
  const Vector clamped = clamped_eigenvalues(eig.values);
  const double det = clamped.prod();
  if (!std::isfinite(det) || !(det > 0.0)) {
    throw Error(ErrorCode::NumericalRange, "determinant out of range: " + std::to_string(det));
  }
  return det;
}
inline double spd_det(const SymMatrix& a) { return spd_det(sym_eig(a)); }

/// log det, for callers that only need det^(1/k) and must not overflow.
inline double spd_log_det(const EigenDecomposition& eig) {
  const Vector clamped = clamped_eigenvalues(eig.values);
  const double log_det = clamped.array().log().sum();
  if (!std::isfinite(log_det)) {
    throw Error(ErrorCode::NumericalRange, "log-determinant is not finite");
  }
  return log_det;
}

/// Returns `a` unchanged when no eigenvalue is below the floor, otherwise the
/// matrix rebuilt from floored eigenvalues.
inline SymMatrix spd_repair(const SymMatrix& a, const EigenDecomposition& eig) {
  const double largest = eig.values.maxCoeff();
  if (largest > 0.0 && eig.values.minCoeff() >= kEigenFloorRatio * largest) return a;
  return spd_function(eig, [](double x) { return x; });
}

}  // namespace lracma
