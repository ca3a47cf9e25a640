#pragma once

#include <Eigen/Dense>

#include <utility>

namespace ggn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

namespace numerics {

inline constexpr double kSymmetryTolerance = 1e-10;

struct SpdSolveResult {
  Matrix solution;
  double residual_norm = 0.0;  // ||A X - B||_F, computed after the solve
};

struct SingularExtremes {
  double max = 0.0;
  double min = 0.0;
};

/// Solves A X = B for symmetric positive-definite A by Cholesky factorization.
/// No damping is added. Throws ShapeError on size mismatch or asymmetry and
/// NotPositiveDefinite carrying the index of the first non-positive pivot.
SpdSolveResult solve_spd(const Matrix& a, const Matrix& b);
Vector solve_spd(const Matrix& a, const Vector& b);

/// Solves a general square system by partial-pivot LU. Throws SingularSystem
/// when a pivot vanishes.
Matrix solve_general(const Matrix& a, const Matrix& b);
Vector solve_general(const Matrix& a, const Vector& b);

/// Largest and smallest singular values of a nonempty matrix (min over the
/// min(rows, cols) singular values).
SingularExtremes singular_extremes(const Matrix& a);

double frobenius_norm(const Matrix& a);

/// Extreme eigenvalues of the symmetric part of a square matrix.
std::pair<double, double> symmetric_eigen_extremes(const Matrix& a);

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

}  // namespace numerics
}  // namespace ggn
