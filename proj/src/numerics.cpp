#include "ggn/numerics.hpp"

#include "ggn/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace ggn::numerics {
namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ShapeError(std::string(what) + ": expected a nonempty square matrix, got " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void require_symmetric(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw ShapeError("solve_spd: matrix is not symmetric (max asymmetry " + std::to_string(asym) +
                     ")");
  }
}

// Unblocked Cholesky used only to locate the failing pivot after the
// blocked factorization has reported failure.
std::size_t first_bad_pivot(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return static_cast<std::size_t>(j);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return static_cast<std::size_t>(n - 1);
}

}  // namespace

SpdSolveResult solve_spd(const Matrix& a, const Matrix& b) {
  require_square(a, "solve_spd");
  if (b.rows() != a.rows()) {
    throw ShapeError("solve_spd: right-hand side has " + std::to_string(b.rows()) +
                     " rows, matrix has " + std::to_string(a.rows()));
  }
  require_symmetric(a);
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(first_bad_pivot(a));
  SpdSolveResult out;
  out.solution = llt.solve(b);
  out.residual_norm = (a * out.solution - b).norm();
  if (!all_finite(out.solution)) throw NotPositiveDefinite(first_bad_pivot(a));
  return out;
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  Matrix rhs = b;
  Matrix x = solve_spd(a, rhs).solution;
  return Eigen::Map<const Vector>(x.data(), x.rows());
}

Matrix solve_general(const Matrix& a, const Matrix& b) {
  require_square(a, "solve_general");
  if (b.rows() != a.rows()) throw ShapeError("solve_general: right-hand side row mismatch");
  Eigen::PartialPivLU<Matrix> lu(a);
  // PartialPivLU does not report singularity; check the U diagonal.
  const auto& packed = lu.matrixLU();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    if (!(std::abs(packed(i, i)) > 1e-300 * scale)) {
      throw SingularSystem("solve_general: zero pivot at index " + std::to_string(i));
    }
  }
  Matrix x = lu.solve(b);
  if (!all_finite(x)) throw SingularSystem("solve_general: non-finite solution");
  return x;
}

Vector solve_general(const Matrix& a, const Vector& b) {
  Matrix rhs = b;
  Matrix x = solve_general(a, rhs);
  return Eigen::Map<const Vector>(x.data(), x.rows());
}

SingularExtremes singular_extremes(const Matrix& a) {
  if (a.size() == 0) throw ShapeError("singular_extremes: empty matrix");
  if (!all_finite(a)) throw DomainError("singular_extremes: non-finite entries");
  Eigen::BDCSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  return {s.maxCoeff(), s.minCoeff()};
}

double frobenius_norm(const Matrix& a) { return a.norm(); }

std::pair<double, double> symmetric_eigen_extremes(const Matrix& a) {
  require_square(a, "symmetric_eigen_extremes");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace ggn::numerics
