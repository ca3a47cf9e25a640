#include "helpers.hpp"

#include "ggn/error.hpp"
#include "ggn/numerics.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace ggn;
using namespace testing;

TEST_SUITE("numerics") {

TEST_CASE("solve_spd on identity and diagonal systems") {
  const Vector b3 = (Vector(3) << 1, 2, 3).finished();
  CHECK(numerics::solve_spd(Matrix::Identity(3, 3), b3).isApprox(b3, 0.0));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  const Vector x = numerics::solve_spd(d, Vector((Vector(2) << 2, 4).finished()));
  CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("solve_spd residual on random SPD systems") {
  std::mt19937_64 rng(11);
  const Matrix m8 = random_matrix(rng, 8, 8);
  const Matrix a8 = m8.transpose() * m8 + Matrix::Identity(8, 8);
  const Vector b8 = random_vector(rng, 8);
  const Vector x8 = numerics::solve_spd(a8, b8);
  CHECK((a8 * x8 - b8).norm() <= 1e-10);

  for (Eigen::Index n : {1, 5, 30, 100, 200}) {
    const Matrix m = random_matrix(rng, n, n);
    const Matrix a = m.transpose() * m + 0.1 * Matrix::Identity(n, n);
    const Matrix b = random_matrix(rng, n, 3);
    const auto res = numerics::solve_spd(a, b);
    CHECK(rel_err(Matrix(a * res.solution), b) <= 1e-8);
    CHECK(res.residual_norm == doctest::Approx((a * res.solution - b).norm()).epsilon(1e-6));
  }
}

TEST_CASE("solve_spd errors") {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(numerics::solve_spd(asym, Vector(Vector::Ones(2))), ShapeError);
  CHECK_THROWS_AS(numerics::solve_spd(Matrix::Identity(2, 2), Vector(Vector::Ones(3))), ShapeError);
  Matrix indef = Matrix::Identity(3, 3);
  indef(2, 2) = -1.0;
  try {
    numerics::solve_spd(indef, Vector(Vector::Ones(3)));
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot() == 2);
  }
  // Roundoff-level asymmetry is accepted.
  Matrix near = Matrix::Identity(2, 2);
  near(0, 1) = 1e-14;
  CHECK_NOTHROW(numerics::solve_spd(near, Vector(Vector::Ones(2))));
}

TEST_CASE("solve_general") {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(rng, 6, 6) + 3.0 * Matrix::Identity(6, 6);
  const Vector b = random_vector(rng, 6);
  CHECK((a * numerics::solve_general(a, b) - b).norm() <= 1e-10);
  CHECK_THROWS_AS(numerics::solve_general(Matrix::Zero(3, 3), Vector(Vector::Ones(3))), SingularSystem);
}

TEST_CASE("singular_extremes") {
  const auto id = numerics::singular_extremes(Matrix::Identity(3, 3));
  CHECK(id.max == doctest::Approx(1.0));
  CHECK(id.min == doctest::Approx(1.0));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  const auto s = numerics::singular_extremes(d);
  CHECK(s.max == doctest::Approx(3.0));
  CHECK(s.min == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(rng, 4, 6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a * a.transpose()));
    const auto sv = numerics::singular_extremes(a);
    CHECK(std::abs(sv.max - std::sqrt(es.eigenvalues().maxCoeff())) <= 1e-10);
    CHECK(std::abs(sv.min - std::sqrt(es.eigenvalues().minCoeff())) <= 1e-10);
    const auto st = numerics::singular_extremes(Matrix(a.transpose()));
    CHECK(st.max == doctest::Approx(sv.max).epsilon(1e-12));
    CHECK(st.min == doctest::Approx(sv.min).epsilon(1e-12));
  }
}

TEST_CASE("frobenius_norm") {
  CHECK(numerics::frobenius_norm(Matrix::Identity(2, 2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(numerics::frobenius_norm(Matrix::Zero(3, 4)) == 0.0);
  const Matrix a = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  CHECK(numerics::frobenius_norm(a) == doctest::Approx(std::sqrt(30.0)).epsilon(1e-15));

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(rng, 1 + trial % 7, 2 + trial % 5);
    const double f = numerics::frobenius_norm(m);
    CHECK(rel_err(f * f, (m.transpose() * m).trace()) <= 1e-10);
  }
}

TEST_CASE("symmetric_eigen_extremes and finiteness") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = -1;
  a(1, 1) = 2;
  a(0, 1) = 4;  // symmetric part has off-diagonal 2
  const auto [lo, hi] = numerics::symmetric_eigen_extremes(a);
  CHECK(lo == doctest::Approx(0.5 - std::sqrt(2.25 + 4.0)));
  CHECK(hi == doctest::Approx(0.5 + std::sqrt(2.25 + 4.0)));

  Vector v = Vector::Ones(3);
  CHECK(numerics::all_finite(v));
  v(1) = std::nan("");
  CHECK_FALSE(numerics::all_finite(v));
}

TEST_CASE("trace inequality for PSD times symmetric") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const Matrix b = random_matrix(rng, n, n);
    const Matrix p = b * b.transpose();
    const Matrix c = random_matrix(rng, n, n);
    const Matrix q = 0.5 * (c + c.transpose());
    const auto [lmin, lmax] = numerics::symmetric_eigen_extremes(q);
    const double tp = p.trace();
    const double tpq = (p * q).trace();
    const double slack = 1e-10 * (1.0 + std::abs(tp) * std::max(std::abs(lmin), std::abs(lmax)));
    CHECK(tp * lmin <= tpq + slack);
    CHECK(tpq <= tp * lmax + slack);
  }
}

}
