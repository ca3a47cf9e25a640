#include "helpers.hpp"

#include "ggn/data.hpp"
#include "ggn/metrics.hpp"

#include <doctest.h>

using namespace ggn;
using namespace testing;

TEST_SUITE("metrics") {

TEST_CASE("T-I measure") {
  std::mt19937_64 rng(1);
  const Matrix pre = random_matrix(rng, 6, 9);
  const auto snap = ti_snapshot(pre, random_matrix(rng, 9, 3));
  CHECK(snap.signs.cwiseAbs().minCoeff() == 1.0);
  CHECK(ti_measure(snap, pre, false) == 100.0);
  CHECK(ti_measure(snap, pre, true) == 100.0);
  CHECK(ti_measure(snap, -pre, false) == 0.0);
  CHECK(ti_measure(snap, -pre, true) == 0.0);

  Matrix fin = -pre;
  fin(0, 0) = 0.0;
  fin(1, 1) = 1e-12;
  CHECK(ti_measure(snap, fin, false) == 0.0);
  CHECK(ti_measure(snap, fin, true) == doctest::Approx(100.0 / 54.0));
  CHECK(ti_measure(snap, fin, true, 1e-8) == doctest::Approx(200.0 / 54.0));
  CHECK_THROWS(ti_measure(snap, Matrix::Zero(5, 9), false));
}

TEST_CASE("T-I include-zeros variant dominates the plain variant") {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution zero(0.2);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix start = random_matrix(rng, 4, 7);
    Matrix fin = random_matrix(rng, 4, 7);
    for (Eigen::Index i = 0; i < start.size(); ++i) {
      if (zero(rng)) start.data()[i] = 0.0;
      if (zero(rng)) fin.data()[i] = 0.0;
    }
    const auto snap = ti_snapshot(start, Matrix::Zero(7, 2));
    CHECK(ti_measure(snap, fin, true) >= ti_measure(snap, fin, false));
    CHECK(ti_measure(snap, fin, true, 1e-3) >= ti_measure(snap, fin, true));
  }
}

TEST_CASE("count_zeros") {
  CHECK(count_zeros(Vector::Zero(5)) == 5);
  CHECK(count_zeros(Vector::Ones(4), 0.0) == 0);
  CHECK(count_zeros((Vector(3) << 1e-9, 1.0, 0.0).finished(), 1e-8) == 2);
  std::mt19937_64 rng(3);
  const Vector theta = random_vector(rng, 300, 1e-3);
  Eigen::Index prev = 0;
  for (double tol = 0.0; tol < 1e-2; tol += 1e-4) {
    const auto c = count_zeros(theta, tol);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("accuracy") {
  const std::vector<int> labels{2, 0, 1, 1};
  CHECK(accuracy(one_hot(labels, 3), labels) == 1.0);

  const Matrix uniform = Matrix::Constant(4, 3, 0.25);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(argmax_row(uniform, i) == 0);
  CHECK(accuracy(uniform, labels) == 0.25);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cls(0, 9);
  std::vector<int> random_labels(10000);
  for (auto& l : random_labels) l = cls(rng);
  const Matrix preds = random_matrix(rng, 10000, 10);
  const double acc = accuracy(preds, random_labels);
  CHECK(std::abs(acc - 0.1) <= 0.01);

  const Matrix shifted = (preds.array() + 3.5).matrix();
  CHECK(accuracy(shifted, random_labels) == acc);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 1000, 2, 3000}) == doctest::Approx(0.8));
  // Ties get average ranks: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  const double r = spearman({1, 2, 2, 3}, {1, 2, 3, 4});
  const double expected = 4.5 / std::sqrt(4.5 * 5.0);
  CHECK(r == doctest::Approx(expected));
}

}
