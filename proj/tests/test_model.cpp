#include "helpers.hpp"

#include "ggn/error.hpp"
#include "ggn/kernels.hpp"
#include "ggn/model.hpp"

#include <doctest.h>

using namespace ggn;
using namespace testing;

namespace {

NetworkParams random_params(const NetworkConfig& cfg, std::mt19937_64& rng) {
  return NetworkParams(cfg, random_vector(rng, cfg.param_count()));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter layout aliases theta") {
  const auto cfg = NetworkConfig::standard(3, 4, Activation::SiLU, 2);
  CHECK(cfg.param_count() == 4 * 3 + 4 * 2);
  CHECK(cfg.kappa == doctest::Approx(0.5));
  NetworkParams p(cfg);
  p.u()(1, 2) = 7.0;
  p.v()(3, 1) = -2.0;
  CHECK(p.theta()(1 * 3 + 2) == 7.0);
  CHECK(p.theta()(12 + 3 * 2 + 1) == -2.0);
  CHECK_THROWS_AS(NetworkParams(cfg, Vector::Zero(5)), ShapeError);
}

TEST_CASE("forward closed forms") {
  std::mt19937_64 rng(1);
  const auto cfg = NetworkConfig::standard(4, 6, Activation::SiLU);
  const auto p = random_params(cfg, rng);
  CHECK(forward(cfg, p, Matrix::Zero(3, 4)).isZero(0.0));

  NetworkParams zero_v = p;
  zero_v.v().setZero();
  CHECK(forward(cfg, zero_v, random_matrix(rng, 5, 4)).isZero(0.0));

  NetworkConfig one{1, 1, 1, 1.0, Activation::SiLU};
  const NetworkParams q(one, (Vector(2) << 1.0, 2.0).finished());
  const Matrix out = forward(one, q, Matrix::Ones(1, 1));
  CHECK(out(0, 0) == doctest::Approx(2.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(out(0, 0) == doctest::Approx(1.462117).epsilon(1e-6));
}

TEST_CASE("forward matches a naive loop and is homogeneous in v") {
  std::mt19937_64 rng(2);
  for (Activation a : {Activation::SiLU, Activation::ReLU}) {
    for (int k : {1, 3}) {
      const auto cfg = NetworkConfig::standard(5, 7, a, k);
      const auto p = random_params(cfg, rng);
      const Matrix x = random_matrix(rng, 9, 5);
      const Matrix out = forward(cfg, p, x);
      CHECK(rel_err(out, naive_forward(cfg, p.theta(), x)) <= 1e-13);

      NetworkParams p2 = p;
      p2.v() *= 2.0;
      CHECK((forward(cfg, p2, x) - 2.0 * out).norm() == 0.0);
    }
  }
}

TEST_CASE("preactivations") {
  std::mt19937_64 rng(3);
  const auto cfg = NetworkConfig::standard(3, 5, Activation::SiLU);
  auto p = random_params(cfg, rng);
  CHECK(preactivations(cfg, p, Matrix::Zero(4, 3)).isZero(0.0));

  const Matrix x = random_matrix(rng, 6, 3);
  const Matrix pre = preactivations(cfg, p, x);
  REQUIRE(pre.rows() == 5);
  REQUIRE(pre.cols() == 6);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 6; ++i) {
      double z = 0.0;
      for (int l = 0; l < 3; ++l) z += p.u()(j, l) * x(i, l);
      CHECK(std::abs(pre(j, i) - z) <= 1e-12);
    }

  // Identity-padded u picks input coordinates.
  p.u().setZero();
  for (int j = 0; j < 3; ++j) p.u()(j, j) = 1.0;
  const Matrix sel = preactivations(cfg, p, Matrix::Identity(3, 3));
  CHECK(sel.topRows(3).isIdentity(0.0));
  CHECK(sel.bottomRows(2).isZero(0.0));
}

TEST_CASE("jacobian shape, zero input and finite differences") {
  std::mt19937_64 rng(4);
  const auto cfg = NetworkConfig::standard(2, 3, Activation::SiLU);
  const auto p = random_params(cfg, rng);
  const Matrix j0 = jacobian(cfg, p, Matrix::Zero(4, 2));
  CHECK(j0.rows() == 4);
  CHECK(j0.cols() == 3 * 2 + 3);
  CHECK(j0.isZero(0.0));

  const Matrix x = random_matrix(rng, 4, 2);
  const Matrix jac = jacobian(cfg, p, x);
  const Matrix fd = fd_jacobian(
      [&](const Vector& th) { return flatten_outputs(forward(cfg, NetworkParams(cfg, th), x)); },
      p.theta(), 1e-5);
  CHECK(rel_err(jac, fd) <= 1e-6);
}

TEST_CASE("jacobian rows match finite differences on random configs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + trial % 2;
    const auto cfg = NetworkConfig::standard(2 + trial % 4, 3 + trial % 6, Activation::SiLU, k);
    const auto p = random_params(cfg, rng);
    const Matrix x = unit_rows(rng, 3 + trial % 3, cfg.n0);
    const Matrix jac = jacobian(cfg, p, x);
    const Matrix fd = fd_jacobian(
        [&](const Vector& th) { return flatten_outputs(forward(cfg, NetworkParams(cfg, th), x)); },
        p.theta(), 1e-5);
    double worst = 0.0;
    for (Eigen::Index r = 0; r < jac.rows(); ++r)
      worst = std::max(worst, rel_err(Vector(jac.row(r).transpose()), Vector(fd.row(r).transpose())));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("squared loss") {
  const Matrix y = (Matrix(3, 1) << 1, -2, 0.5).finished();
  const auto same = squared_loss(y, y);
  CHECK(same.value == 0.0);
  CHECK(same.output_gradient.isZero(0.0));

  const auto one = squared_loss(Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1));
  CHECK(one.value == doctest::Approx(2.0));
  CHECK(one.output_gradient(0) == doctest::Approx(2.0));
  CHECK(one.output_hessian_scale == 1.0);

  std::mt19937_64 rng(6);
  const Matrix yy = random_matrix(rng, 5, 1);
  const Matrix phi = random_matrix(rng, 5, 1);
  const auto lb = squared_loss(phi, yy);
  CHECK(lb.output_hessian_scale == doctest::Approx(0.2));
  const Vector fd = fd_gradient(
      [&](const Vector& f) { return squared_loss(Matrix(f), yy).value; }, Vector(phi), 1e-6);
  CHECK(rel_err(lb.output_gradient, fd) <= 1e-8);
  CHECK_THROWS_AS(squared_loss(phi, Matrix::Zero(4, 1)), ShapeError);
}

TEST_CASE("lipschitz bound arithmetic") {
  NetworkConfig unit{1, 1, 1, 1.0, Activation::SiLU};
  CHECK(lipschitz_J_bound(unit, 1, 1.0, 0.0) == doctest::Approx(std::sqrt(2.0)));
  const auto four = NetworkConfig::standard(1, 4, Activation::SiLU);
  CHECK(lipschitz_J_bound(four, 2, 1.0, 1.0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(lipschitz_J_bound(four, 4, 1.0, 1.0) == doctest::Approx(2.0 * lipschitz_J_bound(four, 2, 1.0, 1.0)));
}

TEST_CASE("empirical local Lipschitzness of the Jacobian") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto cfg = NetworkConfig::standard(4, 8, Activation::SiLU);
  const Vector center = random_vector(rng, cfg.param_count());
  const Matrix x = unit_rows(rng, 5, 4);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector a = center, b = center;
    Vector da = random_vector(rng, center.size()), db = random_vector(rng, center.size());
    a += 0.1 * std::abs(unif(rng)) * da.normalized();
    b += 0.1 * std::abs(unif(rng)) * db.normalized();
    const NetworkParams pa(cfg, a), pb(cfg, b);
    const double lv = std::max(pa.v().norm(), pb.v().norm());
    const double lj = lipschitz_J_bound(cfg, x.rows(), kSiluDerivativeBound, lv);
    const double lhs = (jacobian(cfg, pa, x) - jacobian(cfg, pb, x)).norm();
    if (lhs > lj * (a - b).norm()) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("structured evaluation agrees with the dense Jacobian") {
  std::mt19937_64 rng(8);
  for (int k : {1, 2}) {
    const auto cfg = NetworkConfig::standard(3, 6, Activation::SiLU, k);
    const auto p = random_params(cfg, rng);
    const Matrix x = random_matrix(rng, 5, 3);
    const NetworkEvaluation ev(cfg, p, x);
    const Matrix jac = jacobian(cfg, p, x);
    CHECK(rel_err(ev.dense_jacobian(), jac) <= 1e-14);
    CHECK(rel_err(Matrix(ev.outputs()), forward(cfg, p, x)) <= 1e-14);
    const Vector w = random_vector(rng, cfg.param_count()).cwiseAbs();
    CHECK(rel_err(ev.weighted_gram(w), Matrix(jac * w.asDiagonal() * jac.transpose())) <= 1e-12);
    const Vector d = random_vector(rng, cfg.param_count());
    CHECK(rel_err(ev.apply(d), Vector(jac * d)) <= 1e-12);
    const Vector r = random_vector(rng, ev.output_count());
    CHECK(rel_err(ev.apply_transpose(r), Vector(jac.transpose() * r)) <= 1e-12);
    for (Eigen::Index c : {Eigen::Index(0), Eigen::Index(7), cfg.param_count() - 1})
      CHECK(rel_err(ev.column(c), Vector(jac.col(c))) <= 1e-14);
  }
}

}
