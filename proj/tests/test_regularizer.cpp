#include "helpers.hpp"

#include "ggn/error.hpp"
#include "ggn/regularizer.hpp"

#include <doctest.h>

using namespace ggn;
using namespace testing;

namespace {

// Eq. (14)-style summand written out before simplification.
double raw_summand(double mu, double t) {
  const double s = std::sqrt(mu * mu + t * t);
  return (mu * mu - mu * s + t * t) / s;
}

}  // namespace

TEST_SUITE("regularizer") {

TEST_CASE("value closed forms") {
  const GscRegularizer r(1.0, 1.0, 1);
  CHECK(r.value(Vector::Zero(1)) == 0.0);
  CHECK(r.value(Vector::Constant(1, 1.0)) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
  CHECK(r.value(Vector::Constant(1, 100.0)) == doctest::Approx(std::sqrt(10001.0) - 1.0).epsilon(1e-15));
  CHECK(r.value(Vector::Constant(1, 100.0)) == doctest::Approx(99.005).epsilon(1e-5));
}

TEST_CASE("algebraic identity holds per coordinate") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> logmag(-8.0, 6.0);
  for (double mu : {1e-3, 0.1, 1.0, 10.0}) {
    const GscRegularizer r(1.0, mu, 1);
    for (int i = 0; i < 500; ++i) {
      const double t = (i % 2 ? -1.0 : 1.0) * std::pow(10.0, logmag(rng));
      const double simplified = r.value(Vector::Constant(1, t));
      const double raw = raw_summand(mu, t);
      CHECK(std::abs(simplified - raw) <= 1e-12 * std::max(1.0, std::abs(raw)));
    }
  }
}

TEST_CASE("gradient and Hessian against finite differences") {
  std::mt19937_64 rng(2);
  for (double mu : {0.3, 1.0, 3.0}) {
    const GscRegularizer r(0.7, mu, 25);
    const Vector theta = random_vector(rng, 25, 2.0);
    const Vector g = r.gradient(theta);
    const Vector fd = fd_gradient([&](const Vector& t) { return r.value(t); }, theta, 1e-5);
    CHECK(rel_err(g, fd) <= 1e-7);

    Vector fdh(25);
    for (Eigen::Index i = 0; i < 25; ++i) {
      Vector tp = theta, tm = theta;
      tp(i) += 1e-5;
      tm(i) -= 1e-5;
      fdh(i) = (r.gradient(tp)(i) - r.gradient(tm)(i)) / 2e-5;
    }
    CHECK(rel_err(r.hessian_diag(theta), fdh) <= 1e-6);
  }
}

TEST_CASE("gradient and Hessian special values") {
  const GscRegularizer r(0.5, 2.0, 4);
  CHECK(r.gradient(Vector::Zero(4)).isZero(0.0));
  const Vector h0 = r.hessian_diag(Vector::Zero(4));
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(h0(i) == doctest::Approx(0.5 / 2.0).epsilon(1e-15));

  const GscRegularizer unit(1.0, 1.0, 1);
  CHECK(std::abs(unit.gradient(Vector::Constant(1, 1000.0))(0) - 1.0) <= 1e-5);
}

TEST_CASE("gradient bound, Hessian positivity and monotonicity") {
  std::mt19937_64 rng(3);
  const GscRegularizer r(0.3, 0.05, 200);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector theta = random_vector(rng, 200, std::pow(10.0, trial % 5 - 2));
    CHECK(r.gradient(theta).cwiseAbs().maxCoeff() <= 0.3);
    CHECK(r.hessian_diag(theta).minCoeff() > 0.0);
  }
  const GscRegularizer one(1.0, 0.5, 1);
  double prev = one.hessian_diag(Vector::Zero(1))(0);
  for (double t = 0.01; t < 100.0; t *= 1.3) {
    const double h = one.hessian_diag(Vector::Constant(1, -t))(0);
    CHECK(h < prev);
    prev = h;
  }
}

TEST_CASE("convexity on random pairs") {
  std::mt19937_64 rng(4);
  const GscRegularizer r(1.0, 0.2, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector a = random_vector(rng, 30), b = random_vector(rng, 30);
    CHECK(r.value(0.5 * (a + b)) <= 0.5 * r.value(a) + 0.5 * r.value(b) + 1e-12);
  }
}

TEST_CASE("GSC constants") {
  const GscRegularizer r(1e-4, 10.0, 2100);
  CHECK(r.nu() == 2.6);
  CHECK(r.m_bar() == doctest::Approx(2.0 * std::pow(10.0, -0.7) * std::pow(2100.0, 0.2)).epsilon(1e-14));
  CHECK(r.m_step() == doctest::Approx(1e-4 * r.m_bar()).epsilon(1e-14));
  CHECK(r.m_gsc() == doctest::Approx(std::pow(1e-4, 1.0 - 1.3) * r.m_bar()).epsilon(1e-12));
  CHECK_THROWS_AS(GscRegularizer(0.0, 1.0, 3), DomainError);
  CHECK_THROWS_AS(GscRegularizer(1.0, -1.0, 3), DomainError);
}

TEST_CASE("tail restriction") {
  GscRegularizer r(2.0, 1.0, 5);
  r.restrict_to_tail(2, 1e-3);
  CHECK(r.first_penalized() == 3);
  const Vector theta = Vector::Constant(5, 1.0);
  CHECK(r.value(theta) == doctest::Approx(2.0 * 2.0 * (std::sqrt(2.0) - 1.0)));
  const Vector g = r.gradient(theta);
  CHECK(g.head(3).isZero(0.0));
  CHECK(g(4) == doctest::Approx(2.0 / std::sqrt(2.0)));
  const Vector h = r.hessian_diag(theta);
  CHECK(h.head(3).isConstant(1e-3, 0.0));
}

TEST_CASE("omega_nu values and limits") {
  for (double nu : {2.0, 2.3, 2.6, 3.0, 3.5, 4.0}) {
    CHECK(std::abs(omega_nu(nu, 1e-9) - 0.5) <= 1e-6);
    CHECK(std::abs(omega_nu(nu, -1e-9) - 0.5) <= 1e-6);
  }
  CHECK(std::abs(omega_nu(3.0, 0.5) - 0.772589) <= 1e-6);
  CHECK(omega_nu(3.0, 0.5) == doctest::Approx((-0.5 - std::log(0.5)) / 0.25).epsilon(1e-14));
  CHECK(omega_nu(2.0, 1.0) == doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(omega_nu(2.6, 1.0), DomainError);
  CHECK_THROWS_AS(omega_nu(5.0, 0.1), DomainError);
}

TEST_CASE("omega_nu is continuous across the series switch and increasing") {
  for (double nu : {2.0, 2.6, 3.0, 4.0}) {
    CHECK(std::abs(omega_nu(nu, 1e-4 * (1 - 1e-9)) - omega_nu(nu, 1e-4 * (1 + 1e-9))) <= 1e-9);
    CHECK(std::abs(omega_nu(nu, -1e-4 * (1 - 1e-9)) - omega_nu(nu, -1e-4 * (1 + 1e-9))) <= 1e-9);
    double prev = omega_nu(nu, -5.0);
    for (double r = -5.0 + 0.01; r < 0.99; r += 0.01) {
      const double w = omega_nu(nu, r);
      CHECK(w > prev);
      prev = w;
    }
  }
}

TEST_CASE("d_nu") {
  std::mt19937_64 rng(6);
  const Vector a = random_vector(rng, 6);
  CHECK(d_nu(2.6, 1.0, a, a, Vector::Ones(6)) == 0.0);
  const Vector z = Vector::Zero(2);
  const Vector two = (Vector(2) << 2.0, 0.0).finished();
  CHECK(d_nu(2.0, 3.0, z, two, Vector::Ones(2)) == doctest::Approx(6.0));

  for (int trial = 0; trial < 20; ++trial) {
    const Vector from = random_vector(rng, 10), to = random_vector(rng, 10);
    const Vector h = random_vector(rng, 10).cwiseAbs();
    double e2 = 0.0, l2 = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double d = to(i) - from(i);
      e2 += d * d;
      l2 += h(i) * d * d;
    }
    const double expected = 0.3 * 1.7 * std::pow(std::sqrt(e2), 0.4) * std::pow(std::sqrt(l2), 0.6);
    CHECK(rel_err(d_nu(2.6, 1.7, from, to, h), expected) <= 1e-10);
  }
}

TEST_CASE("dual local norm") {
  const GscRegularizer unit(1.0, 1.0, 1);
  CHECK(dual_local_norm(unit, Vector::Zero(1)).eta == 0.0);
  CHECK(dual_local_norm(unit, Vector::Constant(1, 1.0)).eta == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-14));

  std::mt19937_64 rng(7);
  const GscRegularizer r(0.1, 0.4, 15);
  const Vector theta = random_vector(rng, 15);
  const auto geo = dual_local_norm(r, theta);
  const Matrix hd = geo.hessian_diag.asDiagonal();
  const Vector g = r.gradient(theta);
  const double dense = std::sqrt(g.dot(numerics::solve_spd(hd, g)));
  CHECK(rel_err(geo.eta, dense) <= 1e-10);
}

TEST_CASE("self-concordance sandwich on small displacements") {
  std::mt19937_64 rng(8);
  for (double tau : {1e-4, 1e-2, 1.0}) {
    for (double mu : {0.1, 1.0, 10.0}) {
      const GscRegularizer r(tau, mu, 12);
      int checked = 0;
      for (int trial = 0; trial < 100; ++trial) {
        const Vector from = random_vector(rng, 12, mu);
        const Vector delta = random_vector(rng, 12, 1e-2 * mu);
        const Vector to = from + delta;
        const Vector h = r.hessian_diag(from);
        const double d = d_nu(r, from, to, h);
        if (d >= 1.0) continue;
        ++checked;
        const double gap = r.value(to) - r.value(from) - r.gradient(from).dot(delta);
        const double ln2 = std::pow(local_norm(delta, h), 2);
        const double slack = 1e-9 * ln2 + 1e-15;
        CHECK(omega_nu(r.nu(), -d) * ln2 <= gap + slack);
        CHECK(gap <= omega_nu(r.nu(), d) * ln2 + slack);
      }
      CHECK(checked > 0);
    }
  }
}

TEST_CASE("suggest_tau") {
  CHECK(suggest_tau(1.0, 0.0, Matrix::Identity(3, 3)) == kUnboundedTau);
  // (m+1) lambda_1 = 9 gives a right-hand side of 3.
  const Matrix g = Matrix::Identity(3, 3) * std::sqrt(3.0);
  CHECK(suggest_tau(1.0, 1.0, g) == doctest::Approx(2.0));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix gt = random_matrix(rng, 5, 5);
    const double mbar = 0.5 + trial, eta = 0.1 * (trial + 1);
    const double tau = suggest_tau(mbar, eta, gt);
    const double lambda1 = numerics::singular_extremes(gt).max;
    const double rhs = std::sqrt(5.0) * lambda1;
    CHECK(rel_err(1.0 + tau * mbar * eta, rhs) <= 1e-8);
  }
  CHECK_THROWS_AS(suggest_tau(1.0, 1.0, Matrix::Identity(2, 2) * 0.1), DomainError);
}

}
