#pragma once

#include "ggn/model.hpp"
#include "ggn/numerics.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace testing {

using ggn::Matrix;
using ggn::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline Matrix unit_rows(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n0) {
  Matrix x = random_matrix(rng, m, n0);
  for (Eigen::Index i = 0; i < m; ++i) x.row(i).normalize();
  return x;
}

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Central-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    xp(i) = xi + h;
    const double fp = f(xp);
    xp(i) = xi - h;
    const double fm = f(xp);
    xp(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function, one column per coordinate.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    xp(i) = xi + h;
    const Vector fp = f(xp);
    xp(i) = xi - h;
    const Vector fm = f(xp);
    xp(i) = xi;
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Naive per-sample forward: kappa * sum_j v(j,c) act(u_j . x).
inline Matrix naive_forward(const ggn::NetworkConfig& cfg, const Vector& theta, const Matrix& x) {
  const int n = cfg.n, n0 = cfg.n0, k = cfg.outputs;
  Matrix out = Matrix::Zero(x.rows(), k);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < n; ++j) {
      double z = 0.0;
      for (int l = 0; l < n0; ++l) z += theta(j * n0 + l) * x(i, l);
      const double a = ggn::activate(cfg.activation, z);
      for (int c = 0; c < k; ++c) out(i, c) += cfg.kappa * theta(n * n0 + j * k + c) * a;
    }
  }
  return out;
}

}  // namespace testing
