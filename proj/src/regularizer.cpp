#include "ggn/regularizer.hpp"

#include "ggn/error.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <string>

namespace ggn {

GscRegularizer::GscRegularizer(double tau, double mu, Eigen::Index p) : tau_(tau), mu_(mu), p_(p) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("regularizer: tau must be > 0");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("regularizer: mu must be > 0");
  if (p < 1) throw DomainError("regularizer: dimension must be >= 1");
}

GscRegularizer& GscRegularizer::restrict_to_tail(Eigen::Index count, double damping) {
  if (count < 1 || count > p_) throw DomainError("regularizer: invalid penalized block size");
  if (count < p_ && !(damping > 0.0)) {
    throw DomainError("regularizer: unpenalized coordinates need a positive Hessian damping");
  }
  first_ = p_ - count;
  damping_ = damping;
  return *this;
}

double GscRegularizer::m_bar() const {
  return 2.0 * std::pow(mu_, -0.7) * std::pow(static_cast<double>(p_ - first_), 0.2);
}

double GscRegularizer::m_gsc() const { return std::pow(tau_, 1.0 - kOrder / 2.0) * m_bar(); }

void GscRegularizer::check(const Vector& theta) const {
  if (theta.size() != p_) {
    throw ShapeError("regularizer: theta has length " + std::to_string(theta.size()) +
                     ", expected " + std::to_string(p_));
  }
}

double GscRegularizer::value(const Vector& theta) const {
  check(theta);
  const double mu2 = mu_ * mu_;
  double acc = 0.0;
  for (Eigen::Index i = first_; i < p_; ++i) {
    const double t2 = theta(i) * theta(i);
    // sqrt(mu^2 + t^2) - mu without cancellation.
    acc += t2 / (std::sqrt(mu2 + t2) + mu_);
  }
  return tau_ * acc;
}

Vector GscRegularizer::gradient(const Vector& theta) const {
  check(theta);
  const double mu2 = mu_ * mu_;
  Vector g = Vector::Zero(p_);
  for (Eigen::Index i = first_; i < p_; ++i) {
    g(i) = tau_ * theta(i) / std::sqrt(mu2 + theta(i) * theta(i));
  }
  return g;
}

Vector GscRegularizer::hessian_diag(const Vector& theta) const {
  check(theta);
  const double mu2 = mu_ * mu_;
  Vector h = Vector::Constant(p_, damping_);
  for (Eigen::Index i = first_; i < p_; ++i) {
    const double s2 = mu2 + theta(i) * theta(i);
    h(i) = tau_ * mu2 / (s2 * std::sqrt(s2));
  }
  return h;
}

namespace {

constexpr double kSeriesThreshold = 1e-4;

// Generalized binomial coefficient C(a, j).
double binomial(double a, int j) {
  double c = 1.0;
  for (int i = 0; i < j; ++i) c *= (a - i) / (i + 1);
  return c;
}

std::array<double, 4> series_coefficients(double nu) {
  if (nu == 2.0) return {1.0 / 2, 1.0 / 6, 1.0 / 24, 1.0 / 120};
  if (nu == 3.0) return {1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5};
  if (nu == 4.0) return {1.0 / 2, 1.0 / 6, 1.0 / 12, 1.0 / 20};
  // omega = -(k/a) sum_{j>=2} C(a, j) (-1)^j r^(j-2)
  // with a = 2(3-nu)/(2-nu), k = (nu-2)/(4-nu).
  const double a = 2.0 * (3.0 - nu) / (2.0 - nu);
  const double k = (nu - 2.0) / (4.0 - nu);
  std::array<double, 4> out{};
  for (int j = 2; j < 6; ++j) out[j - 2] = -(k / a) * binomial(a, j) * ((j % 2 == 0) ? 1.0 : -1.0);
  return out;
}

}  // namespace

double omega_nu(double nu, double r) {
  if (!std::isfinite(r) || !std::isfinite(nu)) throw DomainError("omega_nu: non-finite argument");
  if (nu < 2.0 || nu > 4.0) {
    throw DomainError("omega_nu: unsupported order nu=" + std::to_string(nu));
  }
  if (nu != 2.0 && r >= 1.0) {
    throw DomainError("omega_nu: requires r < 1 for nu=" + std::to_string(nu) +
                      ", got r=" + std::to_string(r));
  }
  if (std::abs(r) < kSeriesThreshold) {
    const auto c = series_coefficients(nu);
    return c[0] + r * (c[1] + r * (c[2] + r * c[3]));
  }
  const double r2 = r * r;
  if (nu == 2.0) return (std::expm1(r) - r) / r2;
  if (nu == 3.0) return (-r - std::log1p(-r)) / r2;
  if (nu == 4.0) return ((1.0 - r) * std::log1p(-r) + r) / r2;
  const double a = 2.0 * (3.0 - nu) / (2.0 - nu);
  const double inner = (nu - 2.0) / (2.0 * (3.0 - nu) * r) * std::expm1(a * std::log1p(-r)) - 1.0;
  return (nu - 2.0) / (4.0 - nu) / r * inner;
}

double local_norm(const Vector& x, const Vector& hessian_diag) {
  if (x.size() != hessian_diag.size()) throw ShapeError("local_norm: length mismatch");
  return std::sqrt((x.array().square() * hessian_diag.array()).sum());
}

double d_nu(double nu, double m_const, const Vector& from, const Vector& to,
            const Vector& hessian_diag_at_from) {
  if (from.size() != to.size()) throw ShapeError("d_nu: point length mismatch");
  if (nu < 2.0 || nu > 3.0) throw DomainError("d_nu: requires nu in [2, 3]");
  const Vector delta = to - from;
  const double euclid = delta.norm();
  if (nu == 2.0) return m_const * euclid;
  const double local = local_norm(delta, hessian_diag_at_from);
  if (euclid == 0.0) return 0.0;
  return (nu / 2.0 - 1.0) * m_const * std::pow(euclid, 3.0 - nu) * std::pow(local, nu - 2.0);
}

double d_nu(const GscRegularizer& reg, const Vector& from, const Vector& to,
            const Vector& hessian_diag_at_from) {
  return d_nu(reg.nu(), reg.m_gsc(), from, to, hessian_diag_at_from);
}

LocalGeometry dual_local_norm(const GscRegularizer& reg, const Vector& theta) {
  LocalGeometry out;
  out.hessian_diag = reg.hessian_diag(theta);
  const Vector g = reg.gradient(theta);
  out.eta = std::sqrt((g.array().square() / out.hessian_diag.array()).sum());
  return out;
}

double suggest_tau(double m_bar, double eta0, const Matrix& gtilde0) {
  if (gtilde0.size() == 0 || gtilde0.rows() != gtilde0.cols()) {
    throw ShapeError("suggest_tau: expected a nonempty square matrix");
  }
  if (eta0 < 0.0) throw DomainError("suggest_tau: eta0 must be >= 0");
  const Matrix gram = gtilde0.transpose() * gtilde0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double lambda1 = es.eigenvalues().maxCoeff();
  const double rhs = std::sqrt(static_cast<double>(gtilde0.rows()) * lambda1);
  if (rhs < 1.0) {
    throw DomainError("suggest_tau: no admissible tau (sqrt((m+1) lambda_1) = " +
                      std::to_string(rhs) + " < 1)");
  }
  if (eta0 == 0.0) return kUnboundedTau;
  if (!(m_bar > 0.0)) throw DomainError("suggest_tau: GSC constant must be > 0");
  return (rhs - 1.0) / (m_bar * eta0);
}

}  // namespace ggn
