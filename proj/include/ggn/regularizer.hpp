#pragma once

#include "ggn/numerics.hpp"

#include <limits>

namespace ggn {

/// Self-concordant smoothing of the l1 norm,
///   g(theta) = tau * sum_i (mu^2 - mu sqrt(mu^2 + theta_i^2) + theta_i^2) / sqrt(mu^2 + theta_i^2)
///            = tau * sum_i (sqrt(mu^2 + theta_i^2) - mu),
/// which is (M, nu)-generalized self-concordant with nu = 2.6.
///
/// Three constants are kept apart:
///   m_bar()  = 2 mu^-0.7 p^0.2, the constant of the unscaled sum (tau = 1);
///   m_step() = tau * m_bar(), used by the step-size rule alpha = abar / (1 + M eta);
///   m_gsc()  = tau^(1 - nu/2) * m_bar(), the constant of g itself, used by d_nu.
///
/// An optional mask restricts the penalty to the trailing `penalized` coordinates
/// (the outer-layer block). Unpenalized coordinates contribute nothing to the
/// value or gradient and carry a fixed Hessian damping so H stays invertible.
class GscRegularizer {
 public:
  static constexpr double kOrder = 2.6;

  GscRegularizer(double tau, double mu, Eigen::Index p);

  /// Penalize only the last `count` coordinates; the rest get Hessian `damping`.
  GscRegularizer& restrict_to_tail(Eigen::Index count, double damping);

  double tau() const { return tau_; }
  double mu() const { return mu_; }
  double nu() const { return kOrder; }
  Eigen::Index dimension() const { return p_; }
  Eigen::Index first_penalized() const { return first_; }

  double m_bar() const;
  double m_step() const { return tau_ * m_bar(); }
  double m_gsc() const;

  double value(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
  Vector hessian_diag(const Vector& theta) const;

 private:
  void check(const Vector& theta) const;

  double tau_;
  double mu_;
  Eigen::Index p_;
  Eigen::Index first_ = 0;
  double damping_ = 0.0;
};

struct LocalGeometry {
  double eta = 0.0;  // ||grad g||* in the metric of the diagonal Hessian
  Vector hessian_diag;
};

/// omega_nu from the generalized self-concordance bounds; branches nu = 2, 3, 4
/// and the generic formula. Uses a 4-term series for |r| < 1e-4. Throws
/// DomainError when r >= 1 on a branch that needs 1 - r > 0.
double omega_nu(double nu, double r);

/// Scaled metric between two points for an (M, nu)-GSC function, using the
/// local norm at `from` given by its diagonal Hessian.
double d_nu(double nu, double m_const, const Vector& from, const Vector& to,
            const Vector& hessian_diag_at_from);

/// Convenience overload using the regularizer's own m_gsc() and nu.
double d_nu(const GscRegularizer& reg, const Vector& from, const Vector& to,
            const Vector& hessian_diag_at_from);

LocalGeometry dual_local_norm(const GscRegularizer& reg, const Vector& theta);

/// sqrt(sum_i x_i^2 * h_i).
double local_norm(const Vector& x, const Vector& hessian_diag);

/// Largest tau with 1 + tau * m_bar * eta0 <= sqrt((m+1) lambda_max(Gt^T Gt)).
/// Returns +infinity when eta0 == 0; throws DomainError when the right-hand
/// side is below 1.
double suggest_tau(double m_bar, double eta0, const Matrix& gtilde0);

inline constexpr double kUnboundedTau = std::numeric_limits<double>::infinity();

}  // namespace ggn
