#pragma once

#include "ggn/optimizer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ggn {

inline constexpr double kPhiEpsilon = 1e-12;

/// G = J J^T.
Matrix ntk_gram(const Matrix& J);

/// G_hat = J H^-1 J_hat^T K^-1 with K = I + Q_hat J_hat H^-1 J_hat^T; m x (m+1).
Matrix ghat(const WoodburySystem& sys);
Matrix ghat(const GgnWorkspace& ws);

/// G_tilde: G_hat with one appended row (1/phi_prev) e_p^T H^-1 J_hat^T K^-1.
struct GtildeReport {
  Matrix g;              // (m+1) x (m+1)
  double phi_cur = 0.0;  // last entry of H^-1 J_hat^T K^-1 e_hat
  bool degenerate = false;

  Eigen::Index m() const { return g.rows() - 1; }
  Matrix g11() const { return g.topLeftCorner(m(), m()); }
  Vector g12() const { return g.topRightCorner(m(), 1); }
  Eigen::RowVectorXd g21() const { return g.bottomLeftCorner(1, m()); }
  double g22() const { return g(m(), m()); }
};

/// `jhat_p` is the last column of J_hat and `h_p` the last Hessian entry.
GtildeReport gtilde(const WoodburySystem& sys, const Vector& jhat_p, double h_p, double phi_prev);
GtildeReport gtilde(const GgnWorkspace& ws, double phi_prev);

struct PositivityReport {
  bool g22_positive = false;
  bool g11_pd = false;
  double g22 = 0.0;
  double sym_lambda_min = 0.0;
  double min_quadratic = 0.0;  // min over the sampled x of x^T G11 x / ||x||^2
};

/// G22 > 0, and G11 positive on 20 seeded random directions with the
/// symmetrized smallest eigenvalue above -1e-8.
PositivityReport positivity_checks(const Matrix& gtilde, std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

struct P1Report {
  bool frobenius_ok = false;
  bool block_ok = false;
  double frobenius = 0.0;
  double lhs = 0.0;         // 1 + M eta
  double block_inner = 0.0;  // |<G21^T + G12, Phi_t - Phi*>|
};

P1Report p1_conditions(const Matrix& gtilde, double m_eff, double eta, const Vector& phi_t,
                       const Vector& phi_star);

struct RegularityEstimates {
  double beta = 0.0;        // max ||e_hat||
  double beta1_hat = 0.0;   // max sigma_max(J_hat)
  double betam_hat = 0.0;   // min sigma_min(J_hat)
  double d_g = 0.0;         // min H_ii
  double D_g = 0.0;         // max H_ii
  double d_q = 0.0;         // min Q_hat diagonal (always 0)
  double D_q = 0.0;
  double B_R = 0.0;         // max ||grad_Phi R||
  double D_R = 0.0;
  double gamma_R = 0.0;
  double B_Phi = 0.0;       // empirical, not certified
  double B_g = 0.0;
  double xi() const { return B_R * B_Phi + B_g; }
  double vartheta() const { return B_Phi * B_Phi * (gamma_R - D_R); }
};

/// One observation along a trajectory. `phi` holds outputs on inputs fixed
/// across snapshots.
struct RegularitySnapshot {
  Vector theta;
  Vector phi;
  double e_hat_norm = 0.0;
  double e_norm = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  double q_scale = 0.0;
  double b_g = 0.0;
};

/// Extremes over all snapshots; B_Phi over all pairs.
RegularityEstimates estimate_regularity(const std::vector<RegularitySnapshot>& snapshots);

/// Running version of estimate_regularity; B_Phi comes from consecutive
/// states supplied through observe_lipschitz.
class RegularityTracker {
 public:
  void observe(const RegularitySnapshot& s);
  void observe_lipschitz(double ratio);
  const RegularityEstimates& estimates() const { return est_; }
  bool empty() const { return count_ == 0; }

 private:
  RegularityEstimates est_;
  long count_ = 0;
};

struct P2Report {
  bool ok = false;
  bool d_nu_lt_1 = false;
  double ld = 0.0;
  double varpi = 0.0;  // NaN when d_nu >= 1
  double bound = 0.0;  // right-hand side of the descent inequality
};

/// L_D = alpha beta beta1 D_g / (d_g (D_g + d_q betam^2)) and the check
/// L_new <= L_prev - [vartheta L_D^2 (1 + D_g varpi) - xi L_D].
P2Report p2_descent_check(double prev_loss, double new_loss, double alpha,
                          const RegularityEstimates& est, double nu, double d_nu_value);

/// Extreme singular values of J_hat from its structured Gram.
numerics::SingularExtremes augmented_singular_extremes(const NetworkEvaluation& eval, const Vector& grad_g);

/// Computes the theorem monitors every `every` steps of a GGN-SCORE run.
/// The step-norm bound and the regularity tracker are updated on every step.
class TheoremMonitor : public StepObserver {
 public:
  explicit TheoremMonitor(long every = 1) : every_(every < 1 ? 1 : every) {}

  void on_step(const StepContext& ctx, IterationRecord& row) override;

  /// Counters: steps_checked, ld_violations, g22_failures, g11_failures,
  /// p1_frob_failures, p1_block_failures, p2_failures, d_nu_ge_1, degenerate_phi.
  const std::map<std::string, double>& counters() const { return counters_; }
  const RegularityEstimates& estimates() const { return tracker_.estimates(); }
  double max_step_to_bound_ratio() const { return max_ratio_; }

 private:
  long every_;
  double phi_prev_ = 1.0;
  RegularityTracker tracker_;
  std::map<std::string, double> counters_;
  double max_ratio_ = 0.0;
};

}  // namespace ggn
