#include "ggn/dynamics.hpp"

#include "ggn/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ggn {

Matrix ntk_gram(const Matrix& J) { return J * J.transpose(); }

namespace {

// A K^-1 through K^T X = A^T.
Matrix right_solve(const Matrix& a, const Matrix& k) {
  const Matrix kt = k.transpose();
  const Matrix at = a.transpose();
  return numerics::solve_general(kt, at).transpose();
}

}  // namespace

Matrix ghat(const WoodburySystem& sys) {
  const Eigen::Index m = sys.gram_hat.rows() - 1;
  return right_solve(sys.gram_hat.topRows(m), sys.inner);
}

Matrix ghat(const GgnWorkspace& ws) { return ghat(woodbury_system(ws)); }

GtildeReport gtilde(const WoodburySystem& sys, const Vector& jhat_p, double h_p, double phi_prev) {
  const Eigen::Index m = sys.gram_hat.rows() - 1;
  if (jhat_p.size() != m + 1) throw ShapeError("gtilde: augmented column has the wrong length");
  if (!(h_p > 0.0)) throw DomainError("gtilde: Hessian entry must be positive");
  GtildeReport out;
  out.g.resize(m + 1, m + 1);
  out.g.topRows(m) = ghat(sys);
  out.phi_cur = sys.direction(sys.direction.size() - 1);
  if (std::abs(phi_prev) <= kPhiEpsilon) {
    out.degenerate = true;
    out.g.row(m).setZero();
  } else {
    const Vector row = numerics::solve_general(Matrix(sys.inner.transpose()), jhat_p);
    out.g.row(m) = (row / (phi_prev * h_p)).transpose();
  }
  return out;
}

GtildeReport gtilde(const GgnWorkspace& ws, double phi_prev) {
  const Eigen::Index p = ws.J_hat.cols();
  return gtilde(woodbury_system(ws), ws.J_hat.col(p - 1), ws.hessian_diag(p - 1), phi_prev);
}

PositivityReport positivity_checks(const Matrix& gt, std::uint64_t seed) {
  if (gt.rows() != gt.cols() || gt.rows() < 2) {
    throw ShapeError("positivity_checks: expected a square matrix of size >= 2");
  }
  const Eigen::Index m = gt.rows() - 1;
  const Matrix g11 = gt.topLeftCorner(m, m);
  PositivityReport r;
  r.g22 = gt(m, m);
  r.g22_positive = r.g22 > 0.0;
  r.sym_lambda_min = numerics::symmetric_eigen_extremes(g11).first;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  r.min_quadratic = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(m);
    for (Eigen::Index i = 0; i < m; ++i) x(i) = normal(rng);
    r.min_quadratic = std::min(r.min_quadratic, x.dot(g11 * x) / x.squaredNorm());
  }
  r.g11_pd = r.sym_lambda_min > -1e-8 && r.min_quadratic > 0.0;
  return r;
}

P1Report p1_conditions(const Matrix& gt, double m_eff, double eta, const Vector& phi_t,
                       const Vector& phi_star) {
  const Eigen::Index m = gt.rows() - 1;
  if (gt.cols() != m + 1 || phi_t.size() != m || phi_star.size() != m) {
    throw ShapeError("p1_conditions: sizes do not match G_tilde");
  }
  P1Report r;
  r.frobenius = numerics::frobenius_norm(gt);
  r.lhs = 1.0 + m_eff * eta;
  r.frobenius_ok = r.lhs <= r.frobenius;
  const Vector sum = gt.bottomLeftCorner(1, m).transpose() + gt.topRightCorner(m, 1);
  r.block_inner = std::abs(sum.dot(phi_t - phi_star));
  r.block_ok = std::abs(gt(m, m)) >= r.block_inner;
  return r;
}

namespace {

void merge(RegularityEstimates& est, const RegularitySnapshot& s, bool first) {
  if (first) {
    est.beta = s.e_hat_norm;
    est.beta1_hat = s.sigma_max;
    est.betam_hat = s.sigma_min;
    est.d_g = s.h_min;
    est.D_g = s.h_max;
    est.D_q = s.q_scale;
    est.B_R = s.e_norm;
    est.D_R = s.q_scale;
    est.gamma_R = s.q_scale;
    est.B_g = s.b_g;
  } else {
    est.beta = std::max(est.beta, s.e_hat_norm);
    est.beta1_hat = std::max(est.beta1_hat, s.sigma_max);
    est.betam_hat = std::min(est.betam_hat, s.sigma_min);
    est.d_g = std::min(est.d_g, s.h_min);
    est.D_g = std::max(est.D_g, s.h_max);
    est.D_q = std::max(est.D_q, s.q_scale);
    est.B_R = std::max(est.B_R, s.e_norm);
    // Squared loss: output Hessian is q I, so D_R = max q and gamma_R = min q.
    est.D_R = std::max(est.D_R, s.q_scale);
    est.gamma_R = std::min(est.gamma_R, s.q_scale);
    est.B_g = std::max(est.B_g, s.b_g);
  }
  est.d_q = 0.0;
}

}  // namespace

RegularityEstimates estimate_regularity(const std::vector<RegularitySnapshot>& snapshots) {
  if (snapshots.empty()) throw DomainError("estimate_regularity: need at least one snapshot");
  RegularityEstimates est;
  for (std::size_t i = 0; i < snapshots.size(); ++i) merge(est, snapshots[i], i == 0);
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    for (std::size_t j = i + 1; j < snapshots.size(); ++j) {
      const double dtheta = (snapshots[i].theta - snapshots[j].theta).norm();
      if (dtheta > 0.0) {
        est.B_Phi = std::max(est.B_Phi, (snapshots[i].phi - snapshots[j].phi).norm() / dtheta);
      }
    }
  }
  return est;
}

void RegularityTracker::observe(const RegularitySnapshot& s) {
  merge(est_, s, count_ == 0);
  ++count_;
}

void RegularityTracker::observe_lipschitz(double ratio) {
  if (std::isfinite(ratio)) est_.B_Phi = std::max(est_.B_Phi, ratio);
}

P2Report p2_descent_check(double prev_loss, double new_loss, double alpha,
                          const RegularityEstimates& est, double nu, double d_nu_value) {
  P2Report r;
  const double denom = est.d_g * (est.D_g + est.d_q * est.betam_hat * est.betam_hat);
  r.ld = alpha * est.beta * est.beta1_hat * est.D_g / denom;
  r.d_nu_lt_1 = d_nu_value < 1.0;
  r.varpi = r.d_nu_lt_1 ? omega_nu(nu, d_nu_value) - omega_nu(nu, -d_nu_value)
                        : std::numeric_limits<double>::quiet_NaN();
  const double vartheta = est.vartheta();
  const double curvature = vartheta == 0.0 ? 0.0 : vartheta * r.ld * r.ld * (1.0 + est.D_g * r.varpi);
  r.bound = prev_loss - (curvature - est.xi() * r.ld);
  r.ok = std::isfinite(r.bound) && new_loss <= r.bound;
  return r;
}

numerics::SingularExtremes augmented_singular_extremes(const NetworkEvaluation& eval,
                                                       const Vector& grad_g) {
  const Eigen::Index rows = eval.output_count();
  Matrix gram(rows + 1, rows + 1);
  gram.topLeftCorner(rows, rows) = eval.weighted_gram(Vector::Ones(grad_g.size()));
  const Vector cross = eval.apply(grad_g);
  gram.topRightCorner(rows, 1) = cross;
  gram.bottomLeftCorner(1, rows) = cross.transpose();
  gram(rows, rows) = grad_g.squaredNorm();
  const auto [lo, hi] = numerics::symmetric_eigen_extremes(gram);
  numerics::SingularExtremes out;
  out.max = std::sqrt(std::max(hi, 0.0));
  out.min = rows + 1 <= grad_g.size() ? std::sqrt(std::max(lo, 0.0)) : 0.0;
  return out;
}

void TheoremMonitor::on_step(const StepContext& ctx, IterationRecord& row) {
  if (ctx.method != Method::GgnScore || ctx.system == nullptr) return;
  const WoodburySystem& sys = *ctx.system;
  const Vector& h = *ctx.hessian_diag;
  const Vector& grad_g = *ctx.grad_g;
  const GscRegularizer& reg = *ctx.reg;
  const Eigen::Index p = h.size();

  // Regularity terms at theta_t, then the step-norm bound.
  RegularitySnapshot snap;
  Vector e_hat(ctx.loss->output_gradient.size() + 1);
  e_hat << ctx.loss->output_gradient, 1.0;
  snap.e_hat_norm = e_hat.norm();
  snap.e_norm = ctx.loss->output_gradient.norm();
  const auto sv = augmented_singular_extremes(*ctx.eval, grad_g);
  snap.sigma_max = sv.max;
  snap.sigma_min = sv.min;
  snap.h_min = h.minCoeff();
  snap.h_max = h.maxCoeff();
  snap.q_scale = ctx.loss->output_hessian_scale;
  snap.b_g = reg.tau() * std::sqrt(static_cast<double>(p - reg.first_penalized()));
  tracker_.observe(snap);

  const Matrix phi_after = forward(*ctx.cfg, *ctx.after, *ctx.x);
  const double step_norm = ctx.step->norm();
  if (step_norm > 0.0) {
    tracker_.observe_lipschitz(
        (flatten_outputs(phi_after) - flatten_outputs(ctx.eval->outputs())).norm() / step_norm);
  }
  const double new_obj = squared_loss(phi_after, *ctx.y).value + reg.value(ctx.after->theta());
  const double d = d_nu(reg, ctx.before->theta(), ctx.after->theta(), h);
  const P2Report p2 = p2_descent_check(ctx.objective_before, new_obj, ctx.alpha, tracker_.estimates(),
                                       reg.nu(), d);
  row.ld_bound = p2.ld;
  counters_["steps_monitored"] += 1;
  if (step_norm > p2.ld) counters_["ld_violations"] += 1;
  max_ratio_ = std::max(max_ratio_, step_norm / p2.ld);
  if (!p2.d_nu_lt_1) counters_["d_nu_ge_1"] += 1;

  const double phi_prev = phi_prev_;
  phi_prev_ = sys.direction(p - 1);
  if (ctx.iteration % every_ != 0) return;

  counters_["steps_checked"] += 1;
  Vector jhat_p(sys.gram_hat.rows());
  jhat_p << ctx.eval->column(p - 1), grad_g(p - 1);
  const GtildeReport gt = gtilde(sys, jhat_p, h(p - 1), phi_prev);
  if (gt.degenerate) counters_["degenerate_phi"] += 1;
  const PositivityReport pos =
      positivity_checks(gt.g, 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(ctx.iteration));
  const P1Report p1 = p1_conditions(gt.g, reg.m_step(), ctx.eta,
                                    flatten_outputs(ctx.eval->outputs()), flatten_outputs(*ctx.y));
  row.p1_frob = p1.frobenius_ok;
  row.p1_block = p1.block_ok;
  row.g22_pos = pos.g22_positive;
  row.g11_pd = pos.g11_pd;
  row.p2_ok = p2.ok;
  if (!pos.g22_positive) counters_["g22_failures"] += 1;
  if (!pos.g11_pd) counters_["g11_failures"] += 1;
  if (!p1.frobenius_ok) counters_["p1_frob_failures"] += 1;
  if (!p1.block_ok) counters_["p1_block_failures"] += 1;
  if (!p2.ok) counters_["p2_failures"] += 1;
}

}  // namespace ggn
