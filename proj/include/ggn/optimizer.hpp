#pragma once

#include "ggn/data.hpp"
#include "ggn/model.hpp"
#include "ggn/regularizer.hpp"
#include "ggn/runlog.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ggn {

/// Per-step quantities of the regularized Gauss-Newton update.
/// Augmented blocks: J_hat = [J; grad g^T], e_hat = [e; 1], q_hat = [q..q, 0].
struct GgnWorkspace {
  Matrix J;
  Matrix J_hat;
  Vector e_hat;
  Vector q_hat;
  Vector hessian_diag;
  double alpha = 1.0;
  double eta = 0.0;
};

GgnWorkspace augment(const Matrix& J, const Vector& e, double q_scale, const Vector& grad_g);

/// delta = -alpha (J_hat^T Q_hat J_hat + H)^-1 J_hat^T e_hat via a p x p Cholesky solve.
Vector ggn_step_direct(const GgnWorkspace& ws);

/// delta = -alpha H^-1 J_hat^T (I + Q_hat J_hat H^-1 J_hat^T)^-1 e_hat.
Vector ggn_step_woodbury(const GgnWorkspace& ws);

/// The (m+1) x (m+1) system behind the Woodbury form, kept for the dynamics
/// monitors. The step is -alpha * direction.
struct WoodburySystem {
  Matrix gram_hat;   // A = J_hat H^-1 J_hat^T
  Matrix inner;      // K = I + Q_hat A
  Vector q_hat;
  Vector solution;   // z = K^-1 e_hat
  Vector direction;  // H^-1 J_hat^T z
  bool underdetermined = true;  // m + 1 <= p
};

WoodburySystem woodbury_system(const GgnWorkspace& ws);

/// Same system without forming J: the gram block comes from the structured
/// kernels of `eval`.
WoodburySystem woodbury_system(const NetworkEvaluation& eval, const Vector& e, double q_scale,
                               const Vector& grad_g, const Vector& hessian_diag);

/// alpha = abar / (1 + M eta).
double learning_rate(double abar, double m_const, double eta);

/// -lr J^T e, or -lr (J^T e + grad g) when grad_g is given.
Vector gd_step(const Matrix& J, const Vector& e, const Vector* grad_g, double lr);

/// Regularized objective on one batch: squared loss plus g (if any).
double objective(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x,
                 const Matrix& y, const GscRegularizer* reg);

/// Gradient of `objective`, computed as J_hat^T e_hat.
Vector objective_gradient(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x,
                          const Matrix& y, const GscRegularizer* reg);

// ---------------------------------------------------------------------------
// Training loop

enum class Method { GgnScore, GradientDescent };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct Schedule {
  Eigen::Index batch_size = 0;  // 0 = full batch
  long steps = 0;               // used when > 0
  long epochs = 0;              // otherwise epochs * ceil(m / batch)
};

struct TrainOptions {
  Method method = Method::GgnScore;
  double abar = 0.95;
  double gd_lr = 1.0;
  bool gd_regularized = false;
  Schedule schedule;
  std::uint64_t seed = 0;
  long eval_every = 1;            // full train/test evaluation cadence
  double divergence_factor = 1e6;
  Eigen::Index ti_probe_limit = 0;  // 0 = the whole test set
};

/// Everything known about one optimizer step, from theta_t to theta_{t+1}.
struct StepContext {
  long iteration = 0;  // t
  const NetworkConfig* cfg = nullptr;
  const NetworkParams* before = nullptr;
  const NetworkParams* after = nullptr;
  const Matrix* x = nullptr;  // batch inputs
  const Matrix* y = nullptr;  // batch targets (also the monitor target)
  const NetworkEvaluation* eval = nullptr;  // at theta_t on the batch
  const LossBundle* loss = nullptr;
  const GscRegularizer* reg = nullptr;
  const WoodburySystem* system = nullptr;  // GGN only
  const Vector* hessian_diag = nullptr;    // GGN only
  const Vector* grad_g = nullptr;          // nullptr when unregularized
  const Vector* step = nullptr;
  Method method = Method::GgnScore;
  double alpha = 0.0;
  double eta = 0.0;
  double objective_before = 0.0;  // on the batch
};

class StepObserver {
 public:
  virtual ~StepObserver() = default;
  /// Called after every step; may fill diagnostic fields of `row`.
  virtual void on_step(const StepContext& ctx, IterationRecord& row) = 0;
};

/// Trains `params` in place. Rows of the log describe theta_0 .. theta_T;
/// row t+1 also carries the step that produced it.
RunLog train(const NetworkConfig& cfg, NetworkParams& params, const Dataset& data,
             const GscRegularizer* reg, const TrainOptions& options,
             const std::vector<StepObserver*>& observers = {});

long total_steps(const Schedule& s, Eigen::Index m);

}  // namespace ggn
