#pragma once

#include "ggn/activation.hpp"
#include "ggn/kernels.hpp"
#include "ggn/numerics.hpp"

#include <cstdint>
#include <random>

namespace ggn {

/// Shape and scaling of the biasless one-hidden-layer network
///   Phi(x) = kappa * sum_j v_j act(u_j . x).
/// `outputs` > 1 gives independent heads sharing the hidden layer.
struct NetworkConfig {
  int n0 = 1;
  int n = 1;
  int outputs = 1;
  double kappa = 1.0;
  Activation activation = Activation::SiLU;

  /// kappa = 1/sqrt(n).
  static NetworkConfig standard(int n0, int n, Activation a, int outputs = 1);

  Eigen::Index param_count() const {
    return static_cast<Eigen::Index>(n) * n0 + static_cast<Eigen::Index>(n) * outputs;
  }
  void validate() const;
};

/// Network weights stored as the flat vector theta with layout
/// [u (n x n0, row-major), v (n x outputs, row-major)]. The structured
/// views alias the flat storage.
class NetworkParams {
 public:
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  NetworkParams() = default;
  explicit NetworkParams(const NetworkConfig& cfg);
  NetworkParams(const NetworkConfig& cfg, Vector theta);

  /// Entrywise N(0, scale^2) initialization.
  static NetworkParams gaussian(const NetworkConfig& cfg, std::uint64_t seed, double scale = 1.0);

  ConstMatrixMap u() const { return {theta_.data(), n_, n0_}; }
  ConstMatrixMap v() const { return {theta_.data() + n_ * n0_, n_, k_}; }
  MatrixMap u() { return {theta_.data(), n_, n0_}; }
  MatrixMap v() { return {theta_.data() + n_ * n0_, n_, k_}; }

  const Vector& theta() const { return theta_; }
  Vector& theta() { return theta_; }
  Eigen::Index size() const { return theta_.size(); }
  Eigen::Index u_size() const { return n_ * n0_; }

 private:
  Eigen::Index n0_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index k_ = 0;
  Vector theta_;
};

/// Squared loss (1/m) sum_i 1/2 ||Phi_i - y_i||^2 with its output-space
/// gradient e = (Phi - y)/m (flattened sample-major) and Hessian scale 1/m.
struct LossBundle {
  double value = 0.0;
  Vector output_gradient;
  double output_hessian_scale = 1.0;
};

/// Forward pass, m x outputs.
Matrix forward(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x);

/// n x m hidden pre-activations u_j . x_i.
Matrix preactivations(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x);

/// (m outputs) x p Jacobian of the outputs with respect to theta.
Matrix jacobian(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x);

LossBundle squared_loss(const Matrix& phi, const Matrix& y);

/// Lipschitz constant of J for inputs in the unit ball:
/// m * kappa * (1 + L_v) * L_act * sqrt(2).
double lipschitz_J_bound(const NetworkConfig& cfg, std::size_t m, double act_lipschitz,
                         double v_bound);

/// Cached hidden-layer evaluation of one batch; the structured Jacobian
/// products below reuse it instead of forming J. Keeps references to
/// cfg, params and x; they must outlive the evaluation.
class NetworkEvaluation {
 public:
  NetworkEvaluation(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x);

  const Matrix& outputs() const { return outputs_; }
  const kernels::HiddenLayer& hidden() const { return hidden_; }
  Eigen::Index output_count() const { return outputs_.size(); }

  Matrix dense_jacobian() const;
  Matrix weighted_gram(const Vector& w) const;
  Vector apply(const Vector& d) const;
  Vector apply_transpose(const Vector& r) const;
  Vector column(Eigen::Index col) const;

 private:
  const NetworkConfig* cfg_;
  const NetworkParams* params_;
  const Matrix* x_;
  kernels::HiddenLayer hidden_;
  Matrix outputs_;
};

/// Flattens an m x k matrix sample-major into a length m*k vector.
Vector flatten_outputs(const Matrix& phi);

}  // namespace ggn
