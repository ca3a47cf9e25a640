#include "ggn/model.hpp"

#include "ggn/error.hpp"

#include <cmath>
#include <string>

namespace ggn {

NetworkConfig NetworkConfig::standard(int n0, int n, Activation a, int outputs) {
  NetworkConfig cfg;
  cfg.n0 = n0;
  cfg.n = n;
  cfg.outputs = outputs;
  cfg.kappa = 1.0 / std::sqrt(static_cast<double>(n));
  cfg.activation = a;
  cfg.validate();
  return cfg;
}

void NetworkConfig::validate() const {
  if (n0 < 1 || n < 1 || outputs < 1) {
    throw ConfigError("network: n0, n and outputs must be >= 1");
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("network: kappa must be > 0");
}

NetworkParams::NetworkParams(const NetworkConfig& cfg)
    : n0_(cfg.n0), n_(cfg.n), k_(cfg.outputs), theta_(Vector::Zero(cfg.param_count())) {
  cfg.validate();
}

NetworkParams::NetworkParams(const NetworkConfig& cfg, Vector theta)
    : n0_(cfg.n0), n_(cfg.n), k_(cfg.outputs), theta_(std::move(theta)) {
  cfg.validate();
  if (theta_.size() != cfg.param_count()) {
    throw ShapeError("NetworkParams: theta has length " + std::to_string(theta_.size()) +
                     ", expected " + std::to_string(cfg.param_count()));
  }
}

NetworkParams NetworkParams::gaussian(const NetworkConfig& cfg, std::uint64_t seed, double scale) {
  NetworkParams p(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < p.theta_.size(); ++i) p.theta_(i) = scale * normal(rng);
  return p;
}

namespace {

void check_inputs(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x) {
  if (x.cols() != cfg.n0) {
    throw ShapeError("network: inputs have " + std::to_string(x.cols()) + " columns, expected n0=" +
                     std::to_string(cfg.n0));
  }
  if (params.size() != cfg.param_count()) throw ShapeError("network: parameter length mismatch");
}

}  // namespace

Matrix forward(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x) {
  check_inputs(cfg, params, x);
  const auto hidden = kernels::hidden_layer(params.u(), x, cfg.activation);
  return kernels::outputs(hidden, params.v(), cfg.kappa);
}

Matrix preactivations(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x) {
  check_inputs(cfg, params, x);
  return kernels::hidden_layer(params.u(), x, cfg.activation).pre;
}

Matrix jacobian(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x) {
  check_inputs(cfg, params, x);
  const auto hidden = kernels::hidden_layer(params.u(), x, cfg.activation);
  return kernels::dense_jacobian(hidden, params.v(), x, cfg.kappa);
}

Vector flatten_outputs(const Matrix& phi) {
  // Row-major storage already is sample-major.
  return Eigen::Map<const Vector>(phi.data(), phi.size());
}

LossBundle squared_loss(const Matrix& phi, const Matrix& y) {
  if (phi.rows() != y.rows() || phi.cols() != y.cols()) {
    throw ShapeError("squared_loss: prediction is " + std::to_string(phi.rows()) + "x" +
                     std::to_string(phi.cols()) + ", target is " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.cols()));
  }
  if (phi.rows() < 1) throw ShapeError("squared_loss: need at least one sample");
  const double inv_m = 1.0 / static_cast<double>(phi.rows());
  const Matrix diff = phi - y;
  LossBundle out;
  out.value = 0.5 * inv_m * diff.squaredNorm();
  out.output_gradient = inv_m * flatten_outputs(diff);
  out.output_hessian_scale = inv_m;
  return out;
}

double lipschitz_J_bound(const NetworkConfig& cfg, std::size_t m, double act_lipschitz,
                         double v_bound) {
  return static_cast<double>(m) * cfg.kappa * (1.0 + v_bound) * act_lipschitz * std::sqrt(2.0);
}

NetworkEvaluation::NetworkEvaluation(const NetworkConfig& cfg, const NetworkParams& params,
                                     const Matrix& x)
    : cfg_(&cfg), params_(&params), x_(&x) {
  check_inputs(cfg, params, x);
  hidden_ = kernels::hidden_layer(params.u(), x, cfg.activation);
  outputs_ = kernels::outputs(hidden_, params.v(), cfg.kappa);
}

Matrix NetworkEvaluation::dense_jacobian() const {
  return kernels::dense_jacobian(hidden_, params_->v(), *x_, cfg_->kappa);
}

Matrix NetworkEvaluation::weighted_gram(const Vector& w) const {
  return kernels::weighted_gram(hidden_, params_->v(), *x_, cfg_->kappa, w);
}

Vector NetworkEvaluation::apply(const Vector& d) const {
  return kernels::jacobian_apply(hidden_, params_->v(), *x_, cfg_->kappa, d);
}

Vector NetworkEvaluation::apply_transpose(const Vector& r) const {
  return kernels::jacobian_transpose_apply(hidden_, params_->v(), *x_, cfg_->kappa, r);
}

Vector NetworkEvaluation::column(Eigen::Index col) const {
  return kernels::jacobian_column(hidden_, params_->v(), *x_, cfg_->kappa, col);
}

}  // namespace ggn
