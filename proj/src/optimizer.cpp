#include "ggn/optimizer.hpp"

#include "ggn/error.hpp"
#include "ggn/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace ggn {

GgnWorkspace augment(const Matrix& J, const Vector& e, double q_scale, const Vector& grad_g) {
  if (J.rows() != e.size()) {
    throw ShapeError("augment: J has " + std::to_string(J.rows()) + " rows but e has length " +
                     std::to_string(e.size()));
  }
  if (J.cols() != grad_g.size()) {
    throw ShapeError("augment: J has " + std::to_string(J.cols()) +
                     " columns but grad g has length " + std::to_string(grad_g.size()));
  }
  const Eigen::Index m = J.rows();
  GgnWorkspace ws;
  ws.J = J;
  ws.J_hat.resize(m + 1, J.cols());
  ws.J_hat.topRows(m) = J;
  ws.J_hat.row(m) = grad_g.transpose();
  ws.e_hat.resize(m + 1);
  ws.e_hat.head(m) = e;
  ws.e_hat(m) = 1.0;
  ws.q_hat = Vector::Constant(m + 1, q_scale);
  ws.q_hat(m) = 0.0;
  return ws;
}

namespace {

void check_workspace(const GgnWorkspace& ws) {
  const Eigen::Index rows = ws.J_hat.rows();
  if (ws.e_hat.size() != rows || ws.q_hat.size() != rows) {
    throw ShapeError("ggn step: augmented residual or Q diagonal has the wrong length");
  }
  if (ws.hessian_diag.size() != ws.J_hat.cols()) {
    throw ShapeError("ggn step: Hessian diagonal has length " +
                     std::to_string(ws.hessian_diag.size()) + ", expected " +
                     std::to_string(ws.J_hat.cols()));
  }
  if (!(ws.hessian_diag.array() > 0.0).all()) {
    throw DomainError("ggn step: Hessian diagonal must be strictly positive");
  }
}

}  // namespace

Vector ggn_step_direct(const GgnWorkspace& ws) {
  check_workspace(ws);
  Matrix system = ws.J_hat.transpose() * ws.q_hat.asDiagonal() * ws.J_hat;
  system.diagonal() += ws.hessian_diag;
  const Vector rhs = ws.J_hat.transpose() * ws.e_hat;
  return -ws.alpha * numerics::solve_spd(system, rhs);
}

WoodburySystem woodbury_system(const GgnWorkspace& ws) {
  check_workspace(ws);
  const Vector hinv = ws.hessian_diag.cwiseInverse();
  WoodburySystem sys;
  sys.q_hat = ws.q_hat;
  sys.underdetermined = ws.J_hat.rows() <= ws.J_hat.cols();
  sys.gram_hat = ws.J_hat * hinv.asDiagonal() * ws.J_hat.transpose();
  sys.inner = ws.q_hat.asDiagonal() * sys.gram_hat;
  sys.inner.diagonal().array() += 1.0;
  sys.solution = numerics::solve_general(sys.inner, ws.e_hat);
  sys.direction = hinv.cwiseProduct(ws.J_hat.transpose() * sys.solution);
  return sys;
}

WoodburySystem woodbury_system(const NetworkEvaluation& eval, const Vector& e, double q_scale,
                               const Vector& grad_g, const Vector& hessian_diag) {
  const Eigen::Index rows = eval.output_count();
  if (e.size() != rows) throw ShapeError("woodbury_system: residual length mismatch");
  if (grad_g.size() != hessian_diag.size()) {
    throw ShapeError("woodbury_system: gradient and Hessian lengths differ");
  }
  if (!(hessian_diag.array() > 0.0).all()) {
    throw DomainError("woodbury_system: Hessian diagonal must be strictly positive");
  }
  const Vector hinv = hessian_diag.cwiseInverse();
  WoodburySystem sys;
  sys.underdetermined = rows + 1 <= grad_g.size();
  sys.q_hat = Vector::Constant(rows + 1, q_scale);
  sys.q_hat(rows) = 0.0;
  sys.gram_hat.resize(rows + 1, rows + 1);
  sys.gram_hat.topLeftCorner(rows, rows) = eval.weighted_gram(hinv);
  const Vector cross = eval.apply(hinv.cwiseProduct(grad_g));
  sys.gram_hat.topRightCorner(rows, 1) = cross;
  sys.gram_hat.bottomLeftCorner(1, rows) = cross.transpose();
  sys.gram_hat(rows, rows) = grad_g.dot(hinv.cwiseProduct(grad_g));
  sys.inner = sys.q_hat.asDiagonal() * sys.gram_hat;
  sys.inner.diagonal().array() += 1.0;
  Vector e_hat(rows + 1);
  e_hat.head(rows) = e;
  e_hat(rows) = 1.0;
  sys.solution = numerics::solve_general(sys.inner, e_hat);
  const Vector jt = eval.apply_transpose(sys.solution.head(rows)) + sys.solution(rows) * grad_g;
  sys.direction = hinv.cwiseProduct(jt);
  return sys;
}

Vector ggn_step_woodbury(const GgnWorkspace& ws) { return -ws.alpha * woodbury_system(ws).direction; }

double learning_rate(double abar, double m_const, double eta) {
  if (!(abar > 0.0) || abar > 1.0) throw DomainError("learning_rate: abar must lie in (0, 1]");
  if (m_const < 0.0 || eta < 0.0) throw DomainError("learning_rate: M and eta must be >= 0");
  return abar / (1.0 + m_const * eta);
}

Vector gd_step(const Matrix& J, const Vector& e, const Vector* grad_g, double lr) {
  if (J.rows() != e.size()) throw ShapeError("gd_step: J rows and e length differ");
  Vector g = J.transpose() * e;
  if (grad_g != nullptr) {
    if (grad_g->size() != J.cols()) throw ShapeError("gd_step: gradient length mismatch");
    g += *grad_g;
  }
  return -lr * g;
}

double objective(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x,
                 const Matrix& y, const GscRegularizer* reg) {
  double value = squared_loss(forward(cfg, params, x), y).value;
  if (reg != nullptr) value += reg->value(params.theta());
  return value;
}

Vector objective_gradient(const NetworkConfig& cfg, const NetworkParams& params, const Matrix& x,
                          const Matrix& y, const GscRegularizer* reg) {
  const NetworkEvaluation eval(cfg, params, x);
  const LossBundle loss = squared_loss(eval.outputs(), y);
  Vector g = eval.apply_transpose(loss.output_gradient);
  if (reg != nullptr) g += reg->gradient(params.theta());
  return g;
}

std::string to_string(Method m) { return m == Method::GgnScore ? "ggn-score" : "gd"; }

Method method_from_string(const std::string& s) {
  if (s == "ggn-score" || s == "ggn") return Method::GgnScore;
  if (s == "gd") return Method::GradientDescent;
  throw ConfigError("unknown method '" + s + "' (expected ggn-score or gd)");
}

long total_steps(const Schedule& s, Eigen::Index m) {
  if (s.steps > 0) return s.steps;
  const Eigen::Index batch = s.batch_size == 0 ? m : s.batch_size;
  const long per_epoch = static_cast<long>((m + batch - 1) / batch);
  return s.epochs * per_epoch;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix select_rows(const Matrix& src, const std::vector<Eigen::Index>& idx, std::size_t begin,
                   std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), src.cols());
  for (std::size_t r = begin; r < end; ++r) out.row(static_cast<Eigen::Index>(r - begin)) = src.row(idx[r]);
  return out;
}

}  // namespace

RunLog train(const NetworkConfig& cfg, NetworkParams& params, const Dataset& data,
             const GscRegularizer* reg, const TrainOptions& options,
             const std::vector<StepObserver*>& observers) {
  cfg.validate();
  data.validate();
  if (data.x_train.cols() != cfg.n0) throw ShapeError("train: input dimension differs from n0");
  if (data.y_train.cols() != cfg.outputs) throw ShapeError("train: target width differs from outputs");
  if (params.size() != cfg.param_count()) throw ShapeError("train: parameter length mismatch");
  if (options.method == Method::GgnScore && reg == nullptr) {
    throw ConfigError("train: GGN-SCORE needs a regularizer");
  }
  if (reg != nullptr && reg->dimension() != params.size()) {
    throw ShapeError("train: regularizer dimension differs from the parameter count");
  }
  const Eigen::Index m = data.x_train.rows();
  const Eigen::Index batch = options.schedule.batch_size == 0 ? m : options.schedule.batch_size;
  if (batch < 1 || batch > m) throw ConfigError("train: batch size must lie in [1, m]");
  if (options.eval_every < 1) throw ConfigError("train: eval_every must be >= 1");
  const bool full_batch = batch == m;
  const long steps = total_steps(options.schedule, m);
  const long per_epoch = static_cast<long>((m + batch - 1) / batch);
  const bool classify = data.is_classification() && data.x_test.rows() > 0;
  const bool has_test = data.x_test.rows() > 0;

  RunLog log;
  log.summary.method = to_string(options.method);
  log.summary.seed = options.seed;
  log.summary.steps = steps;
  log.summary.assumption_a_violated = cfg.activation == Activation::ReLU;
  log.rows.reserve(static_cast<std::size_t>(steps) + 1);

  double opt_time = 0.0;
  double diag_time = 0.0;
  double threshold = 0.0;
  auto guard = [&](long t, double loss, const char* what) {
    if (!std::isfinite(loss) || loss > threshold) {
      throw DivergenceError(static_cast<std::size_t>(t),
                            std::string(what) + " = " + format_number(loss));
    }
  };

  auto evaluate = [&](IterationRecord& row, bool need_train) {
    const auto start = Clock::now();
    if (need_train) row.train_loss = squared_loss(forward(cfg, params, data.x_train), data.y_train).value;
    if (has_test) {
      const Matrix phi = forward(cfg, params, data.x_test);
      row.test_loss = squared_loss(phi, data.y_test).value;
      if (classify) row.accuracy = accuracy(phi, data.labels_test);
    }
    diag_time += seconds_since(start);
  };

  Matrix probes;
  TiSnapshot ti_start;
  if (has_test) {
    const Eigen::Index count = options.ti_probe_limit > 0
                                   ? std::min(options.ti_probe_limit, data.x_test.rows())
                                   : data.x_test.rows();
    probes = data.x_test.topRows(count);
    ti_start = ti_snapshot(preactivations(cfg, params, probes), probes);
  }

  IterationRecord first;
  first.iter = 0;
  first.nnz = static_cast<long>(count_zeros(params.theta()));
  evaluate(first, true);
  threshold = options.divergence_factor * std::max(*first.train_loss, 1e-12);
  guard(0, *first.train_loss, "train loss");
  log.rows.push_back(first);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(options.seed);
  Matrix xb = full_batch ? data.x_train : Matrix();
  Matrix yb = full_batch ? data.y_train : Matrix();

  for (long t = 0; t < steps; ++t) {
    const long pos = t % per_epoch;
    if (!full_batch) {
      if (pos == 0) std::shuffle(order.begin(), order.end(), rng);
      const auto begin = static_cast<std::size_t>(pos * batch);
      const auto end = std::min(static_cast<std::size_t>(m), begin + static_cast<std::size_t>(batch));
      xb = select_rows(data.x_train, order, begin, end);
      yb = select_rows(data.y_train, order, begin, end);
    }

    const auto step_start = Clock::now();
    const NetworkParams before = params;
    const NetworkEvaluation eval(cfg, before, xb);
    const LossBundle loss = squared_loss(eval.outputs(), yb);
    guard(t, loss.value, "batch loss");

    StepContext ctx;
    ctx.iteration = t;
    ctx.cfg = &cfg;
    ctx.before = &before;
    ctx.after = &params;
    ctx.x = &xb;
    ctx.y = &yb;
    ctx.eval = &eval;
    ctx.loss = &loss;
    ctx.reg = reg;
    ctx.method = options.method;

    Vector step;
    Vector grad_g;
    WoodburySystem system;
    LocalGeometry geo;
    if (options.method == Method::GgnScore) {
      grad_g = reg->gradient(before.theta());
      geo = dual_local_norm(*reg, before.theta());
      ctx.eta = geo.eta;
      ctx.alpha = learning_rate(options.abar, reg->m_step(), geo.eta);
      system = woodbury_system(eval, loss.output_gradient, loss.output_hessian_scale, grad_g,
                               geo.hessian_diag);
      step = -ctx.alpha * system.direction;
      ctx.system = &system;
      ctx.hessian_diag = &geo.hessian_diag;
      ctx.grad_g = &grad_g;
    } else {
      Vector grad = eval.apply_transpose(loss.output_gradient);
      if (options.gd_regularized && reg != nullptr) {
        grad_g = reg->gradient(before.theta());
        grad += grad_g;
        ctx.grad_g = &grad_g;
      }
      ctx.alpha = options.gd_lr;
      step = -options.gd_lr * grad;
    }
    if (!numerics::all_finite(step)) {
      throw DivergenceError(static_cast<std::size_t>(t), "non-finite step");
    }
    params.theta() += step;
    opt_time += seconds_since(step_start);
    ctx.step = &step;
    ctx.objective_before =
        loss.value + ((reg != nullptr && (options.method == Method::GgnScore || options.gd_regularized))
                          ? reg->value(before.theta())
                          : 0.0);

    if (!log.rows.back().train_loss) log.rows.back().train_loss = loss.value;

    IterationRecord row;
    row.iter = t + 1;
    row.elapsed_s = opt_time;
    row.alpha = ctx.alpha;
    if (options.method == Method::GgnScore) row.eta = ctx.eta;
    row.step_norm = step.norm();
    row.nnz = static_cast<long>(count_zeros(params.theta()));

    const auto diag_start = Clock::now();
    for (auto* obs : observers) obs->on_step(ctx, row);
    diag_time += seconds_since(diag_start);

    const bool eval_row = (t + 1) % options.eval_every == 0 || t + 1 == steps;
    if (eval_row) {
      // Full batch: the next step's batch loss fills train_loss, except on the last row.
      evaluate(row, !full_batch || t + 1 == steps);
      if (row.train_loss) guard(t + 1, *row.train_loss, "train loss");
      if (row.test_loss) guard(t + 1, *row.test_loss, "test loss");
    }
    log.rows.push_back(row);
  }

  const IterationRecord& last = log.rows.back();
  log.summary.final_train_loss = last.train_loss.value_or(std::nan(""));
  log.summary.final_test_loss = last.test_loss;
  log.summary.final_accuracy = last.accuracy;
  log.summary.nnz = last.nnz.value_or(0);
  if (has_test) {
    const Matrix final_pre = preactivations(cfg, params, probes);
    log.summary.ti_plain = ti_measure(ti_start, final_pre, false);
    log.summary.ti_include_zeros = ti_measure(ti_start, final_pre, true);
    log.summary.ti_include_zeros_tol = ti_measure(ti_start, final_pre, true, 1e-8);
    log.summary.extra["ti_probes"] = static_cast<double>(probes.rows());
  }
  log.summary.optimizer_time_s = opt_time;
  log.summary.diagnostics_time_s = diag_time;
  return log;
}

}  // namespace ggn
