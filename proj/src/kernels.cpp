#include "ggn/kernels.hpp"

#include "ggn/error.hpp"

#include <string>

#ifdef GGN_HAS_OPENMP
#include <omp.h>
#define GGN_PRAGMA(x) _Pragma(#x)
#define GGN_OMP_FOR GGN_PRAGMA(omp parallel for schedule(static))
#else
#define GGN_OMP_FOR
#endif

namespace ggn::kernels {
namespace {

using Index = Eigen::Index;
using RowMap = Eigen::Map<const Matrix>;

void check_shapes(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x) {
  if (h.pre.rows() != v.rows() || h.pre.cols() != x.rows()) {
    throw ShapeError("kernel: hidden layer is " + std::to_string(h.pre.rows()) + "x" +
                     std::to_string(h.pre.cols()) + " but v has " + std::to_string(v.rows()) +
                     " rows and x has " + std::to_string(x.rows()) + " rows");
  }
}

Index param_count(const ConstMatrixRef& v, const ConstMatrixRef& x) {
  return v.rows() * x.cols() + v.rows() * v.cols();
}

}  // namespace

int max_threads() {
#ifdef GGN_HAS_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef GGN_HAS_OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

HiddenLayer hidden_layer(const ConstMatrixRef& u, const ConstMatrixRef& x, Activation a) {
  if (u.cols() != x.cols()) {
    throw ShapeError("hidden_layer: u has " + std::to_string(u.cols()) + " columns, inputs have " +
                     std::to_string(x.cols()));
  }
  const Index n = u.rows();
  const Index m = x.rows();
  HiddenLayer h{Matrix(n, m), Matrix(n, m), Matrix(n, m)};
  GGN_OMP_FOR
  for (Index j = 0; j < n; ++j) {
    h.pre.row(j).noalias() = (x * u.row(j).transpose()).transpose();
    for (Index i = 0; i < m; ++i) {
      const double z = h.pre(j, i);
      h.act(j, i) = activate(a, z);
      h.dact(j, i) = activate_derivative(a, z);
    }
  }
  return h;
}

Matrix outputs(const HiddenLayer& h, const ConstMatrixRef& v, double kappa) {
  const Index m = h.act.cols();
  const Index k = v.cols();
  Matrix out(m, k);
  GGN_OMP_FOR
  for (Index i = 0; i < m; ++i) {
    out.row(i).noalias() = kappa * (h.act.col(i).transpose() * v);
  }
  return out;
}

Matrix dense_jacobian(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa) {
  check_shapes(h, v, x);
  const Index n = v.rows();
  const Index k = v.cols();
  const Index n0 = x.cols();
  const Index m = x.rows();
  const Index v_off = n * n0;
  Matrix jac = Matrix::Zero(m * k, param_count(v, x));
  GGN_OMP_FOR
  for (Index r = 0; r < m * k; ++r) {
    const Index i = r / k;
    const Index c = r % k;
    for (Index j = 0; j < n; ++j) {
      const double coef = kappa * v(j, c) * h.dact(j, i);
      jac.row(r).segment(j * n0, n0) = coef * x.row(i);
      jac(r, v_off + j * k + c) = kappa * h.act(j, i);
    }
  }
  return jac;
}

Matrix weighted_gram(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                     double kappa, const Vector& w) {
  check_shapes(h, v, x);
  const Index n = v.rows();
  const Index k = v.cols();
  const Index n0 = x.cols();
  const Index m = x.rows();
  if (w.size() != param_count(v, x)) throw ShapeError("weighted_gram: weight length mismatch");
  const RowMap wu(w.data(), n, n0);
  const RowMap wv(w.data() + n * n0, n, k);
  const double k2 = kappa * kappa;

  Matrix gram(m * k, m * k);
  // One task per sample pair (i <= ip); each task writes only its own block.
  const Index pairs = m * (m + 1) / 2;
  GGN_OMP_FOR
  for (Index q = 0; q < pairs; ++q) {
    Index i = 0;
    Index rem = q;
    while (rem >= m - i) {
      rem -= m - i;
      ++i;
    }
    const Index ip = i + rem;
    const Vector prod = x.row(i).transpose().cwiseProduct(x.row(ip).transpose());
    const Vector s = wu * prod;
    const Vector t = h.dact.col(i).cwiseProduct(h.dact.col(ip)).cwiseProduct(s);
    Matrix block = k2 * (v.transpose() * t.asDiagonal() * v);
    for (Index c = 0; c < k; ++c) {
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) acc += h.act(j, i) * h.act(j, ip) * wv(j, c);
      block(c, c) += k2 * acc;
    }
    gram.block(i * k, ip * k, k, k) = block;
    gram.block(ip * k, i * k, k, k) = block.transpose();
  }
  return gram;
}

Vector jacobian_apply(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa, const Vector& d) {
  check_shapes(h, v, x);
  const Index n = v.rows();
  const Index k = v.cols();
  const Index n0 = x.cols();
  const Index m = x.rows();
  if (d.size() != param_count(v, x)) throw ShapeError("jacobian_apply: direction length mismatch");
  const RowMap du(d.data(), n, n0);
  const RowMap dv(d.data() + n * n0, n, k);
  Vector out(m * k);
  GGN_OMP_FOR
  for (Index i = 0; i < m; ++i) {
    const Vector b = du * x.row(i).transpose();
    const Vector coef_u = h.dact.col(i).cwiseProduct(b);
    for (Index c = 0; c < k; ++c) {
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) acc += v(j, c) * coef_u(j) + h.act(j, i) * dv(j, c);
      out(i * k + c) = kappa * acc;
    }
  }
  return out;
}

Vector jacobian_transpose_apply(const HiddenLayer& h, const ConstMatrixRef& v,
                                const ConstMatrixRef& x, double kappa, const Vector& r) {
  check_shapes(h, v, x);
  const Index n = v.rows();
  const Index k = v.cols();
  const Index n0 = x.cols();
  const Index m = x.rows();
  if (r.size() != m * k) throw ShapeError("jacobian_transpose_apply: residual length mismatch");
  const RowMap rr(r.data(), m, k);
  Vector out(param_count(v, x));
  GGN_OMP_FOR
  for (Index j = 0; j < n; ++j) {
    Eigen::RowVectorXd gu = Eigen::RowVectorXd::Zero(n0);
    for (Index i = 0; i < m; ++i) {
      double s = 0.0;
      for (Index c = 0; c < k; ++c) s += v(j, c) * rr(i, c);
      gu.noalias() += (s * h.dact(j, i)) * x.row(i);
    }
    out.segment(j * n0, n0) = kappa * gu.transpose();
    for (Index c = 0; c < k; ++c) {
      double acc = 0.0;
      for (Index i = 0; i < m; ++i) acc += h.act(j, i) * rr(i, c);
      out(n * n0 + j * k + c) = kappa * acc;
    }
  }
  return out;
}

Vector jacobian_column(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                       double kappa, Index col) {
  check_shapes(h, v, x);
  const Index n = v.rows();
  const Index k = v.cols();
  const Index n0 = x.cols();
  const Index m = x.rows();
  if (col < 0 || col >= param_count(v, x)) throw ShapeError("jacobian_column: index out of range");
  Vector out = Vector::Zero(m * k);
  if (col < n * n0) {
    const Index j = col / n0;
    const Index l = col % n0;
    for (Index i = 0; i < m; ++i)
      for (Index c = 0; c < k; ++c) out(i * k + c) = kappa * v(j, c) * h.dact(j, i) * x(i, l);
  } else {
    const Index j = (col - n * n0) / k;
    const Index c = (col - n * n0) % k;
    for (Index i = 0; i < m; ++i) out(i * k + c) = kappa * h.act(j, i);
  }
  return out;
}

namespace reference {

HiddenLayer hidden_layer(const ConstMatrixRef& u, const ConstMatrixRef& x, Activation a) {
  if (u.cols() != x.cols()) throw ShapeError("hidden_layer: input dimension mismatch");
  const Index n = u.rows();
  const Index m = x.rows();
  HiddenLayer h{Matrix(n, m), Matrix(n, m), Matrix(n, m)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      double z = 0.0;
      for (Index l = 0; l < u.cols(); ++l) z += u(j, l) * x(i, l);
      h.pre(j, i) = z;
      h.act(j, i) = activate(a, z);
      h.dact(j, i) = activate_derivative(a, z);
    }
  }
  return h;
}

Matrix outputs(const HiddenLayer& h, const ConstMatrixRef& v, double kappa) {
  const Index m = h.act.cols();
  Matrix out = Matrix::Zero(m, v.cols());
  for (Index i = 0; i < m; ++i)
    for (Index c = 0; c < v.cols(); ++c) {
      double acc = 0.0;
      for (Index j = 0; j < v.rows(); ++j) acc += v(j, c) * h.act(j, i);
      out(i, c) = kappa * acc;
    }
  return out;
}

Matrix dense_jacobian(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa) {
  check_shapes(h, v, x);
  const Index n = v.rows();
  const Index k = v.cols();
  const Index n0 = x.cols();
  const Index m = x.rows();
  Matrix jac = Matrix::Zero(m * k, param_count(v, x));
  for (Index i = 0; i < m; ++i)
    for (Index c = 0; c < k; ++c)
      for (Index j = 0; j < n; ++j) {
        for (Index l = 0; l < n0; ++l) jac(i * k + c, j * n0 + l) = kappa * v(j, c) * h.dact(j, i) * x(i, l);
        jac(i * k + c, n * n0 + j * k + c) = kappa * h.act(j, i);
      }
  return jac;
}

Matrix weighted_gram(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                     double kappa, const Vector& w) {
  const Matrix jac = reference::dense_jacobian(h, v, x, kappa);
  if (w.size() != jac.cols()) throw ShapeError("weighted_gram: weight length mismatch");
  const Index rows = jac.rows();
  Matrix gram(rows, rows);
  for (Index a = 0; a < rows; ++a)
    for (Index b = 0; b < rows; ++b) {
      double acc = 0.0;
      for (Index q = 0; q < jac.cols(); ++q) acc += jac(a, q) * w(q) * jac(b, q);
      gram(a, b) = acc;
    }
  return gram;
}

Vector jacobian_apply(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa, const Vector& d) {
  const Matrix jac = reference::dense_jacobian(h, v, x, kappa);
  if (d.size() != jac.cols()) throw ShapeError("jacobian_apply: direction length mismatch");
  Vector out = Vector::Zero(jac.rows());
  for (Index a = 0; a < jac.rows(); ++a)
    for (Index q = 0; q < jac.cols(); ++q) out(a) += jac(a, q) * d(q);
  return out;
}

Vector jacobian_transpose_apply(const HiddenLayer& h, const ConstMatrixRef& v,
                                const ConstMatrixRef& x, double kappa, const Vector& r) {
  const Matrix jac = reference::dense_jacobian(h, v, x, kappa);
  if (r.size() != jac.rows()) throw ShapeError("jacobian_transpose_apply: length mismatch");
  Vector out = Vector::Zero(jac.cols());
  for (Index q = 0; q < jac.cols(); ++q)
    for (Index a = 0; a < jac.rows(); ++a) out(q) += jac(a, q) * r(a);
  return out;
}

}  // namespace reference
}  // namespace ggn::kernels
