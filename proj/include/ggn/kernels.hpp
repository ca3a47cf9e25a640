#pragma once

// Data-parallel kernels for the biasless two-layer network
//   Phi(x)_c = kappa * sum_j v(j, c) * act(u_j . x).
//
// Parameter layout: theta = [u row-major (n x n0), v row-major (n x k)].
// Output layout: row r = i * k + c for sample i and output head c.
//
// The functions in ggn::kernels are OpenMP-parallel. Every output entry is
// owned by exactly one thread and reduced in a fixed order, so results are
// bitwise identical for any thread count. ggn::kernels::reference holds
// straightforward serial loops kept as test oracles and benchmark baselines.

#include "ggn/activation.hpp"
#include "ggn/numerics.hpp"

namespace ggn::kernels {

using ConstMatrixRef = Eigen::Ref<const Matrix>;

/// Hidden-layer quantities for one batch, each n x m.
struct HiddenLayer {
  Matrix pre;   // u_j . x_i
  Matrix act;   // act(pre)
  Matrix dact;  // act'(pre)
};

HiddenLayer hidden_layer(const ConstMatrixRef& u, const ConstMatrixRef& x, Activation a);

/// m x k network outputs.
Matrix outputs(const HiddenLayer& h, const ConstMatrixRef& v, double kappa);

/// (m k) x p Jacobian of the outputs with respect to theta.
Matrix dense_jacobian(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa);

/// J diag(w) J^T without forming J; w has length p.
Matrix weighted_gram(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                     double kappa, const Vector& w);

/// J d for a parameter-space direction d (length p).
Vector jacobian_apply(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa, const Vector& d);

/// J^T r for an output-space vector r (length m k).
Vector jacobian_transpose_apply(const HiddenLayer& h, const ConstMatrixRef& v,
                                const ConstMatrixRef& x, double kappa, const Vector& r);

/// Column `col` of J (length m k).
Vector jacobian_column(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                       double kappa, Eigen::Index col);

int max_threads();
void set_threads(int n);

namespace reference {

HiddenLayer hidden_layer(const ConstMatrixRef& u, const ConstMatrixRef& x, Activation a);
Matrix outputs(const HiddenLayer& h, const ConstMatrixRef& v, double kappa);
Matrix dense_jacobian(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa);
Matrix weighted_gram(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                     double kappa, const Vector& w);
Vector jacobian_apply(const HiddenLayer& h, const ConstMatrixRef& v, const ConstMatrixRef& x,
                      double kappa, const Vector& d);
Vector jacobian_transpose_apply(const HiddenLayer& h, const ConstMatrixRef& v,
                                const ConstMatrixRef& x, double kappa, const Vector& r);

}  // namespace reference
}  // namespace ggn::kernels
