#include "ggn/metrics.hpp"

#include "ggn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ggn {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

TiSnapshot ti_snapshot(const Matrix& preactivations, const Matrix& probes) {
  if (preactivations.cols() != probes.rows()) {
    throw ShapeError("ti_snapshot: preactivations must have one column per probe");
  }
  TiSnapshot s;
  s.signs = preactivations.unaryExpr([](double x) { return sgn(x); });
  s.probes = probes;
  return s;
}

double ti_measure(const TiSnapshot& start, const Matrix& final_pre, bool include_zeros,
                  double zero_tol) {
  if (start.signs.rows() != final_pre.rows() || start.signs.cols() != final_pre.cols()) {
    throw ShapeError("ti_measure: start is " + std::to_string(start.signs.rows()) + "x" +
                     std::to_string(start.signs.cols()) + ", final is " +
                     std::to_string(final_pre.rows()) + "x" + std::to_string(final_pre.cols()));
  }
  if (final_pre.size() == 0) throw ShapeError("ti_measure: empty snapshot");
  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < final_pre.rows(); ++i) {
    for (Eigen::Index j = 0; j < final_pre.cols(); ++j) {
      const double a = start.signs(i, j);
      const double f = final_pre(i, j);
      if (a != 0.0 && sgn(f) == a) {
        ++stable;
      } else if (include_zeros && std::abs(f) <= zero_tol) {
        ++stable;
      }
    }
  }
  return 100.0 * static_cast<double>(stable) / static_cast<double>(final_pre.size());
}

Eigen::Index count_zeros(const Vector& theta, double tol) {
  if (tol < 0.0) throw DomainError("count_zeros: tol must be >= 0");
  return (theta.array().abs() <= tol).count();
}

int argmax_row(const Matrix& predictions, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index c = 1; c < predictions.cols(); ++c) {
    if (predictions(row, c) > predictions(row, best)) best = static_cast<int>(c);
  }
  return best;
}

double accuracy(const Matrix& predictions, const std::vector<int>& labels) {
  if (predictions.cols() < 2) throw ShapeError("accuracy: needs at least two classes");
  if (static_cast<Eigen::Index>(labels.size()) != predictions.rows() || labels.empty()) {
    throw ShapeError("accuracy: label count does not match prediction rows");
  }
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    if (argmax_row(predictions, i) == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.rows());
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("spearman: need two equal-length samples");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ggn
