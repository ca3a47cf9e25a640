#pragma once

#include "ggn/numerics.hpp"

#include <vector>

namespace ggn {

// Hidden pre-activation signs over fixed probe inputs, taken at the start of a run.
struct TiSnapshot {
  Matrix signs;       // n x probe_count, entries in {-1, 0, +1}
  Matrix probes;      // probe inputs, probe_count x n0
};

TiSnapshot ti_snapshot(const Matrix& preactivations, const Matrix& probes);

// Percentage of entries with sgn(start) == sgn(final), zero signs excluded.
// include_zeros additionally counts entries whose final value is within
// zero_tol of 0 (exactly 0 by default).
double ti_measure(const TiSnapshot& start, const Matrix& final_pre, bool include_zeros,
                  double zero_tol = 0.0);

Eigen::Index count_zeros(const Vector& theta, double tol = 1e-8);

// Fraction of rows whose argmax equals the label; ties go to the lowest index.
double accuracy(const Matrix& predictions, const std::vector<int>& labels);

int argmax_row(const Matrix& predictions, Eigen::Index row);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ggn
