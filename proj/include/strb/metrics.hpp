#pragma once

#include "strb/fom.hpp"

namespace strb {

/// sum_n x_n^T X x_n over the columns of x; Euclidean when X is null.
double block_norm_sq(const Mat& x, const SpMat* X);

struct FieldErrors {
  double u = 0.0, p = 0.0, d = 0.0;
  Index excluded = 0;  // field samples skipped because the reference vanished
  std::vector<std::string> warnings;
};

/// Relative errors ||rec - ref|| / ||ref|| in the block-diagonal space-time
/// norms, averaged over samples. A zero reference drops that field sample.
FieldErrors error_metrics(const std::vector<Trajectory>& rec, const std::vector<Trajectory>& ref,
                          const FomOperators& ops);

/// One sample.
FieldErrors relative_errors(const Trajectory& rec, const Trajectory& ref, const FomOperators& ops);

/// Median of a sample (the mean of the middle pair when the count is even).
double median(std::vector<double> v);

}  // namespace strb
