#pragma once

#include "strb/core.hpp"

#include <cstdint>

namespace strb {

struct PodSpectrum {
  Vec singular_values;  // descending; may be partial on the randomized path
  Index retained = 0;
  double tolerance = 0.0;
  double discarded_energy = 0.0;  // tail energy over total energy
};

struct PodOptions {
  double tol = 1e-3;
  bool randomized = false;
  std::uint64_t seed = 0;
  Index min_rank = 0;
  Index max_rank = -1;  // negative: no cap
};

struct PodResult {
  Mat basis;
  PodSpectrum spectrum;
};

/// Minimal n with sum_{i>n} s_i^2 <= tol^2 sum_i s_i^2.
Index truncation_rank(const Vec& singular_values, double tol, double total_energy);

/// POD of the columns of S in the inner product of X (Euclidean when X is
/// null). The basis is X-orthonormal.
PodResult weighted_truncated_pod(const Mat& S, const SpMat* X, const PodOptions& opts);

}  // namespace strb
