#include "strb/pod.hpp"

#include <Eigen/SparseCholesky>

#include <random>

namespace strb {

Index truncation_rank(const Vec& s, double tol, double total) {
  if (total <= 0.0) return 0;
  const double budget = tol * tol * total;
  // tail[n] = energy outside the leading n modes, summed from the small end
  double tail = std::max(total - s.squaredNorm(), 0.0);
  Index n = s.size();
  while (n > 0) {
    const double grown = tail + s[n - 1] * s[n - 1];
    if (grown > budget) break;
    tail = grown;
    --n;
  }
  return n;
}

namespace {

struct Factor {
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> llt;
  bool identity = true;

  explicit Factor(const SpMat* X) {
    if (!X) return;
    identity = false;
    llt.compute(*X);
    if (llt.info() != Eigen::Success)
      throw NumericalError("weighted POD: norm matrix is not symmetric positive definite");
  }
  Mat to_euclidean(const Mat& S) const { return identity ? S : Mat(llt.matrixU() * S); }
  Mat from_euclidean(const Mat& U) const { return identity ? U : Mat(llt.matrixU().solve(U)); }
};

Mat gaussian(Index rows, Index cols, std::mt19937_64& eng) {
  std::normal_distribution<double> d;
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = d(eng);
  return m;
}

Mat orthonormal_range(const Mat& Y) {
  Eigen::HouseholderQR<Mat> qr(Y);
  return qr.householderQ() * Mat::Identity(Y.rows(), Y.cols());
}

// Range finder with oversampling 10 and two power iterations; the sketch
// grows by doubling until the captured energy meets the tolerance.
void randomized_svd(const Mat& A, double tol, double total, std::uint64_t seed, Mat& U, Vec& s) {
  const Index full = std::min(A.rows(), A.cols());
  std::mt19937_64 eng(seed);
  Index k = std::min<Index>(full, 16);
  for (;;) {
    const Index sketch = std::min(full, k + 10);
    Mat Q = orthonormal_range(A * gaussian(A.cols(), sketch, eng));
    for (int it = 0; it < 2; ++it) {
      Q = orthonormal_range(A.transpose() * Q);
      Q = orthonormal_range(A * Q);
    }
    const Mat Bs = Q.transpose() * A;
    Eigen::BDCSVD<Mat> svd(Bs, Eigen::ComputeThinU);
    s = svd.singularValues();
    U = Q * svd.matrixU();
    const double captured = s.head(std::min(k, s.size())).squaredNorm();
    if (sketch >= full || total - captured <= tol * tol * total) return;
    k *= 2;
  }
}

}  // namespace

PodResult weighted_truncated_pod(const Mat& S, const SpMat* X, const PodOptions& opts) {
  if (!(opts.tol > 0.0 && opts.tol < 1.0)) throw ConfigError("POD tolerance must lie in (0, 1)");
  require_dims(S.cols() >= 1, "POD needs at least one snapshot");
  if (X) require_dims(X->rows() == S.rows() && X->cols() == S.rows(), "POD norm matrix size");

  const Factor f(X);
  const Mat A = f.to_euclidean(S);
  const double total = A.squaredNorm();

  Mat U;
  Vec s;
  if (opts.randomized && std::min(A.rows(), A.cols()) > 32) {
    randomized_svd(A, opts.tol, total, opts.seed, U, s);
  } else {
    Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU);
    s = svd.singularValues();
    U = svd.matrixU();
  }

  Index n = truncation_rank(s, opts.tol, total);
  n = std::max(n, std::min(opts.min_rank, s.size()));
  if (opts.max_rank >= 0) n = std::min(n, opts.max_rank);

  PodResult r;
  r.basis = f.from_euclidean(U.leftCols(n));
  r.spectrum.singular_values = s;
  r.spectrum.retained = n;
  r.spectrum.tolerance = opts.tol;
  r.spectrum.discarded_energy = total > 0.0 ? std::max(total - s.head(n).squaredNorm(), 0.0) / total : 0.0;
  return r;
}

}  // namespace strb
