#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace strb {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Error hierarchy. Every failure the library reports derives from Error so
// callers can catch one type; the CLI maps the subclasses to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
// Malformed or foreign file content (bad magic, bad header line).
struct FormatError : IoError {
  using IoError::IoError;
};
// Header parsed but the payload ends early.
struct TruncatedError : IoError {
  using IoError::IoError;
};
// File header disagrees with the dimensions the caller expects.
struct ShapeMismatchError : IoError {
  using IoError::IoError;
};

struct SingularSystemError : NumericalError {
  using NumericalError::NumericalError;
};

struct NewtonFailure : NumericalError {
  NewtonFailure(const std::string& what, Index step_index, double residual)
      : NumericalError(what), step(step_index), residual_norm(residual) {}
  Index step;
  double residual_norm;
};

void require_dims(bool ok, const std::string& what);

/// Multistep coefficients in the convention
///   r = H w_{n+1} - sum_s alpha_s H w_{n+1-s} - beta dt F(w_{n+1}).
struct BdfScheme {
  int order = 2;
  double beta = 2.0 / 3.0;
  std::vector<double> alpha{4.0 / 3.0, -1.0 / 3.0};

  static BdfScheme of_order(int order);
  int steps() const { return order; }
};

/// Space and time dimensions of a full-order instance.
struct Dims {
  Index n_u = 0;
  Index n_p = 0;
  std::vector<Index> n_lambda_per_boundary;
  Index n_t = 0;
  double dt = 0.0;
  int order = 2;

  Index n_lambda() const;
  Index n_space() const { return n_u + n_p + n_lambda(); }
  Index n_spacetime() const { return n_space() * n_t; }
  Index n_boundaries() const { return static_cast<Index>(n_lambda_per_boundary.size()); }
  void validate() const;
};

SpMat sparse_identity(Index n);
SpMat sparse_from_dense(const Mat& dense, double drop = 0.0);

/// Relative difference ||a - b|| / max(||b||, tiny).
double relative_error(const Mat& a, const Mat& b);

/// Column-wise modified Gram-Schmidt in the inner product induced by `weight`
/// (identity when weight is empty). Columns whose norm after projection drops
/// below `drop_tol` times their original norm are discarded.
Mat gram_schmidt(const Mat& columns, const SpMat* weight, double drop_tol, Index keep_leading = 0);

}  // namespace strb
