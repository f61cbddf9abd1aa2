#include "strb/core.hpp"

#include <cmath>
#include <numeric>

namespace strb {

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("dimension mismatch: " + what);
}

BdfScheme BdfScheme::of_order(int order) {
  BdfScheme s;
  s.order = order;
  if (order == 1) {
    s.beta = 1.0;
    s.alpha = {1.0};
  } else if (order == 2) {
    s.beta = 2.0 / 3.0;
    s.alpha = {4.0 / 3.0, -1.0 / 3.0};
  } else {
    throw ConfigError("BDF order must be 1 or 2, got " + std::to_string(order));
  }
  return s;
}

Index Dims::n_lambda() const {
  return std::accumulate(n_lambda_per_boundary.begin(), n_lambda_per_boundary.end(), Index{0});
}

void Dims::validate() const {
  if (n_u <= 0 || n_p < 0 || n_t <= 0) throw ConfigError("dims: sizes must be positive");
  for (Index k : n_lambda_per_boundary)
    if (k <= 0) throw ConfigError("dims: every Dirichlet boundary needs at least one multiplier");
  if (order != 1 && order != 2) throw ConfigError("dims: order must be 1 or 2");
  if (!(dt > 0.0)) throw ConfigError("dims: dt must be positive");
  if (n_t < order) throw ConfigError("dims: n_t must be at least the BDF order");
}

SpMat sparse_identity(Index n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat sparse_from_dense(const Mat& dense, double drop) {
  std::vector<Triplet> t;
  for (Index j = 0; j < dense.cols(); ++j)
    for (Index i = 0; i < dense.rows(); ++i)
      if (std::abs(dense(i, j)) > drop) t.emplace_back(i, j, dense(i, j));
  SpMat s(dense.rows(), dense.cols());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

double relative_error(const Mat& a, const Mat& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "relative_error operands");
  const double nb = b.norm();
  return (a - b).norm() / std::max(nb, 1e-300);
}

Mat gram_schmidt(const Mat& columns, const SpMat* weight, double drop_tol, Index keep_leading) {
  const Index n = columns.rows();
  Mat out(n, columns.cols());
  Index kept = 0;
  auto inner = [&](const Vec& a, const Vec& b) {
    return weight ? a.dot(*weight * b) : a.dot(b);
  };
  for (Index j = 0; j < columns.cols(); ++j) {
    Vec v = columns.col(j);
    const double original = std::sqrt(std::max(inner(v, v), 0.0));
    if (original == 0.0 && j >= keep_leading) continue;
    // two passes of MGS keep orthogonality at round-off level
    for (int pass = 0; pass < 2; ++pass)
      for (Index k = 0; k < kept; ++k) v -= inner(out.col(k), v) * out.col(k);
    const double nv = std::sqrt(std::max(inner(v, v), 0.0));
    if (j >= keep_leading && nv < drop_tol * original) continue;
    if (nv == 0.0) continue;
    out.col(kept++) = v / nv;
  }
  return out.leftCols(kept);
}

}  // namespace strb
