#include "strb/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace strb {

double block_norm_sq(const Mat& x, const SpMat* X) {
  if (!X) return x.squaredNorm();
  require_dims(X->rows() == x.rows(), "norm matrix size");
  return x.cwiseProduct(*X * x).sum();
}

namespace {

struct Accumulator {
  double sum = 0.0;
  Index count = 0;

  void add(const Mat& rec, const Mat& ref, const SpMat* X, const char* field, FieldErrors& out) {
    require_dims(rec.rows() == ref.rows() && rec.cols() == ref.cols(), std::string("reconstruction of ") + field);
    const double den = block_norm_sq(ref, X);
    if (!(den > 0.0)) {
      ++out.excluded;
      out.warnings.push_back(std::string("zero-norm ") + field + " reference excluded");
      return;
    }
    sum += std::sqrt(block_norm_sq(rec - ref, X) / den);
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

}  // namespace

FieldErrors error_metrics(const std::vector<Trajectory>& rec, const std::vector<Trajectory>& ref,
                          const FomOperators& ops) {
  require_dims(rec.size() == ref.size(), "one reconstruction per reference");
  FieldErrors out;
  Accumulator u, p, d;
  for (size_t k = 0; k < rec.size(); ++k) {
    u.add(rec[k].u, ref[k].u, &ops.Xu, "velocity", out);
    p.add(rec[k].p, ref[k].p, &ops.Xp, "pressure", out);
    d.add(rec[k].d, ref[k].d, &ops.Xd, "displacement", out);
  }
  out.u = u.mean();
  out.p = p.mean();
  out.d = d.mean();
  return out;
}

FieldErrors relative_errors(const Trajectory& rec, const Trajectory& ref, const FomOperators& ops) {
  return error_metrics({rec}, {ref}, ops);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace strb
