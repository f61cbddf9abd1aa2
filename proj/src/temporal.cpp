#include "strb/temporal.hpp"

namespace strb {

Vec primitive_P0(const Vec& padded, const BdfScheme& scheme, double dt) {
  const Index S = scheme.order;
  require_dims(padded.size() >= S, "primitive_P0: input shorter than the padding");
  const Index nt = padded.size() - S;
  Vec x = Vec::Zero(padded.size());
  const double bdt = scheme.beta * dt;
  for (Index n = S; n < padded.size(); ++n) {
    double v = bdt * padded[n];
    for (Index s = 1; s <= S; ++s) v += scheme.alpha[static_cast<size_t>(s - 1)] * x[n - s];
    x[n] = v;
  }
  return x.tail(nt);
}

Mat primitive_columns(const Mat& psi, const BdfScheme& scheme, double dt) {
  const Index S = scheme.order;
  Mat out(psi.rows(), psi.cols());
  Vec padded = Vec::Zero(psi.rows() + S);
  for (Index j = 0; j < psi.cols(); ++j) {
    padded.tail(psi.rows()) = psi.col(j);
    out.col(j) = primitive_P0(padded, scheme, dt);
  }
  return out;
}

Vec time_ramp(Index n_t, const BdfScheme& scheme, double dt) {
  return primitive_columns(Mat::Ones(n_t, 1), scheme, dt).col(0);
}

Mat homogeneous_responses(Index n_t, const BdfScheme& scheme) {
  const Index S = scheme.order;
  Mat h(n_t, S);
  for (Index s = 1; s <= S; ++s) {
    Vec x = Vec::Zero(n_t + S);
    x[S - s] = 1.0;  // slot of t_{1-s}
    for (Index n = S; n < n_t + S; ++n) {
      double v = 0.0;
      for (Index r = 1; r <= S; ++r) v += scheme.alpha[static_cast<size_t>(r - 1)] * x[n - r];
      x[n] = v;
    }
    h.col(s - 1) = x.tail(n_t);
  }
  return h;
}

Mat shifted_gram(const Mat& a, const Mat& b, int s) {
  require_dims(a.rows() == b.rows(), "shifted_gram: bases on different time grids");
  const Index nt = a.rows();
  if (s >= nt) return Mat::Zero(a.cols(), b.cols());
  return a.bottomRows(nt - s).transpose() * b.topRows(nt - s);
}

Mat triple_product(const Mat& psi) {
  const Index n = psi.cols(), nt = psi.rows();
  Mat out(n, n * n);
  // column (b, c) of the unfolding is psi^T (psi_b .* psi_c)
  Mat prod(nt, n * n);
  for (Index c = 0; c < n; ++c)
    for (Index b = 0; b < n; ++b) prod.col(b + n * c) = psi.col(b).cwiseProduct(psi.col(c));
  out.noalias() = psi.transpose() * prod;
  return out;
}

}  // namespace strb
