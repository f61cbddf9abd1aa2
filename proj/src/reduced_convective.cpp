#include "strb/assembly.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace strb {

ConvectiveAffineSet assemble_convective_affine(const ConvectiveTensor& C, const Mat& phi_u, Index n_c, Index n_cJ) {
  const Index nus = phi_u.cols();
  if (n_c < 0 || n_c > nus || n_cJ < 0 || n_cJ > nus)
    throw DimensionError("convective ranks out of range: n_c = " + std::to_string(n_c) +
                         ", n_cJ = " + std::to_string(n_cJ) + ", n_u^s = " + std::to_string(nus));
  require_dims(C.n == phi_u.rows(), "convective tensor and velocity basis");
  ConvectiveAffineSet set;
  set.n_c = n_c;
  set.n_cJ = n_cJ;
  set.n_us = nus;
  const Mat phit = phi_u.transpose();  // column i holds row i of phi

  set.kbar = Mat::Zero(n_c * n_c, nus);
  if (n_c > 0 && !C.empty()) {
    Mat Y = Mat::Zero(n_c * n_c, C.n);
    for (const auto& e : C.entries) {
      auto col = Y.col(e.m);
      const auto pi = phit.col(e.i).head(n_c);
      const auto pj = phit.col(e.j).head(n_c);
      for (Index b = 0; b < n_c; ++b) col.segment(b * n_c, n_c) += (e.value * pj[b]) * pi;
    }
    set.kbar.noalias() = Y * phi_u;
  }

  for (Index l = 0; l < n_cJ; ++l) {
    Mat Z = Mat::Zero(C.n, nus);
    for (const auto& e : C.entries) {
      const double vj = e.value * phi_u(e.j, l), vi = e.value * phi_u(e.i, l);
      Z.row(e.m) += vj * phit.col(e.i).transpose() + vi * phit.col(e.j).transpose();
    }
    set.Kbar.push_back(phit * Z);
  }
  return set;
}

Vec eval_space_convective(const Vec& u, const ConvectiveAffineSet& set) {
  require_dims(u.size() == set.n_us, "eval_space_convective: coordinate length");
  if (set.n_c == 0) return Vec::Zero(set.n_us);
  const Vec uc = u.head(set.n_c);
  const Mat outer = uc * uc.transpose();
  return set.kbar.transpose() * Eigen::Map<const Vec>(outer.data(), outer.size());
}

Mat eval_space_convective_jacobian(const Vec& u, const ConvectiveAffineSet& set) {
  require_dims(u.size() == set.n_us, "eval_space_convective_jacobian: coordinate length");
  Mat J = Mat::Zero(set.n_us, set.n_us);
  for (Index l = 0; l < set.n_cJ; ++l) J += u[l] * set.Kbar[static_cast<size_t>(l)];
  return J;
}

Mat eval_reduced_convective(const Mat& U, const ConvectiveAffineSet& set, const Mat& psi3, double beta_dt,
                            const ConvectiveLift* lift) {
  const Index nus = U.rows(), nt = U.cols(), nc = set.n_c;
  require_dims(nus == set.n_us, "eval_reduced_convective: spatial size");
  if (nc == 0) return Mat::Zero(nus, nt);
  if (psi3.rows() != nt || psi3.cols() != nt * nt)
    throw DimensionError("eval_reduced_convective: triple product missing or of wrong size");

  const Mat Uc = U.topRows(nc);
  // contract the temporal tensor with U first, then pair the spatial modes
  const Mat X = Uc * psi3;  // nc x nt^2, column b + nt m
  Mat W(nc * nc, nt);
  for (Index m = 0; m < nt; ++m) {
    Mat Wm = X.middleCols(m * nt, nt) * Uc.transpose();
    W.col(m) = Eigen::Map<const Vec>(Wm.data(), Wm.size());
  }
  if (lift && lift->u0bar.size() > 0) {
    const Vec u0 = lift->u0bar.head(nc);
    const Mat V = Uc * lift->G0->transpose();
    const Mat outer0 = u0 * u0.transpose();
    const Eigen::Map<const Vec> c0(outer0.data(), outer0.size());
    for (Index m = 0; m < nt; ++m) {
      Mat Lm = u0 * V.col(m).transpose() + V.col(m) * u0.transpose();
      W.col(m) += Eigen::Map<const Vec>(Lm.data(), Lm.size()) + (*lift->ones)[m] * c0;
    }
  }
  return beta_dt * (set.kbar.transpose() * W);
}

Mat eval_reduced_convective_jacobian(const Mat& U, const ConvectiveAffineSet& set, const Mat& psi3, double beta_dt,
                                     const ConvectiveLift* lift) {
  const Index nus = U.rows(), nt = U.cols();
  require_dims(nus == set.n_us, "eval_reduced_convective_jacobian: spatial size");
  Mat J = Mat::Zero(nus * nt, nus * nt);
  if (set.n_cJ == 0) return J;
  if (psi3.rows() != nt || psi3.cols() != nt * nt)
    throw DimensionError("eval_reduced_convective_jacobian: triple product missing or of wrong size");
  for (Index l = 0; l < set.n_cJ; ++l) {
    Mat T = Mat(U.row(l) * psi3);
    T.resize(nt, nt);  // symmetric, ordering of the two slots is irrelevant
    if (lift && lift->u0bar.size() > 0) T += lift->u0bar[l] * *lift->G0;
    J.noalias() += beta_dt * Mat(Eigen::kroneckerProduct(set.Kbar[static_cast<size_t>(l)], T));
  }
  return J;
}

}  // namespace strb
