#pragma once

// Dense full-order space-time references for small instances. Everything here
// is built entry by entry from the per-step equations so it shares no code
// path with the reduced assembly.

#include "strb/assembly.hpp"
#include "strb/fom.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace oracle {

using namespace strb;

// Full-order unknowns are ordered field by field, space-major inside a
// field: velocity dof i at step n (0-based) sits at i * n_t + n.
struct Layout {
  Index nu, np, nl, nt;
  Index u(Index i, Index n) const { return i * nt + n; }
  Index p(Index i, Index n) const { return nu * nt + i * nt + n; }
  Index l(Index i, Index n) const { return (nu + np) * nt + i * nt + n; }
  Index size() const { return (nu + np + nl) * nt; }
};

inline Layout layout_of(const FomOperators& ops, Index nt) { return {ops.n_u(), ops.n_p(), ops.n_lambda(), nt}; }

// d = U W^T, W(n, m) weight of u_m in d_n under the kinematic recursion with zero history
inline Mat kinematic_weights(const BdfScheme& sc, double dt, Index nt) {
  Mat W = Mat::Zero(nt, nt);
  for (Index n = 0; n < nt; ++n) {
    W(n, n) += sc.beta * dt;
    for (int s = 1; s <= sc.order; ++s)
      if (n - s >= 0) W.row(n) += sc.alpha[static_cast<size_t>(s - 1)] * W.row(n - s);
  }
  return W;
}

// Linear part of the monolithic residual, r = A w - F, with zero history.
inline Mat spacetime_matrix(const FomOperators& ops, const MembraneCoefficients& mt, const BdfScheme& sc,
                            double dt, Index nt) {
  const Layout lay = layout_of(ops, nt);
  const double bdt = sc.beta * dt;
  const Mat Mt = Mat(ops.M) + mt[0] * Mat(ops.Ms);
  const Mat AR = Mat(ops.A) + Mat(ops.resistance_matrix());
  const Mat K = mt[1] * Mat(ops.As1) + mt[2] * Mat(ops.As2) + ops.c_s * Mat(ops.Ms);
  const Mat B = Mat(ops.B), L = Mat(ops.L);
  const Mat W = kinematic_weights(sc, dt, nt);
  Mat A = Mat::Zero(lay.size(), lay.size());
  for (Index n = 0; n < nt; ++n) {
    for (Index i = 0; i < lay.nu; ++i) {
      for (Index j = 0; j < lay.nu; ++j) {
        A(lay.u(i, n), lay.u(j, n)) += Mt(i, j) + bdt * AR(i, j);
        for (int s = 1; s <= sc.order; ++s)
          if (n - s >= 0) A(lay.u(i, n), lay.u(j, n - s)) -= sc.alpha[static_cast<size_t>(s - 1)] * Mt(i, j);
        for (Index m = 0; m <= n; ++m) A(lay.u(i, n), lay.u(j, m)) += bdt * K(i, j) * W(n, m);
      }
      for (Index j = 0; j < lay.np; ++j) A(lay.u(i, n), lay.p(j, n)) += bdt * B(j, i);
      for (Index j = 0; j < lay.nl; ++j) A(lay.u(i, n), lay.l(j, n)) += bdt * L(j, i);
    }
    for (Index r = 0; r < lay.np; ++r)
      for (Index j = 0; j < lay.nu; ++j) A(lay.p(r, n), lay.u(j, n)) += bdt * B(r, j);
    for (Index r = 0; r < lay.nl; ++r)
      for (Index j = 0; j < lay.nu; ++j) A(lay.l(r, n), lay.u(j, n)) += bdt * L(r, j);
  }
  return A;
}

// Block-diagonal space-time basis with reduced index l_s * n_t + l_t.
inline Mat projection(const ReducedBasisSet& b) {
  const Index nt = b.psi_u.rows();
  auto block = [&](const Mat& phi, const Mat& psi) {
    Mat P(phi.rows() * nt, phi.cols() * psi.cols());
    for (Index i = 0; i < phi.rows(); ++i)
      for (Index n = 0; n < nt; ++n)
        for (Index ls = 0; ls < phi.cols(); ++ls)
          for (Index lt = 0; lt < psi.cols(); ++lt) P(i * nt + n, ls * psi.cols() + lt) = phi(i, ls) * psi(n, lt);
    return P;
  };
  const Mat Pu = block(b.phi_u, b.psi_u), Pp = block(b.phi_p, b.psi_p), Pl = block(b.phi_lambda, b.psi_lambda);
  Mat P = Mat::Zero(Pu.rows() + Pp.rows() + Pl.rows(), Pu.cols() + Pp.cols() + Pl.cols());
  P.block(0, 0, Pu.rows(), Pu.cols()) = Pu;
  P.block(Pu.rows(), Pu.cols(), Pp.rows(), Pp.cols()) = Pp;
  P.block(Pu.rows() + Pp.rows(), Pu.cols() + Pp.cols(), Pl.rows(), Pl.cols()) = Pl;
  return P;
}

// velocity block of a space-time vector as an N_u x N_t matrix
inline Mat velocity_field(const Vec& w, Index nu, Index nt) {
  Mat U(nu, nt);
  for (Index i = 0; i < nu; ++i)
    for (Index n = 0; n < nt; ++n) U(i, n) = w[i * nt + n];
  return U;
}

inline Vec spacetime_convective(const FomOperators& ops, const Mat& U, double bdt) {
  const Index nt = U.cols();
  Vec c = Vec::Zero(ops.n_u() * nt);
  for (Index n = 0; n < nt; ++n) {
    const Vec cn = eval_convective(U.col(n), ops.C);
    for (Index i = 0; i < ops.n_u(); ++i) c[i * nt + n] = bdt * cn[i];
  }
  return c;
}

inline Vec spacetime_dirichlet(const FomOperators& ops, const Mat& flow, double bdt) {
  const Layout lay = layout_of(ops, flow.cols());
  Vec F = Vec::Zero(lay.size());
  for (Index n = 0; n < lay.nt; ++n) {
    const Vec g = ops.dirichlet_vector(flow.col(n));
    for (Index r = 0; r < lay.nl; ++r) F[lay.l(r, n)] = bdt * g[r];
  }
  return F;
}

// Full-order lifting vectors: initial-condition history terms (F0) and the
// negated operator applied to the lifted state (F0L), built by stepping.
inline std::pair<Vec, Vec> spacetime_lifting(const FomOperators& ops, const MembraneCoefficients& mt,
                                             const BdfScheme& sc, double dt, Index nt, const InitialState& ic) {
  const Layout lay = layout_of(ops, nt);
  const double bdt = sc.beta * dt;
  const int S = sc.order;
  const SpMat Mt = ops.M + mt[0] * ops.Ms;
  const SpMat AR = ops.A + ops.resistance_matrix();
  const SpMat K = mt[1] * ops.As1 + mt[2] * ops.As2 + ops.c_s * ops.Ms;
  const Vec& u0 = ic.u[0];
  // lifted displacement by direct recursion with the true displacement history
  std::vector<Vec> d(static_cast<size_t>(nt));
  auto d_at = [&](Index n) -> Vec { return n >= 0 ? d[static_cast<size_t>(n)] : ic.d[static_cast<size_t>(-n - 1)]; };
  for (Index n = 0; n < nt; ++n) {
    Vec v = bdt * u0;
    for (int s = 1; s <= S; ++s) v += sc.alpha[static_cast<size_t>(s - 1)] * d_at(n - s);
    d[static_cast<size_t>(n)] = v;
  }
  Vec F0 = Vec::Zero(lay.size()), F0L = Vec::Zero(lay.size());
  for (Index n = 0; n < nt; ++n) {
    Vec hist = Vec::Zero(lay.nu), lift_mass = Mt * u0;
    for (int s = 1; s <= S; ++s) {
      const double a = sc.alpha[static_cast<size_t>(s - 1)];
      if (n - s < 0) hist += a * (Mt * ic.u[static_cast<size_t>(s - n - 1)]);
      else lift_mass -= a * (Mt * u0);
    }
    const Vec fu = -(lift_mass + bdt * (AR * u0 + ops.B.transpose() * ic.p + ops.L.transpose() * ic.lambda +
                                        K * d[static_cast<size_t>(n)]));
    const Vec fp = -bdt * (ops.B * u0);
    const Vec fl = -bdt * (ops.L * u0);
    for (Index i = 0; i < lay.nu; ++i) {
      F0[lay.u(i, n)] = hist[i];
      F0L[lay.u(i, n)] = fu[i];
    }
    for (Index i = 0; i < lay.np; ++i) F0L[lay.p(i, n)] = fp[i];
    for (Index i = 0; i < lay.nl; ++i) F0L[lay.l(i, n)] = fl[i];
  }
  return {F0, F0L};
}

inline Mat random_matrix(Index r, Index c, std::mt19937_64& g) {
  std::normal_distribution<double> d;
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(g);
  return m;
}

inline Mat random_orthonormal(Index r, Index c, std::mt19937_64& g) {
  Eigen::HouseholderQR<Mat> qr(random_matrix(r, c, g));
  return qr.householderQ() * Mat::Identity(r, c);
}

// X-orthonormal random spatial bases and Euclidean temporal bases; a temporal
// rank equal to nt gives the identity.
inline ReducedBasisSet random_bases(const FomOperators& ops, Index nt, Index nus, Index nut, Index nps, Index npt,
                                    Index nls, Index nlt, std::mt19937_64& g) {
  ReducedBasisSet b;
  b.phi_u = gram_schmidt(random_matrix(ops.n_u(), nus, g), &ops.Xu, 1e-12);
  b.phi_p = gram_schmidt(random_matrix(ops.n_p(), nps, g), &ops.Xp, 1e-12);
  b.phi_lambda = random_orthonormal(ops.n_lambda(), nls, g);
  b.psi_u = nut == nt ? Mat(Mat::Identity(nt, nt)) : random_orthonormal(nt, nut, g);
  b.psi_p = npt == nt ? Mat(Mat::Identity(nt, nt)) : random_orthonormal(nt, npt, g);
  b.psi_lambda = nlt == nt ? Mat(Mat::Identity(nt, nt)) : random_orthonormal(nt, nlt, g);
  return b;
}

inline ReducedBasisSet identity_bases(const FomOperators& ops, Index nt) {
  ReducedBasisSet b;
  b.phi_u = Mat::Identity(ops.n_u(), ops.n_u());
  b.phi_p = Mat::Identity(ops.n_p(), ops.n_p());
  b.phi_lambda = Mat::Identity(ops.n_lambda(), ops.n_lambda());
  b.psi_u = b.psi_p = b.psi_lambda = Mat::Identity(nt, nt);
  return b;
}

// Linear constrained problem with g(t) = exp(-t) g: the velocity splits into
// exp(-t) u_p plus a nullspace part obeying a diagonalizable ODE.
struct DecayReference {
  Mat Q, V;
  Vec up, lambda, h;

  DecayReference(const FomOperators& ops, const Vec& gs) {
    const Index nu = ops.n_u();
    Mat BL(ops.n_p() + ops.n_lambda(), nu);
    BL << Mat(ops.B), Mat(ops.L);
    Vec rhs = Vec::Zero(BL.rows());
    rhs.tail(ops.n_lambda()) = gs;
    Eigen::JacobiSVD<Mat> svd(BL, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Index r = BL.rows();
    Q = svd.matrixV().rightCols(nu - r);
    up = svd.solve(rhs);
    const Mat A = Mat(ops.A) + Mat(ops.resistance_matrix());
    const Mat Mq = Q.transpose() * Mat(ops.M) * Q;
    const Mat Aq = Q.transpose() * A * Q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Aq, Mq);
    V = es.eigenvectors();  // V^T Mq V = I
    lambda = es.eigenvalues();
    const Vec f = Q.transpose() * (Mat(ops.M) - A) * up;
    h = V.transpose() * f;
  }

  Vec at(double t) const {
    Vec y(lambda.size());
    for (Index i = 0; i < y.size(); ++i)
      y[i] = h[i] * (std::exp(-t) - std::exp(-lambda[i] * t)) / (lambda[i] - 1.0);
    return std::exp(-t) * up + Q * (V * y);
  }
};

inline double bdf2_error(const FomOperators& ops, const DecayReference& ref, Index nt) {
  const double T = 1.0, dt = T / static_cast<double>(nt);
  Mat flow(2, nt);
  for (Index n = 0; n < nt; ++n) flow.col(n).setConstant(std::exp(-static_cast<double>(n + 1) * dt));
  auto ic = InitialState::zero(ops.n_u(), ops.n_p(), ops.n_lambda(), 2);
  ic.u[0] = ref.at(0.0);
  ic.u[1] = ref.at(-dt);
  ParameterSample mu;
  mu.mu_f = Vec::Zero(3);
  mu.mu_m = {0.0, 1.0, 1.0, 0.3};
  auto tr = fom_solve_transient(ops, BdfScheme::of_order(2), dt, mu, flow, ic);
  return (tr.u.col(nt - 1) - ref.at(T)).norm();
}

}  // namespace oracle
