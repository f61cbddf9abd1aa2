#include "strb/assembly.hpp"

#include "strb/temporal.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace strb {

ReducedSizes ReducedSizes::of(const ReducedBasisSet& b) {
  ReducedSizes s;
  s.u = {b.n_u_s(), b.n_u_t()};
  s.p = {b.n_p_s(), b.n_p_t()};
  s.lambda = {b.n_lambda_s(), b.n_lambda_t()};
  return s;
}

Mat unfold(const Eigen::Ref<const Vec>& v, Index n_s, Index n_t) {
  require_dims(v.size() == n_s * n_t, "unfold: coordinate vector length");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), n_s, n_t);
}

Vec fold(const Mat& m) {
  Vec v(m.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), m.rows(), m.cols()) = m;
  return v;
}

SpaceReducedOperators project_space_operators(const FomOperators& ops, const Mat& phi_u, const Mat& phi_p,
                                              const Mat& phi_lambda) {
  require_dims(phi_u.rows() == ops.n_u(), "velocity basis rows");
  require_dims(phi_p.rows() == ops.n_p(), "pressure basis rows");
  require_dims(phi_lambda.rows() == ops.n_lambda(), "multiplier basis rows");
  SpaceReducedOperators bar;
  auto sym = [&](const SpMat& op) { return Mat(phi_u.transpose() * (op * phi_u)); };
  bar.M = sym(ops.M);
  bar.A = sym(ops.A);
  bar.Ms = sym(ops.Ms);
  bar.As1 = sym(ops.As1);
  bar.As2 = sym(ops.As2);
  bar.R = Mat::Zero(phi_u.cols(), phi_u.cols());
  for (const auto& r : ops.resistance) {
    const Vec q = phi_u.transpose() * r.flux;
    bar.R += r.resistance * q * q.transpose();
  }
  bar.B = phi_p.transpose() * (ops.B * phi_u);
  bar.L = phi_lambda.transpose() * (ops.L * phi_u);
  bar.g = Mat::Zero(phi_lambda.cols(), static_cast<Index>(ops.g_space.size()));
  Index off = 0;
  for (size_t k = 0; k < ops.g_space.size(); ++k) {
    const Index n = ops.g_space[k].size();
    bar.g.col(static_cast<Index>(k)) = phi_lambda.middleRows(off, n).transpose() * ops.g_space[k];
    off += n;
  }
  return bar;
}

TemporalGramSet build_temporal_grams(const ReducedBasisSet& b, const BdfScheme& scheme, double dt, bool with_triple) {
  TemporalGramSet g;
  const Mat& psi = b.psi_u;
  const Index nt = psi.rows();
  for (int s = 0; s <= scheme.order; ++s) g.G.push_back(shifted_gram(psi, psi, s));
  g.up = psi.transpose() * b.psi_p;
  g.ul = psi.transpose() * b.psi_lambda;
  g.prim = psi.transpose() * primitive_columns(psi, scheme, dt);
  if (with_triple) g.psi3 = triple_product(psi);
  g.ones_u = psi.transpose() * Vec::Ones(nt);
  g.ones_p = b.psi_p.transpose() * Vec::Ones(nt);
  g.ones_lambda = b.psi_lambda.transpose() * Vec::Ones(nt);
  g.ramp_u = psi.transpose() * time_ramp(nt, scheme, dt);
  g.hom_u = psi.transpose() * homogeneous_responses(nt, scheme);
  g.lead_u = psi.topRows(std::min<Index>(scheme.order, nt));
  return g;
}

ReducedBlocks assemble_reduced_blocks(const SpaceReducedOperators& bar, const TemporalGramSet& g,
                                      const BdfScheme& scheme, double dt, double c_s) {
  using Eigen::kroneckerProduct;
  const double bdt = scheme.beta * dt;
  ReducedBlocks k;
  k.A1 = kroneckerProduct(Mat(bar.M + bdt * (bar.A + bar.R)), g.G[0]);
  k.Ms = kroneckerProduct(bar.Ms, g.G[0]);
  for (int s = 1; s <= scheme.order; ++s) {
    const double a = scheme.alpha[static_cast<size_t>(s - 1)];
    k.A1 -= a * Mat(kroneckerProduct(bar.M, g.G[static_cast<size_t>(s)]));
    k.Ms -= a * Mat(kroneckerProduct(bar.Ms, g.G[static_cast<size_t>(s)]));
  }
  k.As1 = bdt * Mat(kroneckerProduct(bar.As1, g.prim));
  k.As2 = bdt * Mat(kroneckerProduct(bar.As2, g.prim));
  k.Es = (bdt * c_s) * Mat(kroneckerProduct(bar.Ms, g.prim));
  k.A2 = bdt * Mat(kroneckerProduct(Mat(bar.B.transpose()), g.up));
  k.A3 = bdt * Mat(kroneckerProduct(Mat(bar.L.transpose()), g.ul));
  k.A4 = bdt * Mat(kroneckerProduct(bar.B, Mat(g.up.transpose())));
  k.A7 = bdt * Mat(kroneckerProduct(bar.L, Mat(g.ul.transpose())));
  return k;
}

Mat assemble_reduced_lhs(const ReducedBlocks& k, const ReducedSizes& sz, const MembraneCoefficients& mt) {
  const Index nu = sz.n_u(), np = sz.n_p(), nl = sz.n_lambda();
  Mat J = Mat::Zero(nu + np + nl, nu + np + nl);
  auto uu = J.topLeftCorner(nu, nu);
  uu = k.A1;
  if (mt[0] != 0.0) uu += mt[0] * k.Ms;
  if (mt[1] != 0.0) uu += mt[1] * k.As1;
  if (mt[2] != 0.0) uu += mt[2] * k.As2;
  uu += k.Es;
  J.block(0, nu, nu, np) = k.A2;
  J.block(0, nu + np, nu, nl) = k.A3;
  J.block(nu, 0, np, nu) = k.A4;
  J.block(nu + np, 0, nl, nu) = k.A7;
  return J;
}

Vec assemble_reduced_rhs(const Mat& g_bar, const Mat& psi_lambda, const Mat& flow_rates, double beta_dt) {
  require_dims(flow_rates.rows() == g_bar.cols(), "one flow-rate row per Dirichlet boundary");
  require_dims(flow_rates.cols() == psi_lambda.rows(), "flow rates sampled on the basis time grid");
  // row-major unfolding: F(i_s, i_t) = sum_k gbar(i_s, k) (psi^T q_k)(i_t)
  const Mat F = beta_dt * g_bar * (psi_lambda.transpose() * flow_rates.transpose()).transpose();
  return fold(F);
}

ReducedModel build_reduced_model(const FomOperators& ops, const ReducedBasisSet& bases, const BdfScheme& scheme,
                                 double dt, const ModelOptions& opts) {
  ReducedModel m;
  m.scheme = scheme;
  m.dt = dt;
  m.n_t = bases.psi_u.rows();
  m.n_boundaries = static_cast<Index>(ops.g_space.size());
  m.c_s = ops.c_s;
  m.lifted = opts.lifted;
  m.bases = bases;
  m.bases.lifted = opts.lifted;
  m.bar = project_space_operators(ops, bases.phi_u, bases.phi_p, bases.phi_lambda);
  const Index nus = bases.n_u_s();
  const Index pod_modes = opts.convective_with_supremizers ? nus : nus - bases.n_supremizers;
  const Index n_c = opts.n_c < 0 ? pod_modes : opts.n_c;
  const Index n_cJ = opts.n_cJ < 0 ? n_c : opts.n_cJ;
  if (n_c > nus || n_cJ > nus)
    throw ConfigError("convective ranks n_c = " + std::to_string(n_c) + ", n_cJ = " + std::to_string(n_cJ) +
                      " exceed n_u^s = " + std::to_string(nus));
  m.conv = assemble_convective_affine(ops.C, bases.phi_u, n_c, n_cJ);
  m.lift = build_lift_operators(ops, bases);
  m.grams = build_temporal_grams(bases, scheme, dt, n_c > 0);
  m.finalize();
  return m;
}

void ReducedModel::finalize() {
  blocks = assemble_reduced_blocks(bar, grams, scheme, dt, c_s);
}

}  // namespace strb
