#include "strb/assembly.hpp"

namespace strb {

LiftOperators build_lift_operators(const FomOperators& ops, const ReducedBasisSet& b) {
  LiftOperators lo;
  const Mat phit = b.phi_u.transpose();
  lo.M = phit * ops.M;
  lo.Ms = phit * ops.Ms;
  lo.AR = phit * SpMat(ops.A + ops.resistance_matrix());
  lo.As1 = phit * ops.As1;
  lo.As2 = phit * ops.As2;
  lo.Bt = Mat(ops.B * b.phi_u).transpose();
  lo.Lt = Mat(ops.L * b.phi_u).transpose();
  lo.B = b.phi_p.transpose() * ops.B;
  lo.L = b.phi_lambda.transpose() * ops.L;
  lo.Xu_phi = ops.Xu * b.phi_u;
  return lo;
}

LiftingTerms assemble_lifting(const LiftOperators& lo, const TemporalGramSet& g, const ReducedSizes& sz,
                              const InitialState& ic, const MembraneCoefficients& mt, double c_s,
                              const BdfScheme& scheme, double dt) {
  const int S = scheme.order;
  if (static_cast<int>(ic.u.size()) < S || static_cast<int>(ic.d.size()) < S)
    throw ConfigError("lifting needs " + std::to_string(S) + " prior velocity and displacement states");
  const Index nu = lo.M.cols();
  require_dims(ic.u[0].size() == nu, "initial velocity length");
  const double bdt = scheme.beta * dt;
  const Vec& u0 = ic.u[0];
  const Vec p0 = ic.p.size() > 0 ? ic.p : Vec::Zero(lo.Bt.cols());
  const Vec l0 = ic.lambda.size() > 0 ? ic.lambda : Vec::Zero(lo.Lt.cols());
  const Index nus = sz.u.n_s, nut = sz.u.n_t;

  auto mass = [&](const Vec& v) -> Vec { return lo.M * v + mt[0] * (lo.Ms * v); };
  auto membrane = [&](const Vec& v) -> Vec {
    return mt[1] * (lo.As1 * v) + mt[2] * (lo.As2 * v) + c_s * (lo.Ms * v);
  };

  // initial states entering the first S steps through the multistep history
  Mat F0 = Mat::Zero(nus, nut);
  Mat F0L = Mat::Zero(nus, nut);
  const Vec mu0 = mass(u0);
  for (int n = 1; n <= S && n <= g.lead_u.rows(); ++n) {
    Vec hist = Vec::Zero(nus);
    double weight = 0.0;
    for (int s = n; s <= S; ++s) {
      const double a = scheme.alpha[static_cast<size_t>(s - 1)];
      hist += a * mass(ic.u[static_cast<size_t>(s - n)]);
      weight += a;
    }
    F0 += hist * g.lead_u.row(n - 1);
    F0L -= (weight * mu0) * g.lead_u.row(n - 1);
  }

  const Vec steady = lo.AR * u0 + lo.Bt * p0 + lo.Lt * l0;
  F0L -= bdt * steady * g.ones_u.transpose();
  for (int s = 1; s <= S; ++s) F0L -= bdt * membrane(ic.d[static_cast<size_t>(s - 1)]) * g.hom_u.col(s - 1).transpose();
  F0L -= bdt * membrane(u0) * g.ramp_u.transpose();

  LiftingTerms t;
  t.f0 = Vec::Zero(sz.total());
  t.f0L = Vec::Zero(sz.total());
  t.f0.head(sz.n_u()) = fold(F0);
  t.f0L.head(sz.n_u()) = fold(F0L);
  t.f0L.segment(sz.n_u(), sz.n_p()) = -bdt * fold(Mat((lo.B * u0) * g.ones_p.transpose()));
  t.f0L.tail(sz.n_lambda()) = -bdt * fold(Mat((lo.L * u0) * g.ones_lambda.transpose()));
  t.u0bar = lo.Xu_phi.transpose() * u0;
  return t;
}

}  // namespace strb
