#pragma once

#include "strb/bases.hpp"
#include "strb/fom.hpp"

namespace strb {

/// Space-time coordinate l = l_s n_t + l_t.
struct IndexMap {
  Index n_s = 0, n_t = 0;

  Index operator()(Index ls, Index lt) const { return ls * n_t + lt; }
  Index size() const { return n_s * n_t; }
  Index space(Index l) const { return l / n_t; }
  Index time(Index l) const { return l % n_t; }
};

struct ReducedSizes {
  IndexMap u, p, lambda;

  static ReducedSizes of(const ReducedBasisSet& b);
  Index n_u() const { return u.size(); }
  Index n_p() const { return p.size(); }
  Index n_lambda() const { return lambda.size(); }
  Index total() const { return n_u() + n_p() + n_lambda(); }
};

/// Row-major reshape between coordinate vectors and n_s x n_t matrices.
Mat unfold(const Eigen::Ref<const Vec>& v, Index n_s, Index n_t);
Vec fold(const Mat& m);

/// Space-reduced operators (the barred set).
struct SpaceReducedOperators {
  Mat M, A, R, Ms, As1, As2;  // n_u^s x n_u^s
  Mat B;                      // n_p^s x n_u^s
  Mat L;                      // n_lambda^s x n_u^s
  Mat g;                      // n_lambda^s x N_D, spatial Dirichlet factors
};
SpaceReducedOperators project_space_operators(const FomOperators& ops, const Mat& phi_u, const Mat& phi_p,
                                              const Mat& phi_lambda);

/// Temporal scalar products needed by the reduced blocks.
struct TemporalGramSet {
  std::vector<Mat> G;  // G[s]: shifted Gram of psi_u with itself, s = 0..S
  Mat up, ul;          // psi_u^T psi_p, psi_u^T psi_lambda
  Mat prim;            // psi_u^T P0(E psi_u)
  Mat psi3;            // triple product of psi_u, unfolded
  Vec ones_u, ones_p, ones_lambda;
  Vec ramp_u;   // psi_u^T t_t
  Mat hom_u;    // psi_u^T h_s, n_u^t x S
  Mat lead_u;   // first S rows of psi_u
};
TemporalGramSet build_temporal_grams(const ReducedBasisSet& b, const BdfScheme& scheme, double dt,
                                     bool with_triple = true);

/// Parameter-independent space-time blocks. The membrane blocks carry the
/// beta dt factor; Es includes c_s.
struct ReducedBlocks {
  Mat A1, A2, A3, A4, A7;
  Mat Ms, As1, As2, Es;
};
ReducedBlocks assemble_reduced_blocks(const SpaceReducedOperators& bar, const TemporalGramSet& grams,
                                      const BdfScheme& scheme, double dt, double c_s);

/// Dense reduced left-hand side for the given membrane coefficients.
Mat assemble_reduced_lhs(const ReducedBlocks& blocks, const ReducedSizes& sz, const MembraneCoefficients& mt);

/// Dirichlet right-hand side; flow_rates is N_D x N_t. Returns the
/// multiplier block (length n_lambda^st).
Vec assemble_reduced_rhs(const Mat& g_bar, const Mat& psi_lambda, const Mat& flow_rates, double beta_dt);

/// Truncated affine expansion of the projected convective term.
struct ConvectiveAffineSet {
  Index n_c = 0, n_cJ = 0, n_us = 0;
  Mat kbar;                // n_c^2 x n_u^s, row l' + n_c l''
  std::vector<Mat> Kbar;   // n_cJ matrices n_u^s x n_u^s
};
ConvectiveAffineSet assemble_convective_affine(const ConvectiveTensor& C, const Mat& phi_u, Index n_c, Index n_cJ);

/// Space-reduced convective vector sum k_{l'l''} u_{l'} u_{l''} and its Jacobian.
Vec eval_space_convective(const Vec& u, const ConvectiveAffineSet& set);
Mat eval_space_convective_jacobian(const Vec& u, const ConvectiveAffineSet& set);

/// Optional initial-state lifting of the convective term.
struct ConvectiveLift {
  Vec u0bar;      // projected initial velocity
  const Mat* G0 = nullptr;
  const Vec* ones = nullptr;
};

/// Reduced convective vector on the velocity block, as an n_u^s x n_u^t matrix.
Mat eval_reduced_convective(const Mat& U, const ConvectiveAffineSet& set, const Mat& psi3, double beta_dt,
                            const ConvectiveLift* lift = nullptr);
Mat eval_reduced_convective_jacobian(const Mat& U, const ConvectiveAffineSet& set, const Mat& psi3,
                                     double beta_dt, const ConvectiveLift* lift = nullptr);

/// Rows of the velocity, pressure and multiplier bases applied to full-order
/// operators, used to project initial states online.
struct LiftOperators {
  Mat M, Ms, AR, As1, As2;  // phi_u^T op, n_u^s x N_u
  Mat Bt, Lt;               // phi_u^T B^T, phi_u^T L^T
  Mat B, L;                 // phi_p^T B, phi_lambda^T L
  Mat Xu_phi;               // X_u phi_u, for the projected initial velocity
};
LiftOperators build_lift_operators(const FomOperators& ops, const ReducedBasisSet& b);

struct LiftingTerms {
  Vec f0;   // initial-condition contributions
  Vec f0L;  // minus the space-time operator applied to the lifting
  Vec u0bar;
};

/// Lifting contributions for the initial state `ic` (d_{1-s} and u_{1-s}
/// for s = 1..S, p_0, lambda_0).
LiftingTerms assemble_lifting(const LiftOperators& lo, const TemporalGramSet& grams, const ReducedSizes& sz,
                              const InitialState& ic, const MembraneCoefficients& mt, double c_s,
                              const BdfScheme& scheme, double dt);

struct ModelOptions {
  Index n_c = -1;   // negative: all POD velocity modes
  Index n_cJ = -1;  // negative: same as n_c
  bool lifted = false;
  bool convective_with_supremizers = false;
};

/// Everything the online stage needs. Blocks are derived data, rebuilt by
/// finalize() after loading.
struct ReducedModel {
  BdfScheme scheme;
  double dt = 0.0;
  Index n_t = 0;
  Index n_boundaries = 0;
  double c_s = 0.0;
  bool lifted = false;
  ReducedBasisSet bases;
  SpaceReducedOperators bar;
  TemporalGramSet grams;
  ConvectiveAffineSet conv;
  LiftOperators lift;
  ReducedBlocks blocks;

  ReducedSizes sizes() const { return ReducedSizes::of(bases); }
  double beta_dt() const { return scheme.beta * dt; }
  void finalize();
};

ReducedModel build_reduced_model(const FomOperators& ops, const ReducedBasisSet& bases, const BdfScheme& scheme,
                                 double dt, const ModelOptions& opts);

void store_reduced_model(const std::filesystem::path& dir, const ReducedModel& m);
ReducedModel load_reduced_model(const std::filesystem::path& dir);

}  // namespace strb
