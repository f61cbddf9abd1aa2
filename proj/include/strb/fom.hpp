#pragma once

#include "strb/core.hpp"

#include <array>
#include <functional>
#include <optional>

namespace strb {

/// Sparse third-order tensor c_{ijm}; contracting with u in the first two
/// slots gives the convective vector c(u)_m = sum_{ij} u_i u_j c_{ijm}.
struct ConvectiveTensor {
  struct Entry {
    Index i, j, m;
    double value;
  };
  Index n = 0;
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
  /// Replaces c_{ijm} by (c_{ijm} - c_{imj}) / 2 so that u^T c(u) = 0.
  void skew_symmetrize();
  double frobenius_norm() const;
};

Vec eval_convective(const Vec& u, const ConvectiveTensor& c);
/// J(u)_{mi} = sum_j u_j (c_{jim} + c_{ijm}).
SpMat eval_convective_jacobian(const Vec& u, const ConvectiveTensor& c);

struct ResistanceTerm {
  double resistance = 0.0;
  Vec flux;  // q_k, length n_u
};

/// Operator set of the monolithic full-order system.
struct FomOperators {
  SpMat M, A, B, L, Ms, As1, As2;
  SpMat Xu, Xp, Xd;
  std::vector<ResistanceTerm> resistance;
  ConvectiveTensor C;
  std::vector<Vec> g_space;  // spatial Dirichlet factors, one per boundary
  std::vector<Index> boundary_dofs;
  double c_s = 0.0;

  Index n_u() const { return M.rows(); }
  Index n_p() const { return B.rows(); }
  Index n_lambda() const { return L.rows(); }
  std::vector<Index> lambda_sizes() const;
  SpMat resistance_matrix() const;
  /// Stacked g vector at one instant: [g_1^s q_1(t), ..., g_K^s q_K(t)].
  Vec dirichlet_vector(const Eigen::Ref<const Vec>& flow_rates) const;
  /// Shape checks only; the numerical invariants live in synth / validate.
  void check_shapes() const;
};

struct MembraneCoefficients {
  std::array<double, 3> value{0.0, 0.0, 0.0};
  double operator[](int i) const { return value[static_cast<size_t>(i)]; }
};

struct ParameterSample {
  Vec mu_f;
  std::array<double, 4> mu_m{0.0, 0.0, 0.0, 0.0};  // h_s, rho_s, E, nu

  Vec stacked() const;
};

/// [h_s rho_s, h_s lambda_1(E, nu), 2 h_s lambda_2(E, nu)].
MembraneCoefficients derive_membrane_coefficients(const std::array<double, 4>& mu_m);

/// Parametrized flow-rate families for the Dirichlet boundaries.
struct FlowWaveform {
  enum class Kind { Zero, Sinusoidal, Constant };
  Kind kind = Kind::Sinusoidal;
  double period = 1.0;

  /// Flow rate imposed on boundary `k` at time `t`.
  double operator()(Index k, double t, const Vec& mu_f) const;
};

/// g_1(t) = 1 - cos(2 pi t / T) + mu_2 sin(2 pi mu_1 t / T); mu is 1-based in
/// the formula, 0-based in the vector.
double flow_waveform_tc1(double t, const Vec& mu_f, double period);
/// Outlet variant g_2 = mu_3 g_1.
double flow_waveform_tc1_outlet(double t, const Vec& mu_f, double period);

/// Samples g_k^t at t_n = t0 + n dt for n = 1..n_t; result is n_boundaries x n_t.
Mat sample_flow_rates(const FlowWaveform& w, const Vec& mu_f, Index n_boundaries, Index n_t,
                      double dt, double t0 = 0.0);

/// Prior states needed by a multistep start: velocity and displacement at
/// t_{1-s}, s = 1..S (index s-1), and the pressure/multiplier at t_0.
struct InitialState {
  std::vector<Vec> u;
  std::vector<Vec> d;
  Vec p;
  Vec lambda;

  static InitialState zero(Index n_u, Index n_p, Index n_lambda, int order);
  bool is_zero() const;
};

/// Full-order trajectory; column n-1 stores the state at t_n.
struct Trajectory {
  Mat u, p, lambda, d;
  InitialState initial;
  std::vector<int> newton_iterations;
  double wall_seconds = 0.0;

  Index n_t() const { return u.cols(); }
};

struct FomSolveOptions {
  double tol = 1e-10;       // relative to the first residual of each step
  double abs_tol = 1e-14;   // scaled by the step's data norm
  int max_iter = 20;
};

/// BDF-S time marching with a Newton solve per step and sparse LU.
Trajectory fom_solve_transient(const FomOperators& ops, const BdfScheme& scheme, double dt,
                               const ParameterSample& mu, const Mat& flow_rates,
                               const InitialState& initial, const FomSolveOptions& opts = {});

/// Per-step residual r(w_{n+1}) of the multistep system, for checks.
Vec fom_step_residual(const FomOperators& ops, const BdfScheme& scheme, double dt,
                      const MembraneCoefficients& mt, const Vec& g, const Vec& u, const Vec& p,
                      const Vec& lambda, const Vec& d, const std::vector<Vec>& u_prev);

/// Snapshot database: per-sample trajectories plus the parameters used.
struct SnapshotSet {
  std::vector<ParameterSample> parameters;
  std::vector<Trajectory> trajectories;

  Index size() const { return static_cast<Index>(trajectories.size()); }
};

}  // namespace strb
