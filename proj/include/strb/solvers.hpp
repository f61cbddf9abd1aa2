#pragma once

#include "strb/assembly.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace strb {

enum class JacobianMode { Full, Quasi };

struct NewtonConfig {
  double tau = 1e-5;
  int max_iter = 10;
  JacobianMode mode = JacobianMode::Full;

  void validate() const;
};

// ---------------------------------------------------------------- warm starts

enum class WarmStartKind { Zero, Average, Knn, Podi };
enum class NniWeighting { Paper, Inverse };

struct WarmStartConfig {
  WarmStartKind kind = WarmStartKind::Zero;
  Index k = 3;
  NniWeighting weighting = NniWeighting::Paper;
};

WarmStartKind parse_warm_start_kind(const std::string& s);
std::string to_string(WarmStartKind k);
NniWeighting parse_nni_weighting(const std::string& s);
std::string to_string(NniWeighting w);

/// Training parameters and reduced coordinates, plus the thin-plate spline
/// interpolant. Parameters are rescaled to the unit box of the training set
/// before any distance is taken.
class WarmStartStore {
 public:
  WarmStartStore() = default;
  WarmStartStore(std::vector<Vec> parameters, std::vector<Vec> coordinates, WarmStartConfig cfg);

  Vec operator()(const Vec& mu) const;
  Index size() const { return static_cast<Index>(params_.size()); }
  Index dimension() const { return dim_; }
  const WarmStartConfig& config() const { return cfg_; }
  void set_config(const WarmStartConfig& cfg);
  const std::vector<Vec>& parameters() const { return params_; }
  const std::vector<Vec>& coordinates() const { return coords_; }

  void store(const std::filesystem::path& dir) const;
  static WarmStartStore load(const std::filesystem::path& dir);

 private:
  Vec normalized(const Vec& mu) const;
  void build_podi();

  std::vector<Vec> params_, coords_;
  WarmStartConfig cfg_;
  Index dim_ = 0;
  Vec lo_, scale_;
  std::vector<Index> nodes_;  // deduplicated interpolation nodes
  Mat theta_;                 // RBF coefficients, one row per node
};

/// zeta(r) = r^2 ln r, zeta(0) = 0.
double thin_plate(double r);

// --------------------------------------------------------------------- ST-GRB

/// Parameter-dependent pieces of one space-time solve.
struct StProblem {
  MembraneCoefficients mt;
  Mat lhs;
  Vec rhs;  // Dirichlet data plus lifting
  std::optional<ConvectiveLift> lift;
};

StProblem make_st_problem(const ReducedModel& m, const ParameterSample& mu, const Mat& flow_rates,
                          const InitialState* ic = nullptr);
Vec st_residual(const ReducedModel& m, const StProblem& pb, const Vec& w);
Mat st_jacobian(const ReducedModel& m, const StProblem& pb, const Vec& w);

struct StSolution {
  Vec w;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<double> residuals;
  double condition = 0.0;  // 1 / rcond of the last factorization
  bool ill_conditioned = false;
};

/// Space-time Galerkin solver. Factorizations of the constant left-hand side
/// are cached per membrane coefficient triple; the cache is shared by
/// concurrent solves.
class StGrbSolver {
 public:
  explicit StGrbSolver(const ReducedModel& m) : m_(m) {}

  StSolution solve(const ParameterSample& mu, const Mat& flow_rates, const NewtonConfig& cfg,
                   const Vec* w0 = nullptr, const InitialState* ic = nullptr) const;
  StSolution solve(const StProblem& pb, const NewtonConfig& cfg, const Vec* w0 = nullptr) const;
  void clear_cache() const;
  const ReducedModel& model() const { return m_; }

 private:
  using Lu = Eigen::PartialPivLU<Mat>;
  std::shared_ptr<const Lu> cached_lhs(const StProblem& pb) const;

  const ReducedModel& m_;
  mutable std::mutex mutex_;
  mutable std::map<std::array<double, 3>, std::shared_ptr<const Lu>> cache_;
};

// -------------------------------------------------------------------- SRB-TFO

/// Time-marched solution in spatial reduced coordinates (n^s x N_t blocks).
struct SrbSolution {
  Mat u, p, lambda;
  std::vector<int> iterations;
  bool converged = true;
  double wall_seconds = 0.0;

  int total_iterations() const;
};

class SrbTfoSolver {
 public:
  explicit SrbTfoSolver(const ReducedModel& m) : m_(m) {}

  SrbSolution solve(const ParameterSample& mu, const Mat& flow_rates, const NewtonConfig& cfg,
                    const InitialState* ic = nullptr) const;

 private:
  const ReducedModel& m_;
};

// ------------------------------------------------------------- reconstruction

/// Space-time coordinates of a full-order trajectory (with the initial data
/// removed when `lifted`).
Vec project_trajectory(const FomOperators& ops, const ReducedBasisSet& b, const Trajectory& tr, bool lifted);

/// Full-order fields from space-time coordinates. The displacement follows
/// from the kinematic recursion started at the initial displacement history.
/// With `probes`, only those velocity/displacement rows are produced.
Trajectory reconstruct_st(const ReducedModel& m, const Vec& w, const InitialState* ic = nullptr,
                          const std::vector<Index>* probes = nullptr);
Trajectory reconstruct_srb(const ReducedModel& m, const SrbSolution& s, const InitialState* ic = nullptr,
                           const std::vector<Index>* probes = nullptr);

/// d_n = beta dt u_n + sum_s alpha_s d_{n-s}, with d_{1-s} = d_hist[s-1].
Mat kinematic_displacement(const Mat& u, const std::vector<Vec>& d_hist, const BdfScheme& scheme, double dt);

/// Initial state of the next window: last S velocities and displacements,
/// final pressure and multiplier.
InitialState handoff_state(const Trajectory& tr, int order);

}  // namespace strb
