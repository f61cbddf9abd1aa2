#pragma once

#include "strb/metrics.hpp"
#include "strb/solvers.hpp"
#include "strb/synth.hpp"

#include <optional>

namespace strb {

struct BasisOptions {
  StHosvdOptions hosvd;
  bool supremizers = true;
  bool stabilizers = true;
  bool lifted = false;
};

/// ST-HOSVD followed by the enrichment steps. With `lifted` the initial data
/// is removed from the snapshots first.
ReducedBasisSet build_bases(const FomOperators& ops, const SnapshotSet& snapshots, const BasisOptions& opts);

/// Reduced coordinates of every training trajectory, keyed by the stacked parameters.
WarmStartStore build_warm_start(const FomOperators& ops, const ReducedBasisSet& b, const SnapshotSet& snapshots,
                                const WarmStartConfig& cfg, bool lifted);

struct CampaignConfig {
  int order = 2;
  double dt = 1.0 / 200.0;
  Index n_t = 200;
  FlowWaveform waveform;
  Index M = 10;
  Index M_test = 3;
  ParameterBox box = ParameterBox::tc1();
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  std::vector<double> eps_grid{1e-3};
  double lambda_space_factor = 1e-2;  // eps_lambda^s = factor * eps
  std::optional<PodTolerances> field_tolerances;  // replaces the grid-derived set when present
  bool randomized_pod = false;
  std::uint64_t pod_seed = 7;
  Index max_time_rank = -1;
  Index min_time_rank = 0;
  bool full_time = false;
  bool supremizers = true;
  bool stabilizers = true;
  ModelOptions hyper;
  NewtonConfig newton;
  WarmStartConfig warm;
  bool run_st = true;
  bool run_srb = true;
  int timing_reps = 3;
  int jobs = 1;
  FomSolveOptions fom;

  void validate() const;
  PodTolerances tolerances(double eps) const;
  BasisOptions basis_options(double eps, bool lifted) const;
};

/// One row of the benchmark table.
struct MetricsRecord {
  std::string method;  // st-grb | srb-tfo | offline
  double eps_u = 0, eps_p = 0, eps_lambda_s = 0, eps_lambda_t = 0;
  Index n_c = 0, n_cJ = 0;
  Index n_u_s = 0, n_u_t = 0, n_p_s = 0, n_p_t = 0, n_lambda_s = 0, n_lambda_t = 0;
  Index n_supremizers = 0, n_stabilizers = 0;
  Index reduced_dim = 0, full_dim = 0;
  double RF = 0;
  double E_u = 0, E_p = 0, E_d = 0;
  double E_u_ratio = 0, E_p_ratio = 0;
  double avg_iterations = 0;
  Index converged = 0, tests = 0;
  std::string warm_start;
  // timings, seconds
  double offline_s = 0, online_s = 0, fom_s = 0, SU = 0;
};

/// FOM runs for the training and test parameters.
struct CampaignData {
  std::vector<ParameterSample> train, test;
  SnapshotSet snapshots;
  std::vector<Trajectory> references;
  double fom_seconds = 0.0;  // mean wall time of one test FOM run
};

CampaignData generate_campaign_data(const FomOperators& ops, const CampaignConfig& cfg);
Mat campaign_flow(const FomOperators& ops, const CampaignConfig& cfg, const ParameterSample& mu);

/// Offline stage for one tolerance.
struct OfflineProducts {
  ReducedModel model;
  WarmStartStore warm;
  double seconds = 0.0;
};
OfflineProducts run_offline(const FomOperators& ops, const SnapshotSet& snapshots, const CampaignConfig& cfg,
                            double eps, bool lifted = false);

/// Online solve of one test parameter, timed as the median of `reps` runs.
struct OnlineOutcome {
  Trajectory reconstruction;
  Vec w;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};
OnlineOutcome online_st(const StGrbSolver& solver, const WarmStartStore& warm, const ParameterSample& mu,
                        const Mat& flow, const NewtonConfig& cfg, int reps, const InitialState* ic = nullptr);
OnlineOutcome online_srb(const ReducedModel& model, const ParameterSample& mu, const Mat& flow,
                         const NewtonConfig& cfg, int reps);

/// Rows for one offline product set against the test references.
std::vector<MetricsRecord> evaluate_online(const FomOperators& ops, const CampaignConfig& cfg,
                                           const CampaignData& data, const OfflineProducts& off);

std::vector<MetricsRecord> run_campaign(const FomOperators& ops, const CampaignConfig& cfg);
std::vector<MetricsRecord> run_campaign(const FomOperators& ops, const CampaignConfig& cfg, const CampaignData& data);

struct WindowedResult {
  std::vector<MetricsRecord> cycles;  // per-cycle errors against the matching FOM window
  MetricsRecord windowed;             // concatenated over all cycles
  MetricsRecord single;               // one ST-GRB window over the whole horizon
  bool handoff_bitwise = true;
};

/// cfg.n_t is the window length; the inflow of the first window is repeated
/// every cycle.
WindowedResult run_windowed(const FomOperators& ops, const CampaignConfig& cfg, Index cycles);

/// Runs f(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(Index n, int jobs, const std::function<void(Index)>& f);

}  // namespace strb
