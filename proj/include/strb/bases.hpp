#pragma once

#include "strb/fom.hpp"
#include "strb/pod.hpp"

#include <filesystem>

namespace strb {

struct PodTolerances {
  double u = 1e-3;
  double p = 1e-3;
  double lambda_s = 1e-5;
  double lambda_t = 1e-3;
};

struct StHosvdOptions {
  PodTolerances tol;
  bool randomized = false;
  std::uint64_t seed = 0;
  Index max_time_rank = -1;  // cap on every temporal basis, negative: none
  Index min_time_rank = 0;
  bool full_time = false;  // identity temporal bases (no temporal reduction)
};

/// Spatial and temporal bases of the three fields plus enrichment metadata.
/// Supremizers are the trailing columns of phi_u, stabilizers the trailing
/// columns of psi_u.
struct ReducedBasisSet {
  Mat phi_u, phi_p, phi_lambda;
  Mat psi_u, psi_p, psi_lambda;
  Index n_supremizers = 0;
  Index n_stabilizers = 0;
  PodTolerances tol;
  bool lifted = false;
  std::vector<PodSpectrum> spectra;  // u_s, u_t, p_s, p_t, lambda_s, lambda_t

  Index n_u_s() const { return phi_u.cols(); }
  Index n_p_s() const { return phi_p.cols(); }
  Index n_lambda_s() const { return phi_lambda.cols(); }
  Index n_u_t() const { return psi_u.cols(); }
  Index n_p_t() const { return psi_p.cols(); }
  Index n_lambda_t() const { return psi_lambda.cols(); }
  Index n_st() const {
    return n_u_s() * n_u_t() + n_p_s() * n_p_t() + n_lambda_s() * n_lambda_t();
  }
};

/// Subtracts the initial data from every snapshot column, as required when
/// the reduced solution is lifted by the initial state.
SnapshotSet subtract_initial_data(const SnapshotSet& set);

/// Spatial POD on the N x (N_t M) unfolding in the field norm, then
/// Euclidean temporal POD of the projected coefficients. Velocity and
/// pressure split their tolerance so that the total projection error
/// stays below it.
ReducedBasisSet st_hosvd(const SnapshotSet& set, const FomOperators& ops, const StHosvdOptions& opts);

/// Appends X_u^{-1} B^T phi_p and X_u^{-1} L^T eta and re-orthonormalizes.
/// Returns the number of columns kept.
Index enrich_supremizers(Mat& phi_u, const Mat& phi_p, const Mat& phi_lambda, const SpMat& B,
                         const SpMat& L, const SpMat& Xu);

/// Appends the pressure and multiplier temporal modes to psi_u.
Index enrich_time_stabilizers(Mat& psi_u, const Mat& psi_p, const Mat& psi_lambda);

void store_bases(const std::filesystem::path& dir, const ReducedBasisSet& b);
ReducedBasisSet load_bases(const std::filesystem::path& dir);

}  // namespace strb
