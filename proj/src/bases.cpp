#include "strb/bases.hpp"

#include "strb/io.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace strb {

SnapshotSet subtract_initial_data(const SnapshotSet& set) {
  SnapshotSet out = set;
  for (auto& tr : out.trajectories) {
    if (!tr.initial.u.empty()) tr.u.colwise() -= tr.initial.u[0];
    if (tr.initial.p.size() == tr.p.rows()) tr.p.colwise() -= tr.initial.p;
    if (tr.initial.lambda.size() == tr.lambda.rows()) tr.lambda.colwise() -= tr.initial.lambda;
  }
  return out;
}

namespace {

struct FieldBases {
  PodResult space, time;
};

// tol_t < 0 requests the budget split: space gets tol / sqrt(2) and time
// whatever is left of tol^2 after the spatial truncation.
FieldBases field_bases(const std::vector<const Mat*>& snaps, const SpMat* X, double tol_s, double tol_t,
                       const StHosvdOptions& opts, std::uint64_t seed) {
  const Index N = snaps.front()->rows(), nt = snaps.front()->cols();
  Mat S(N, nt * static_cast<Index>(snaps.size()));
  for (size_t k = 0; k < snaps.size(); ++k) S.middleCols(static_cast<Index>(k) * nt, nt) = *snaps[k];

  const bool split = tol_t < 0.0;
  PodOptions po;
  po.tol = split ? tol_s / std::sqrt(2.0) : tol_s;
  po.randomized = opts.randomized;
  po.seed = seed;
  FieldBases fb;
  fb.space = weighted_truncated_pod(S, X, po);
  const Mat& phi = fb.space.basis;
  const Index ns = phi.cols();

  if (opts.full_time) {
    fb.time.basis = Mat::Identity(nt, nt);
    fb.time.spectrum.retained = nt;
    return fb;
  }
  if (ns == 0) {
    fb.time.basis = Mat::Zero(nt, 0);
    return fb;
  }
  const Mat XP = X ? Mat(*X * phi) : phi;
  Mat T(nt, ns * static_cast<Index>(snaps.size()));
  for (size_t k = 0; k < snaps.size(); ++k)
    T.middleCols(static_cast<Index>(k) * ns, ns) = (XP.transpose() * *snaps[k]).transpose();

  PodOptions pt;
  pt.randomized = opts.randomized;
  pt.seed = seed + 1;
  pt.max_rank = opts.max_time_rank;
  pt.min_rank = opts.min_time_rank;
  if (split) {
    const double total = S.squaredNorm();
    const double spatial_err = fb.space.spectrum.discarded_energy * total;
    const double coeff = T.squaredNorm();
    double t2 = coeff > 0.0 ? (tol_s * tol_s * total - spatial_err) / coeff : 0.0;
    t2 = std::clamp(t2, 1e-28, 0.98);
    pt.tol = std::sqrt(t2);
  } else {
    pt.tol = tol_t;
  }
  if (T.squaredNorm() == 0.0) {
    fb.time.basis = Mat::Zero(nt, 0);
    return fb;
  }
  fb.time = weighted_truncated_pod(T, nullptr, pt);
  return fb;
}

}  // namespace

ReducedBasisSet st_hosvd(const SnapshotSet& set, const FomOperators& ops, const StHosvdOptions& opts) {
  require_dims(set.size() >= 1, "st_hosvd needs at least one snapshot trajectory");
  std::vector<const Mat*> us, ps, ls;
  for (const auto& tr : set.trajectories) {
    us.push_back(&tr.u);
    ps.push_back(&tr.p);
    ls.push_back(&tr.lambda);
  }
  ReducedBasisSet b;
  b.tol = opts.tol;
  auto u = field_bases(us, &ops.Xu, opts.tol.u, -1.0, opts, opts.seed);
  auto p = field_bases(ps, &ops.Xp, opts.tol.p, -1.0, opts, opts.seed + 10);
  auto l = field_bases(ls, nullptr, opts.tol.lambda_s, opts.tol.lambda_t, opts, opts.seed + 20);
  b.phi_u = u.space.basis;
  b.psi_u = u.time.basis;
  b.phi_p = p.space.basis;
  b.psi_p = p.time.basis;
  b.phi_lambda = l.space.basis;
  b.psi_lambda = l.time.basis;
  b.spectra = {u.space.spectrum, u.time.spectrum, p.space.spectrum, p.time.spectrum, l.space.spectrum, l.time.spectrum};
  return b;
}

Index enrich_supremizers(Mat& phi_u, const Mat& phi_p, const Mat& phi_lambda, const SpMat& B, const SpMat& L,
                         const SpMat& Xu) {
  const Index n0 = phi_u.cols();
  Mat rhs(Xu.rows(), phi_p.cols() + phi_lambda.cols());
  if (phi_p.cols() > 0) rhs.leftCols(phi_p.cols()) = B.transpose() * phi_p;
  if (phi_lambda.cols() > 0) rhs.rightCols(phi_lambda.cols()) = L.transpose() * phi_lambda;
  if (rhs.cols() == 0) return 0;
  Eigen::SimplicialLDLT<SpMat> ldlt(Xu);
  if (ldlt.info() != Eigen::Success) throw NumericalError("supremizers: factorization of X_u failed");
  const Mat sup = ldlt.solve(rhs);
  Mat all(phi_u.rows(), n0 + sup.cols());
  all << phi_u, sup;
  phi_u = gram_schmidt(all, &Xu, 1e-10, n0);
  return phi_u.cols() - n0;
}

Index enrich_time_stabilizers(Mat& psi_u, const Mat& psi_p, const Mat& psi_lambda) {
  const Index n0 = psi_u.cols();
  Mat all(psi_u.rows(), n0 + psi_p.cols() + psi_lambda.cols());
  all << psi_u, psi_p, psi_lambda;
  psi_u = gram_schmidt(all, nullptr, 1e-10, n0);
  return psi_u.cols() - n0;
}

void store_bases(const std::filesystem::path& dir, const ReducedBasisSet& b) {
  io::ensure_directory(dir);
  io::write_dense(dir / "phi_u.bin", b.phi_u);
  io::write_dense(dir / "phi_p.bin", b.phi_p);
  io::write_dense(dir / "phi_lambda.bin", b.phi_lambda);
  io::write_dense(dir / "psi_u.bin", b.psi_u);
  io::write_dense(dir / "psi_p.bin", b.psi_p);
  io::write_dense(dir / "psi_lambda.bin", b.psi_lambda);
  io::KeyValues kv;
  kv["format"] = "strb-bases 1";
  kv["phi_u.norm"] = "X_u";
  kv["phi_p.norm"] = "X_p";
  kv["phi_lambda.norm"] = "euclidean";
  kv["n_supremizers"] = std::to_string(b.n_supremizers);
  kv["n_stabilizers"] = std::to_string(b.n_stabilizers);
  kv["eps_u"] = io::format_double(b.tol.u);
  kv["eps_p"] = io::format_double(b.tol.p);
  kv["eps_lambda_s"] = io::format_double(b.tol.lambda_s);
  kv["eps_lambda_t"] = io::format_double(b.tol.lambda_t);
  kv["lifted"] = b.lifted ? "1" : "0";
  const char* names[] = {"u_s", "u_t", "p_s", "p_t", "lambda_s", "lambda_t"};
  for (size_t k = 0; k < b.spectra.size() && k < 6; ++k) {
    kv[std::string("retained.") + names[k]] = std::to_string(b.spectra[k].retained);
    kv[std::string("discarded.") + names[k]] = io::format_double(b.spectra[k].discarded_energy);
  }
  io::write_key_values(dir / "bases.txt", kv);
}

ReducedBasisSet load_bases(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("basis directory not found: " + dir.string());
  const auto kv = io::read_key_values(dir / "bases.txt");
  ReducedBasisSet b;
  b.phi_u = io::read_dense(dir / "phi_u.bin");
  b.phi_p = io::read_dense(dir / "phi_p.bin");
  b.phi_lambda = io::read_dense(dir / "phi_lambda.bin");
  b.psi_u = io::read_dense(dir / "psi_u.bin");
  b.psi_p = io::read_dense(dir / "psi_p.bin");
  b.psi_lambda = io::read_dense(dir / "psi_lambda.bin");
  b.n_supremizers = io::parse_index(kv, "n_supremizers");
  b.n_stabilizers = io::parse_index(kv, "n_stabilizers");
  b.tol.u = io::parse_double(kv, "eps_u");
  b.tol.p = io::parse_double(kv, "eps_p");
  b.tol.lambda_s = io::parse_double(kv, "eps_lambda_s");
  b.tol.lambda_t = io::parse_double(kv, "eps_lambda_t");
  b.lifted = io::parse_index(kv, "lifted") != 0;
  if (b.psi_p.rows() != b.psi_u.rows() || b.psi_lambda.rows() != b.psi_u.rows())
    throw ShapeMismatchError(dir.string() + ": temporal bases disagree on N_t");
  return b;
}

}  // namespace strb
