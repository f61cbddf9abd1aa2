#include "strb/pipeline.hpp"
#include "strb/io.hpp"
#include "strb/report.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <random>
#include <sstream>

namespace strb {

namespace fs = std::filesystem;

namespace {

std::string indexed(const char* stem, size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu", stem, k);
  return buf;
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw MissingInputError("missing " + what + " (" + p.string() + ")");
}

FomOperators stored_operators(const Workspace& ws) {
  require_dir(ws.operators(), "operators; run generate first");
  return io::load_operators(ws.operators());
}

SnapshotSet stored_snapshots(const fs::path& dir, const std::string& what) {
  require_dir(dir, what + "; run fom first");
  return io::load_snapshots(dir);
}

FomOperators configured_operators(const PipelineConfig& cfg) {
  if (cfg.source == OperatorSource::Ingest) return io::load_operators(cfg.ingest_path);
  return synth_generate(cfg.synth);
}

std::vector<ParameterSample> test_parameters(const CampaignConfig& c) {
  return sample_parameters(c.box, c.M_test, c.test_seed);
}

// the pieces an online stage needs for one tolerance
struct StoredOffline {
  ReducedModel model;
  WarmStartStore warm;
  double seconds = 0.0;
};

StoredOffline stored_offline(const Workspace& ws, size_t k, const WarmStartConfig& warm) {
  const fs::path dir = ws.offline(k);
  if (!fs::exists(dir / "model" / "manifest.txt"))
    throw MissingInputError("missing reduced model (" + (dir / "model").string() + "); run offline first");
  StoredOffline s;
  s.model = load_reduced_model(dir / "model");
  s.warm = WarmStartStore::load(dir / "warmstart");
  s.warm.set_config(warm);
  const auto kv = io::read_key_values(dir / "offline.txt");
  s.seconds = io::parse_double(kv, "seconds");
  return s;
}

void write_solution(const fs::path& dir, const Trajectory& rec, const io::KeyValues& meta) {
  io::ensure_directory(dir);
  io::write_dense(dir / "u.bin", rec.u);
  io::write_dense(dir / "p.bin", rec.p);
  io::write_dense(dir / "lambda.bin", rec.lambda);
  io::write_dense(dir / "d.bin", rec.d);
  io::write_key_values(dir / "solution.txt", meta);
}

double symmetry_defect(const SpMat& a) {
  const double n = a.norm();
  return n > 0 ? (SpMat(a) - SpMat(a.transpose())).norm() / n : 0.0;
}

bool positive_definite(const SpMat& a) {
  Eigen::SimplicialLLT<SpMat> llt(a);
  return llt.info() == Eigen::Success;
}

// smallest eigenvalue relative to the largest, on the rows/cols that carry entries
double psd_margin(const SpMat& a) {
  const Mat d(a);
  const double n = d.cwiseAbs().maxCoeff();
  if (n == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (d + d.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() / n;
}

bool supported_on(const SpMat& a, const std::vector<Index>& dofs, Index n) {
  std::vector<char> on(static_cast<size_t>(n), 0);
  for (Index i : dofs) on[static_cast<size_t>(i)] = 1;
  for (Index k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      if (it.value() != 0.0 && (!on[static_cast<size_t>(it.row())] || !on[static_cast<size_t>(it.col())])) return false;
  return true;
}

CheckResult check(const std::string& name, bool ok, const std::string& detail = "") { return {name, ok, detail}; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void check_trajectory(const FomOperators& ops, const CampaignConfig& c, const ParameterSample& mu,
                      const Trajectory& tr, double& worst_res, double& worst_kin) {
  const auto sc = BdfScheme::of_order(c.order);
  const auto mt = derive_membrane_coefficients(mu.mu_m);
  const Mat flow = campaign_flow(ops, c, mu);
  const double bdt = sc.beta * c.dt;
  auto u_at = [&](Index n) -> Vec { return n >= 1 ? Vec(tr.u.col(n - 1)) : tr.initial.u[static_cast<size_t>(-n)]; };
  auto d_at = [&](Index n) -> Vec { return n >= 1 ? Vec(tr.d.col(n - 1)) : tr.initial.d[static_cast<size_t>(-n)]; };
  const Vec zp = Vec::Zero(ops.n_p()), zl = Vec::Zero(ops.n_lambda()), zu = Vec::Zero(ops.n_u());
  for (Index n = 1; n <= tr.n_t(); ++n) {
    std::vector<Vec> prev;
    Vec dh = Vec::Zero(ops.n_u());
    for (int s = 1; s <= sc.order; ++s) {
      prev.push_back(u_at(n - s));
      dh += sc.alpha[static_cast<size_t>(s - 1)] * d_at(n - s);
    }
    const Vec g = ops.dirichlet_vector(flow.col(n - 1));
    const Vec r = fom_step_residual(ops, sc, c.dt, mt, g, tr.u.col(n - 1), tr.p.col(n - 1), tr.lambda.col(n - 1),
                                    tr.d.col(n - 1), prev);
    const Vec r0 = fom_step_residual(ops, sc, c.dt, mt, g, zu, zp, zl, dh, prev);
    worst_res = std::max(worst_res, r.norm() / std::max(r0.norm(), 1e-300));
    const Vec kin = tr.d.col(n - 1) - bdt * tr.u.col(n - 1) - dh;
    const double scale = std::max(tr.d.col(n - 1).norm(), 1e-300);
    worst_kin = std::max(worst_kin, kin.norm() / scale);
  }
}

double orthonormality_defect(const Mat& v, const SpMat* X) {
  if (v.cols() == 0) return 0.0;
  const Mat g = X ? Mat(v.transpose() * (*X) * v) : Mat(v.transpose() * v);
  return (g - Mat::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

fs::path Workspace::offline(size_t k) const { return root / "offline" / indexed("eps", k); }
fs::path Workspace::online(size_t k) const { return root / "online" / indexed("eps", k); }

void cmd_generate(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  FomOperators ops = configured_operators(cfg);
  if (cfg.source == OperatorSource::Synth)
    ctx.log("synthetic operators: n_u=" + std::to_string(ops.n_u()) + " n_p=" + std::to_string(ops.n_p()) +
            " n_lambda=" + std::to_string(ops.n_lambda()));
  else
    ctx.log("ingested operators from " + cfg.ingest_path.string());
  io::store_operators(ctx.ws.operators(), ops);
}

void cmd_fom(const StageContext& ctx) {
  const FomOperators ops = stored_operators(ctx.ws);
  ctx.log("running " + std::to_string(ctx.cfg.campaign.M) + " training and " +
          std::to_string(ctx.cfg.campaign.M_test) + " test FOM solves");
  const CampaignData data = generate_campaign_data(ops, ctx.cfg.campaign);
  io::store_snapshots(ctx.ws.train(), data.snapshots);
  SnapshotSet test;
  test.parameters = data.test;
  test.trajectories = data.references;
  io::store_snapshots(ctx.ws.test(), test);
}

void cmd_offline(const StageContext& ctx) {
  const auto& c = ctx.cfg.campaign;
  const FomOperators ops = stored_operators(ctx.ws);
  const SnapshotSet train = stored_snapshots(ctx.ws.train(), "training snapshots");
  if (train.size() == 0) throw MissingInputError("training snapshot set is empty");
  for (size_t k = 0; k < c.eps_grid.size(); ++k) {
    const OfflineProducts off = run_offline(ops, train, c, c.eps_grid[k]);
    const fs::path dir = ctx.ws.offline(k);
    store_reduced_model(dir / "model", off.model);
    off.warm.store(dir / "warmstart");
    const auto& b = off.model.bases;
    io::KeyValues kv;
    kv["eps"] = io::format_double(c.eps_grid[k]);
    kv["n_u"] = std::to_string(b.n_u_s()) + " x " + std::to_string(b.n_u_t());
    kv["n_p"] = std::to_string(b.n_p_s()) + " x " + std::to_string(b.n_p_t());
    kv["n_lambda"] = std::to_string(b.n_lambda_s()) + " x " + std::to_string(b.n_lambda_t());
    kv["n_c"] = std::to_string(off.model.conv.n_c);
    kv["n_cJ"] = std::to_string(off.model.conv.n_cJ);
    kv["seconds"] = io::format_double(ctx.cfg.timing ? off.seconds : 0.0);
    io::write_key_values(dir / "offline.txt", kv);
    ctx.log("offline eps=" + sci(c.eps_grid[k]) + ": n^st=" + std::to_string(b.n_st()) + " (" + kv["n_u"] + ", " +
            kv["n_p"] + ", " + kv["n_lambda"] + ")");
  }
}

bool cmd_online(const StageContext& ctx) {
  const auto& c = ctx.cfg.campaign;
  // check every stage input before doing any work
  std::vector<StoredOffline> products;
  for (size_t k = 0; k < c.eps_grid.size(); ++k) products.push_back(stored_offline(ctx.ws, k, c.warm));
  const FomOperators ops = stored_operators(ctx.ws);
  const auto test = test_parameters(c);
  bool all_converged = true;
  for (size_t k = 0; k < products.size(); ++k) {
    const auto& off = products[k];
    const fs::path dir = ctx.ws.online(k);
    for (size_t j = 0; j < test.size(); ++j) {
      const auto& mu = test[j];
      const Mat flow = campaign_flow(ops, c, mu);
      if (c.run_st) {
        const StGrbSolver solver(off.model);
        const OnlineOutcome o = online_st(solver, off.warm, mu, flow, c.newton, 1);
        const Vec st = mu.stacked();
        io::KeyValues meta{{"method", "st-grb"},
                           {"iterations", std::to_string(o.iterations)},
                           {"converged", o.converged ? "true" : "false"},
                           {"parameters", io::format_list(std::vector<double>(st.data(), st.data() + st.size()))}};
        if (ctx.cfg.timing) meta["seconds"] = io::format_double(o.seconds);
        write_solution(dir / "st-grb" / indexed("test", j), o.reconstruction, meta);
        io::write_dense(dir / "st-grb" / indexed("test", j) / "coordinates.bin", o.w);
        all_converged = all_converged && o.converged;
        ctx.log("st-grb test " + std::to_string(j) + ": " + std::to_string(o.iterations) + " iterations" +
                (o.converged ? "" : " (not converged)"));
      }
      if (c.run_srb) {
        const OnlineOutcome o = online_srb(off.model, mu, flow, c.newton, 1);
        io::KeyValues meta{{"method", "srb-tfo"},
                           {"iterations", std::to_string(o.iterations)},
                           {"converged", o.converged ? "true" : "false"}};
        if (ctx.cfg.timing) meta["seconds"] = io::format_double(o.seconds);
        write_solution(dir / "srb-tfo" / indexed("test", j), o.reconstruction, meta);
        all_converged = all_converged && o.converged;
        ctx.log("srb-tfo test " + std::to_string(j) + ": " + std::to_string(o.iterations) + " iterations" +
                (o.converged ? "" : " (not converged)"));
      }
    }
  }
  return all_converged;
}

void cmd_bench(const StageContext& ctx) {
  const auto& c = ctx.cfg.campaign;
  std::vector<StoredOffline> products;
  for (size_t k = 0; k < c.eps_grid.size(); ++k) products.push_back(stored_offline(ctx.ws, k, c.warm));
  const FomOperators ops = stored_operators(ctx.ws);
  CampaignData data;
  data.snapshots = stored_snapshots(ctx.ws.train(), "training snapshots");
  data.train = data.snapshots.parameters;
  const SnapshotSet test = stored_snapshots(ctx.ws.test(), "test snapshots");
  data.test = test.parameters;
  data.references = test.trajectories;
  for (const auto& r : data.references) data.fom_seconds += r.wall_seconds;
  if (!data.references.empty()) data.fom_seconds /= static_cast<double>(data.references.size());

  std::vector<MetricsRecord> rows;
  for (auto& p : products) {
    OfflineProducts off{std::move(p.model), std::move(p.warm), p.seconds};
    for (auto& r : evaluate_online(ops, c, data, off)) rows.push_back(std::move(r));
  }
  if (ctx.cfg.lifting) {
    CampaignConfig wc = c;
    if (ctx.cfg.window > 0) wc.n_t = ctx.cfg.window;
    ctx.log("windowed run: " + std::to_string(ctx.cfg.cycles) + " cycles of " + std::to_string(wc.n_t) + " steps");
    const WindowedResult w = run_windowed(ops, wc, ctx.cfg.cycles);
    for (const auto& r : w.cycles) rows.push_back(r);
    rows.push_back(w.windowed);
    rows.push_back(w.single);
    if (!w.handoff_bitwise) throw NumericalError("windowed handoff lost bits between cycles");
  }
  ReportOptions ro;
  ro.timing = ctx.cfg.timing;
  ro.config_echo = ctx.cfg.echo;
  emit_report(rows, ctx.ws.bench() / "bench.csv", ro);
  ctx.log(summary_text(rows, ro));
}

std::vector<CheckResult> check_operators(const FomOperators& ops) {
  std::vector<CheckResult> out;
  try {
    ops.check_shapes();
    out.push_back(check("operator shapes", true));
  } catch (const Error& e) {
    out.push_back(check("operator shapes", false, e.what()));
    return out;
  }
  const Index nu = ops.n_u();
  for (auto [name, m] : {std::pair<const char*, const SpMat*>{"M", &ops.M}, {"Ms", &ops.Ms}, {"Xu", &ops.Xu},
                         {"Xp", &ops.Xp}, {"Xd", &ops.Xd}}) {
    const double s = symmetry_defect(*m);
    out.push_back(check(std::string(name) + " symmetric", s <= 1e-12, sci(s)));
  }
  for (auto [name, m] : {std::pair<const char*, const SpMat*>{"M", &ops.M}, {"Xu", &ops.Xu}, {"Xp", &ops.Xp}})
    out.push_back(check(std::string(name) + " positive definite", positive_definite(*m)));
  for (auto [name, m] : {std::pair<const char*, const SpMat*>{"Ms", &ops.Ms}, {"As1", &ops.As1}, {"As2", &ops.As2}}) {
    out.push_back(check(std::string(name) + " on boundary DOFs", supported_on(*m, ops.boundary_dofs, nu)));
    // restrict to the boundary block before the dense eigen solve
    const Index nb = static_cast<Index>(ops.boundary_dofs.size());
    SpMat sel(nu, nb);
    for (Index k = 0; k < nb; ++k) sel.insert(ops.boundary_dofs[static_cast<size_t>(k)], k) = 1.0;
    const double margin = psd_margin(SpMat(sel.transpose() * (*m) * sel));
    out.push_back(check(std::string(name) + " positive semidefinite", margin >= -1e-12, sci(margin)));
  }
  bool resist = true;
  for (const auto& r : ops.resistance) resist = resist && r.resistance >= 0.0 && r.flux.size() == nu;
  out.push_back(check("resistance terms nonnegative", resist));
  out.push_back(check("surrounding tissue coefficient nonnegative", ops.c_s >= 0.0));
  const double smin = constraint_min_singular_value(ops);
  out.push_back(check("[B; L] full row rank", smin > 1e-10, "sigma_min " + sci(smin)));
  std::mt19937_64 g(1234);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Vec u(nu);
    for (Index i = 0; i < nu; ++i) u[i] = nd(g);
    const Vec c = eval_convective(u, ops.C);
    worst = std::max(worst, std::abs(u.dot(c)) / std::max(u.squaredNorm() * u.norm() * ops.C.frobenius_norm(), 1e-300));
  }
  out.push_back(check("convection energy neutral", worst <= 1e-12, sci(worst)));
  return out;
}

std::vector<CheckResult> cmd_validate(const StageContext& ctx) {
  const auto& c = ctx.cfg.campaign;
  const bool stored = fs::is_directory(ctx.ws.operators());
  const FomOperators ops = stored ? io::load_operators(ctx.ws.operators()) : configured_operators(ctx.cfg);
  ctx.log(stored ? "checking stored operators" : "checking operators of the configured source");
  std::vector<CheckResult> out = check_operators(ops);

  for (const auto& [dir, label] : {std::pair{ctx.ws.train(), "training"}, std::pair{ctx.ws.test(), "test"}}) {
    if (!fs::is_directory(dir)) continue;
    const SnapshotSet set = io::load_snapshots(dir);
    double res = 0.0, kin = 0.0;
    for (Index k = 0; k < set.size(); ++k)
      check_trajectory(ops, c, set.parameters[static_cast<size_t>(k)], set.trajectories[static_cast<size_t>(k)], res,
                       kin);
    out.push_back(check(std::string(label) + " snapshots satisfy the step residual", res <= 1e-7, sci(res)));
    out.push_back(check(std::string(label) + " snapshots satisfy the kinematic relation", kin <= 1e-12, sci(kin)));
  }

  for (size_t k = 0; k < c.eps_grid.size(); ++k) {
    const fs::path dir = ctx.ws.offline(k) / "model";
    if (!fs::exists(dir / "manifest.txt")) continue;
    const ReducedModel m = load_reduced_model(dir);
    const auto& b = m.bases;
    const std::string tag = "offline " + indexed("eps", k) + " ";
    const double du = orthonormality_defect(b.phi_u, &ops.Xu), dp = orthonormality_defect(b.phi_p, &ops.Xp);
    const double dl = orthonormality_defect(b.phi_lambda, nullptr);
    out.push_back(check(tag + "spatial bases orthonormal", std::max({du, dp, dl}) <= 1e-10, sci(std::max({du, dp, dl}))));
    const double tu = orthonormality_defect(b.psi_u, nullptr), tp = orthonormality_defect(b.psi_p, nullptr);
    const double tl = orthonormality_defect(b.psi_lambda, nullptr);
    out.push_back(check(tag + "temporal bases orthonormal", std::max({tu, tp, tl}) <= 1e-10, sci(std::max({tu, tp, tl}))));
    const auto mus = test_parameters(c);
    bool ok = true;
    double worst = 0.0;
    for (const auto& mu : mus) {
      const StProblem pb = make_st_problem(m, mu, campaign_flow(ops, c, mu));
      Eigen::PartialPivLU<Mat> lu(pb.lhs);
      const double rc = lu.rcond();
      ok = ok && rc > 0.0 && std::isfinite(rc);
      worst = std::max(worst, rc > 0.0 ? 1.0 / rc : INFINITY);
    }
    out.push_back(check(tag + "reduced left-hand side nonsingular", ok, "condition " + sci(worst)));
  }
  return out;
}

}  // namespace strb
