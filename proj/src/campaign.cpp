#include "strb/campaign.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace strb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Trajectory columns(const Trajectory& tr, Index first, Index count) {
  Trajectory w;
  w.u = tr.u.middleCols(first, count);
  w.p = tr.p.middleCols(first, count);
  w.lambda = tr.lambda.middleCols(first, count);
  w.d = tr.d.middleCols(first, count);
  return w;
}

// state preceding column `first` of a trajectory that started from `tr.initial`
InitialState state_before(const Trajectory& tr, Index first, int order) {
  if (first == 0) return tr.initial;
  InitialState ic;
  for (int s = 1; s <= order; ++s) {
    const Index c = first - s;
    ic.u.push_back(c >= 0 ? Vec(tr.u.col(c)) : tr.initial.u[static_cast<size_t>(-c - 1)]);
    ic.d.push_back(c >= 0 ? Vec(tr.d.col(c)) : tr.initial.d[static_cast<size_t>(-c - 1)]);
  }
  ic.p = tr.p.col(first - 1);
  ic.lambda = tr.lambda.col(first - 1);
  return ic;
}

Trajectory concatenate(const std::vector<Trajectory>& parts) {
  Trajectory out;
  Index nt = 0;
  for (const auto& p : parts) nt += p.n_t();
  const auto& f = parts.front();
  out.u.resize(f.u.rows(), nt);
  out.p.resize(f.p.rows(), nt);
  out.lambda.resize(f.lambda.rows(), nt);
  out.d.resize(f.d.rows(), nt);
  Index c = 0;
  for (const auto& p : parts) {
    out.u.middleCols(c, p.n_t()) = p.u;
    out.p.middleCols(c, p.n_t()) = p.p;
    out.lambda.middleCols(c, p.n_t()) = p.lambda;
    out.d.middleCols(c, p.n_t()) = p.d;
    c += p.n_t();
  }
  out.initial = f.initial;
  return out;
}

MetricsRecord describe(const FomOperators& ops, const CampaignConfig& cfg, const ReducedModel& m, double eps,
                       const std::string& method) {
  MetricsRecord r;
  r.method = method;
  const auto& b = m.bases;
  const PodTolerances tol = cfg.tolerances(eps);
  r.eps_u = tol.u;
  r.eps_p = tol.p;
  r.eps_lambda_s = tol.lambda_s;
  r.eps_lambda_t = tol.lambda_t;
  r.n_c = m.conv.n_c;
  r.n_cJ = m.conv.n_cJ;
  r.n_u_s = b.n_u_s();
  r.n_p_s = b.n_p_s();
  r.n_lambda_s = b.n_lambda_s();
  r.n_supremizers = b.n_supremizers;
  r.n_stabilizers = b.n_stabilizers;
  r.full_dim = (ops.n_u() + ops.n_p() + ops.n_lambda()) * m.n_t;
  if (method == "srb-tfo") {
    r.n_u_t = r.n_p_t = r.n_lambda_t = m.n_t;
    r.reduced_dim = (b.n_u_s() + b.n_p_s() + b.n_lambda_s()) * m.n_t;
  } else {
    r.n_u_t = b.n_u_t();
    r.n_p_t = b.n_p_t();
    r.n_lambda_t = b.n_lambda_t();
    r.reduced_dim = b.n_st();
  }
  r.RF = r.reduced_dim > 0 ? static_cast<double>(r.full_dim) / static_cast<double>(r.reduced_dim) : 0.0;
  r.warm_start = method == "st-grb" ? to_string(cfg.warm.kind) : "none";
  return r;
}

void fill_errors(MetricsRecord& r, const FieldErrors& e) {
  r.E_u = e.u;
  r.E_p = e.p;
  r.E_d = e.d;
  r.E_u_ratio = r.eps_u > 0 ? e.u / r.eps_u : 0.0;
  r.E_p_ratio = r.eps_p > 0 ? e.p / r.eps_p : 0.0;
}

Mat tile(const Mat& m, Index times) {
  Mat out(m.rows(), m.cols() * times);
  for (Index c = 0; c < times; ++c) out.middleCols(c * m.cols(), m.cols()) = m;
  return out;
}

}  // namespace

void parallel_for(Index n, int jobs, const std::function<void(Index)>& f) {
  const Index workers = std::min<Index>(std::max(1, jobs), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  for (Index w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (Index i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void CampaignConfig::validate() const {
  if (order != 1 && order != 2) throw ConfigError("BDF order must be 1 or 2");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (n_t < order) throw ConfigError("N_t must cover at least the multistep start");
  if (M < 1) throw ConfigError("at least one training sample is required");
  if (M_test < 0) throw ConfigError("test count must be nonnegative");
  if (eps_grid.empty()) throw ConfigError("empty tolerance grid");
  for (double e : eps_grid)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("tolerances must lie in (0, 1)");
  if (box.f_lo.size() != box.f_hi.size() || (box.f_lo.array() > box.f_hi.array()).any())
    throw ConfigError("empty flow parameter box");
  for (size_t k = 0; k < 4; ++k)
    if (box.m_lo[k] > box.m_hi[k]) throw ConfigError("empty membrane parameter box");
  if (field_tolerances) {
    const auto& t = *field_tolerances;
    for (double e : {t.u, t.p, t.lambda_s, t.lambda_t})
      if (!(e > 0.0 && e < 1.0)) throw ConfigError("tolerances must lie in (0, 1)");
    if (eps_grid.size() != 1) throw ConfigError("per-field tolerances take a single grid entry");
  }
  if (timing_reps < 1) throw ConfigError("timing needs at least one repetition");
  newton.validate();
}

PodTolerances CampaignConfig::tolerances(double eps) const {
  if (field_tolerances) return *field_tolerances;
  return {eps, eps, lambda_space_factor * eps, eps};
}

BasisOptions CampaignConfig::basis_options(double eps, bool lifted) const {
  BasisOptions o;
  o.hosvd.tol = tolerances(eps);
  o.hosvd.randomized = randomized_pod;
  o.hosvd.seed = pod_seed;
  o.hosvd.max_time_rank = max_time_rank;
  o.hosvd.min_time_rank = min_time_rank;
  o.hosvd.full_time = full_time;
  o.supremizers = supremizers;
  o.stabilizers = stabilizers;
  o.lifted = lifted;
  return o;
}

ReducedBasisSet build_bases(const FomOperators& ops, const SnapshotSet& snapshots, const BasisOptions& opts) {
  ReducedBasisSet b = st_hosvd(opts.lifted ? subtract_initial_data(snapshots) : snapshots, ops, opts.hosvd);
  if (opts.supremizers) b.n_supremizers = enrich_supremizers(b.phi_u, b.phi_p, b.phi_lambda, ops.B, ops.L, ops.Xu);
  if (opts.stabilizers) b.n_stabilizers = enrich_time_stabilizers(b.psi_u, b.psi_p, b.psi_lambda);
  b.lifted = opts.lifted;
  return b;
}

WarmStartStore build_warm_start(const FomOperators& ops, const ReducedBasisSet& b, const SnapshotSet& snapshots,
                                const WarmStartConfig& cfg, bool lifted) {
  std::vector<Vec> ps, cs;
  for (Index k = 0; k < snapshots.size(); ++k) {
    ps.push_back(snapshots.parameters[static_cast<size_t>(k)].stacked());
    cs.push_back(project_trajectory(ops, b, snapshots.trajectories[static_cast<size_t>(k)], lifted));
  }
  return WarmStartStore(std::move(ps), std::move(cs), cfg);
}

Mat campaign_flow(const FomOperators& ops, const CampaignConfig& cfg, const ParameterSample& mu) {
  return sample_flow_rates(cfg.waveform, mu.mu_f, static_cast<Index>(ops.g_space.size()), cfg.n_t, cfg.dt);
}

CampaignData generate_campaign_data(const FomOperators& ops, const CampaignConfig& cfg) {
  cfg.validate();
  CampaignData data;
  data.train = sample_parameters(cfg.box, cfg.M, cfg.train_seed);
  data.test = sample_parameters(cfg.box, cfg.M_test, cfg.test_seed);
  const auto sc = BdfScheme::of_order(cfg.order);
  const auto ic = InitialState::zero(ops.n_u(), ops.n_p(), ops.n_lambda(), cfg.order);
  data.snapshots.parameters = data.train;
  data.snapshots.trajectories.resize(data.train.size());
  parallel_for(cfg.M, cfg.jobs, [&](Index k) {
    const auto& mu = data.train[static_cast<size_t>(k)];
    data.snapshots.trajectories[static_cast<size_t>(k)] =
        fom_solve_transient(ops, sc, cfg.dt, mu, campaign_flow(ops, cfg, mu), ic, cfg.fom);
  });
  data.references.resize(data.test.size());
  parallel_for(cfg.M_test, cfg.jobs, [&](Index k) {
    const auto& mu = data.test[static_cast<size_t>(k)];
    data.references[static_cast<size_t>(k)] =
        fom_solve_transient(ops, sc, cfg.dt, mu, campaign_flow(ops, cfg, mu), ic, cfg.fom);
  });
  for (const auto& r : data.references) data.fom_seconds += r.wall_seconds;
  if (!data.references.empty()) data.fom_seconds /= static_cast<double>(data.references.size());
  return data;
}

OfflineProducts run_offline(const FomOperators& ops, const SnapshotSet& snapshots, const CampaignConfig& cfg,
                            double eps, bool lifted) {
  const auto t0 = Clock::now();
  OfflineProducts off;
  const ReducedBasisSet b = build_bases(ops, snapshots, cfg.basis_options(eps, lifted));
  ModelOptions mo = cfg.hyper;
  mo.lifted = lifted;
  off.model = build_reduced_model(ops, b, BdfScheme::of_order(cfg.order), cfg.dt, mo);
  off.warm = build_warm_start(ops, off.model.bases, snapshots, cfg.warm, lifted);
  off.seconds = seconds_since(t0);
  return off;
}

OnlineOutcome online_st(const StGrbSolver& solver, const WarmStartStore& warm, const ParameterSample& mu,
                        const Mat& flow, const NewtonConfig& cfg, int reps, const InitialState* ic) {
  OnlineOutcome out;
  std::vector<double> times;
  StSolution s;
  for (int r = 0; r < std::max(1, reps); ++r) {
    const auto t0 = Clock::now();
    const Vec w0 = warm(mu.stacked());
    s = solver.solve(mu, flow, cfg, w0.size() > 0 ? &w0 : nullptr, ic);
    times.push_back(seconds_since(t0));
  }
  out.seconds = median(times);
  out.w = s.w;
  out.iterations = s.iterations;
  out.converged = s.converged;
  out.reconstruction = reconstruct_st(solver.model(), s.w, ic);
  return out;
}

OnlineOutcome online_srb(const ReducedModel& model, const ParameterSample& mu, const Mat& flow,
                         const NewtonConfig& cfg, int reps) {
  OnlineOutcome out;
  std::vector<double> times;
  SrbSolution s;
  const SrbTfoSolver solver(model);
  for (int r = 0; r < std::max(1, reps); ++r) {
    const auto t0 = Clock::now();
    s = solver.solve(mu, flow, cfg);
    times.push_back(seconds_since(t0));
  }
  out.seconds = median(times);
  out.iterations = s.total_iterations();
  out.converged = s.converged;
  out.reconstruction = reconstruct_srb(model, s);
  return out;
}

std::vector<MetricsRecord> evaluate_online(const FomOperators& ops, const CampaignConfig& cfg,
                                           const CampaignData& data, const OfflineProducts& off) {
  const double eps = off.model.bases.tol.u;
  std::vector<MetricsRecord> rows;
  if (data.test.empty()) {
    MetricsRecord r = describe(ops, cfg, off.model, eps, "offline");
    r.warm_start = to_string(cfg.warm.kind);
    r.offline_s = off.seconds;
    rows.push_back(r);
    return rows;
  }
  const Index nt = static_cast<Index>(data.test.size());
  auto summarize = [&](const std::string& method, const std::vector<OnlineOutcome>& outs) {
    MetricsRecord r = describe(ops, cfg, off.model, eps, method);
    std::vector<Trajectory> recs;
    double iters = 0.0, secs = 0.0;
    for (const auto& o : outs) {
      recs.push_back(o.reconstruction);
      iters += o.iterations;
      secs += o.seconds;
      r.converged += o.converged ? 1 : 0;
    }
    fill_errors(r, error_metrics(recs, data.references, ops));
    r.tests = nt;
    r.avg_iterations = iters / static_cast<double>(nt);
    r.offline_s = off.seconds;
    r.online_s = secs / static_cast<double>(nt);
    r.fom_s = data.fom_seconds;
    r.SU = r.online_s > 0 ? r.fom_s / r.online_s : 0.0;
    rows.push_back(r);
  };
  if (cfg.run_st) {
    const StGrbSolver solver(off.model);
    std::vector<OnlineOutcome> outs(static_cast<size_t>(nt));
    parallel_for(nt, cfg.jobs, [&](Index k) {
      const auto& mu = data.test[static_cast<size_t>(k)];
      outs[static_cast<size_t>(k)] = online_st(solver, off.warm, mu, campaign_flow(ops, cfg, mu), cfg.newton, cfg.timing_reps);
    });
    summarize("st-grb", outs);
  }
  if (cfg.run_srb) {
    std::vector<OnlineOutcome> outs(static_cast<size_t>(nt));
    parallel_for(nt, cfg.jobs, [&](Index k) {
      const auto& mu = data.test[static_cast<size_t>(k)];
      outs[static_cast<size_t>(k)] = online_srb(off.model, mu, campaign_flow(ops, cfg, mu), cfg.newton, cfg.timing_reps);
    });
    summarize("srb-tfo", outs);
  }
  return rows;
}

std::vector<MetricsRecord> run_campaign(const FomOperators& ops, const CampaignConfig& cfg, const CampaignData& data) {
  std::vector<MetricsRecord> rows;
  for (double eps : cfg.eps_grid) {
    const OfflineProducts off = run_offline(ops, data.snapshots, cfg, eps);
    for (auto& r : evaluate_online(ops, cfg, data, off)) rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricsRecord> run_campaign(const FomOperators& ops, const CampaignConfig& cfg) {
  return run_campaign(ops, cfg, generate_campaign_data(ops, cfg));
}

WindowedResult run_windowed(const FomOperators& ops, const CampaignConfig& cfg, Index cycles) {
  cfg.validate();
  if (cycles < 1) throw ConfigError("windowed run needs at least one cycle");
  const Index nw = cfg.n_t, horizon = nw * cycles;
  const int S = cfg.order;
  const auto sc = BdfScheme::of_order(cfg.order);
  const double eps = cfg.eps_grid.front();
  CampaignConfig whole = cfg;
  whole.n_t = horizon;

  const auto train = sample_parameters(cfg.box, cfg.M, cfg.train_seed);
  const auto test = sample_parameters(cfg.box, std::max<Index>(cfg.M_test, 1), cfg.test_seed);
  const auto zero = InitialState::zero(ops.n_u(), ops.n_p(), ops.n_lambda(), S);
  auto flow_of = [&](const ParameterSample& mu) { return tile(campaign_flow(ops, cfg, mu), cycles); };

  SnapshotSet full;
  full.parameters = train;
  full.trajectories.resize(train.size());
  parallel_for(cfg.M, cfg.jobs, [&](Index k) {
    const auto& mu = train[static_cast<size_t>(k)];
    full.trajectories[static_cast<size_t>(k)] = fom_solve_transient(ops, sc, cfg.dt, mu, flow_of(mu), zero, cfg.fom);
  });
  std::vector<Trajectory> refs(test.size());
  parallel_for(static_cast<Index>(test.size()), cfg.jobs, [&](Index k) {
    const auto& mu = test[static_cast<size_t>(k)];
    refs[static_cast<size_t>(k)] = fom_solve_transient(ops, sc, cfg.dt, mu, flow_of(mu), zero, cfg.fom);
  });
  double fom_s = 0.0;
  for (const auto& r : refs) fom_s += r.wall_seconds / static_cast<double>(refs.size());

  // windows of the training runs, each carrying the state that precedes it
  SnapshotSet windows;
  std::vector<SnapshotSet> per_cycle(static_cast<size_t>(cycles));
  for (size_t k = 0; k < train.size(); ++k)
    for (Index c = 0; c < cycles; ++c) {
      Trajectory w = columns(full.trajectories[k], c * nw, nw);
      w.initial = state_before(full.trajectories[k], c * nw, S);
      windows.parameters.push_back(train[k]);
      windows.trajectories.push_back(w);
      per_cycle[static_cast<size_t>(c)].parameters.push_back(train[k]);
      per_cycle[static_cast<size_t>(c)].trajectories.push_back(w);
    }
  const auto t0 = Clock::now();
  const ReducedBasisSet b = build_bases(ops, windows, cfg.basis_options(eps, true));
  ModelOptions mo = cfg.hyper;
  mo.lifted = true;
  const ReducedModel model = build_reduced_model(ops, b, sc, cfg.dt, mo);
  std::vector<WarmStartStore> stores;
  for (const auto& s : per_cycle) stores.push_back(build_warm_start(ops, model.bases, s, cfg.warm, true));
  const double offline_s = seconds_since(t0);

  WindowedResult res;
  const StGrbSolver solver(model);
  const Index ntest = static_cast<Index>(test.size());
  std::vector<std::vector<OnlineOutcome>> outs(static_cast<size_t>(ntest));
  std::vector<char> bitwise(static_cast<size_t>(ntest), 1);
  parallel_for(ntest, cfg.jobs, [&](Index k) {
    const auto& mu = test[static_cast<size_t>(k)];
    const Mat flow = campaign_flow(ops, cfg, mu);
    InitialState ic = zero;
    for (Index c = 0; c < cycles; ++c) {
      OnlineOutcome o = online_st(solver, stores[static_cast<size_t>(c)], mu, flow, cfg.newton, cfg.timing_reps, &ic);
      InitialState next = handoff_state(o.reconstruction, S);
      const auto& rec = o.reconstruction;
      for (int s = 1; s <= S; ++s) {
        const bool same = next.u[static_cast<size_t>(s - 1)] == Vec(rec.u.col(nw - s)) &&
                          next.d[static_cast<size_t>(s - 1)] == Vec(rec.d.col(nw - s));
        if (!same) bitwise[static_cast<size_t>(k)] = 0;
      }
      if (!(next.p == Vec(rec.p.col(nw - 1))) || !(next.lambda == Vec(rec.lambda.col(nw - 1))))
        bitwise[static_cast<size_t>(k)] = 0;
      outs[static_cast<size_t>(k)].push_back(std::move(o));
      ic = std::move(next);
    }
  });
  for (char ok : bitwise) res.handoff_bitwise = res.handoff_bitwise && ok;

  auto base_row = [&](const std::string& method) {
    MetricsRecord r = describe(ops, cfg, model, eps, method);
    r.tests = ntest;
    r.offline_s = offline_s;
    r.fom_s = fom_s;
    return r;
  };
  std::vector<Trajectory> concat;
  double total_s = 0.0, total_it = 0.0;
  Index conv = 0;
  for (Index k = 0; k < ntest; ++k) {
    std::vector<Trajectory> parts;
    for (const auto& o : outs[static_cast<size_t>(k)]) {
      parts.push_back(o.reconstruction);
      total_s += o.seconds;
      total_it += o.iterations;
      conv += o.converged ? 1 : 0;
    }
    concat.push_back(concatenate(parts));
  }
  for (Index c = 0; c < cycles; ++c) {
    MetricsRecord r = base_row("st-grb-cycle-" + std::to_string(c + 1));
    std::vector<Trajectory> rec, ref;
    double secs = 0.0, its = 0.0;
    for (Index k = 0; k < ntest; ++k) {
      const auto& o = outs[static_cast<size_t>(k)][static_cast<size_t>(c)];
      rec.push_back(o.reconstruction);
      ref.push_back(columns(refs[static_cast<size_t>(k)], c * nw, nw));
      secs += o.seconds;
      its += o.iterations;
      r.converged += o.converged ? 1 : 0;
    }
    fill_errors(r, error_metrics(rec, ref, ops));
    r.online_s = secs / static_cast<double>(ntest);
    r.avg_iterations = its / static_cast<double>(ntest);
    r.SU = r.online_s > 0 ? fom_s / static_cast<double>(cycles) / r.online_s : 0.0;
    res.cycles.push_back(r);
  }
  res.windowed = base_row("st-grb-windowed");
  fill_errors(res.windowed, error_metrics(concat, refs, ops));
  res.windowed.full_dim *= cycles;
  res.windowed.reduced_dim *= cycles;
  res.windowed.online_s = total_s / static_cast<double>(ntest);
  res.windowed.avg_iterations = total_it / static_cast<double>(ntest * cycles);
  res.windowed.converged = conv;
  res.windowed.SU = res.windowed.online_s > 0 ? fom_s / res.windowed.online_s : 0.0;

  // single window over the whole horizon, same training runs
  CampaignConfig single_cfg = whole;
  single_cfg.run_srb = false;
  const OfflineProducts off = run_offline(ops, full, single_cfg, eps);
  const StGrbSolver single_solver(off.model);
  std::vector<OnlineOutcome> souts(static_cast<size_t>(ntest));
  parallel_for(ntest, cfg.jobs, [&](Index k) {
    const auto& mu = test[static_cast<size_t>(k)];
    souts[static_cast<size_t>(k)] = online_st(single_solver, off.warm, mu, flow_of(mu), cfg.newton, cfg.timing_reps);
  });
  res.single = describe(ops, single_cfg, off.model, eps, "st-grb-single");
  std::vector<Trajectory> srec;
  double ss = 0.0, si = 0.0;
  for (const auto& o : souts) {
    srec.push_back(o.reconstruction);
    ss += o.seconds;
    si += o.iterations;
    res.single.converged += o.converged ? 1 : 0;
  }
  fill_errors(res.single, error_metrics(srec, refs, ops));
  res.single.tests = ntest;
  res.single.offline_s = off.seconds;
  res.single.online_s = ss / static_cast<double>(ntest);
  res.single.avg_iterations = si / static_cast<double>(ntest);
  res.single.fom_s = fom_s;
  res.single.SU = res.single.online_s > 0 ? fom_s / res.single.online_s : 0.0;
  return res;
}

}  // namespace strb
