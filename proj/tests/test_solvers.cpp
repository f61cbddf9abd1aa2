#include <doctest.h>

#include "oracle.hpp"
#include "strb/solvers.hpp"
#include "strb/synth.hpp"

#include <filesystem>

using namespace strb;

namespace {

FomOperators solver_ops(Index nu, Index np, double conv, std::uint64_t seed = 5) {
  SynthConfig cfg;
  cfg.n_u = nu;
  cfg.n_p = np;
  cfg.n_lambda_per_boundary = {2, 1};
  cfg.convection_scale = conv;
  cfg.c_s = 0.2;
  cfg.seed = seed;
  return synth_generate(cfg);
}

// spans the whole space with the right orthonormality, so no reduction happens
ReducedBasisSet complete_bases(const FomOperators& ops, Index nt) {
  ReducedBasisSet b;
  b.phi_u = gram_schmidt(Mat::Identity(ops.n_u(), ops.n_u()), &ops.Xu, 1e-12);
  b.phi_p = gram_schmidt(Mat::Identity(ops.n_p(), ops.n_p()), &ops.Xp, 1e-12);
  b.phi_lambda = Mat::Identity(ops.n_lambda(), ops.n_lambda());
  b.psi_u = b.psi_p = b.psi_lambda = Mat::Identity(nt, nt);
  return b;
}

using oracle::random_bases;

ParameterSample sample_mu() {
  ParameterSample mu;
  mu.mu_f = Vec(3);
  mu.mu_f << 5.0, 0.2, 0.5;
  mu.mu_m = {0.1, 1.2, 4e6, 0.4};
  return mu;
}

InitialState random_state(const FomOperators& ops, std::mt19937_64& g, double scale = 1.0) {
  InitialState ic = InitialState::zero(ops.n_u(), ops.n_p(), ops.n_lambda(), 2);
  for (auto& v : ic.u) v = scale * oracle::random_matrix(ops.n_u(), 1, g).col(0);
  for (auto& v : ic.d) v = scale * oracle::random_matrix(ops.n_u(), 1, g).col(0);
  ic.p = scale * oracle::random_matrix(ops.n_p(), 1, g).col(0);
  ic.lambda = scale * oracle::random_matrix(ops.n_lambda(), 1, g).col(0);
  return ic;
}

double field_error(const Mat& a, const Mat& b, const SpMat& X) {
  const Mat d = a - b;
  return std::sqrt((d.transpose() * (X * d)).trace() / std::max((b.transpose() * (X * b)).trace(), 1e-300));
}

}  // namespace

TEST_CASE("newton configuration") {
  CHECK_THROWS_AS((NewtonConfig{0.0, 10}.validate()), ConfigError);
  CHECK_THROWS_AS((NewtonConfig{1e-5, 0}.validate()), ConfigError);
  CHECK_NOTHROW(NewtonConfig{}.validate());
}

TEST_CASE("warm-start strategies") {
  std::mt19937_64 g(40);
  std::vector<Vec> ps, cs;
  for (int k = 0; k < 8; ++k) {
    ps.push_back(oracle::random_matrix(4, 1, g).col(0));
    cs.push_back(oracle::random_matrix(6, 1, g).col(0));
  }
  WarmStartStore podi(ps, cs, {WarmStartKind::Podi});
  for (size_t k = 0; k < ps.size(); ++k) CHECK((podi(ps[k]) - cs[k]).norm() <= 1e-9 * cs[k].norm());

  const Vec query = oracle::random_matrix(4, 1, g).col(0);
  for (auto weighting : {NniWeighting::Paper, NniWeighting::Inverse}) {
    WarmStartStore knn(ps, cs, {WarmStartKind::Knn, 1, weighting});
    // nearest in the rescaled parameter box
    Vec lo = ps[0], hi = ps[0];
    for (const auto& p : ps) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    size_t best = 0;
    double bd = 1e300;
    for (size_t k = 0; k < ps.size(); ++k) {
      const double d = (query - ps[k]).cwiseQuotient(hi - lo).norm();
      if (d < bd) bd = d, best = k;
    }
    CHECK(knn(query) == cs[best]);
  }

  // two neighbours at distances 1 and 3
  std::vector<Vec> two{Vec::Constant(1, 0.0), Vec::Constant(1, 4.0)};
  std::vector<Vec> vals{Vec::Constant(1, 10.0), Vec::Constant(1, 20.0)};
  WarmStartStore paper(two, vals, {WarmStartKind::Knn, 2, NniWeighting::Paper});
  WarmStartStore inverse(two, vals, {WarmStartKind::Knn, 2, NniWeighting::Inverse});
  const Vec q = Vec::Constant(1, 1.0);
  CHECK(paper(q)[0] == doctest::Approx(0.25 * 10.0 + 0.75 * 20.0));
  CHECK(inverse(q)[0] == doctest::Approx(0.75 * 10.0 + 0.25 * 20.0));

  WarmStartStore avg({ps[0], ps[1]}, {cs[0], Vec(-cs[0])}, {WarmStartKind::Average});
  CHECK(avg(query).norm() == 0.0);
  WarmStartStore zero(ps, cs, {WarmStartKind::Zero});
  CHECK(zero(query).norm() == 0.0);
  CHECK_THROWS_AS(WarmStartStore({}, {}, {WarmStartKind::Average})(query), ConfigError);
  CHECK_THROWS_AS(parse_warm_start_kind("nearest"), ConfigError);
  CHECK(thin_plate(0.0) == 0.0);

  // duplicates are dropped before the kernel solve
  auto dup_p = ps;
  auto dup_c = cs;
  dup_p.push_back(ps[2]);
  dup_c.push_back(cs[2]);
  WarmStartStore dup(dup_p, dup_c, {WarmStartKind::Podi});
  CHECK((dup(ps[2]) - cs[2]).norm() <= 1e-9 * cs[2].norm());

  const auto dir = std::filesystem::temp_directory_path() / "strb_test_ws";
  std::filesystem::remove_all(dir);
  podi.store(dir);
  const auto back = WarmStartStore::load(dir);
  CHECK(back(query) == podi(query));
  CHECK_THROWS_AS(WarmStartStore::load(dir / "none"), IoError);
}

TEST_CASE("linear space-time solve takes one Newton step") {
  std::mt19937_64 g(41);
  const auto ops = solver_ops(20, 3, 0.0);
  const Index nt = 10;
  const auto b = random_bases(ops, nt, 6, 4, 2, 3, 2, 3, g);
  const auto m = build_reduced_model(ops, b, BdfScheme::of_order(2), 0.05, ModelOptions{.n_c = 0});
  const auto mu = sample_mu();
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, 0.05);
  StGrbSolver solver(m);
  const auto s = solver.solve(mu, flow, NewtonConfig{});
  const StProblem pb = make_st_problem(m, mu, flow);
  const Vec direct = pb.lhs.fullPivLu().solve(pb.rhs);
  CHECK(s.converged);
  CHECK(s.iterations == 1);
  CHECK((s.w - direct).norm() <= 1e-12 * direct.norm());

  const auto none = solver.solve(mu, Mat::Zero(2, nt), NewtonConfig{});
  CHECK(none.converged);
  CHECK(none.iterations == 0);
  CHECK(none.w.norm() == 0.0);
  CHECK_THROWS_AS(solver.solve(mu, Mat::Zero(2, nt + 1), NewtonConfig{}), DimensionError);
}

TEST_CASE("space-time Jacobian against finite differences") {
  std::mt19937_64 g(42);
  const auto ops = solver_ops(18, 3, 0.8);
  const Index nt = 8;
  const auto b = random_bases(ops, nt, 6, 4, 2, 3, 2, 3, g);
  const auto m = build_reduced_model(ops, b, BdfScheme::of_order(2), 0.05, ModelOptions{.lifted = true});
  const auto mu = sample_mu();
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, 0.05);
  const InitialState ic = random_state(ops, g);
  for (const InitialState* init : {static_cast<const InitialState*>(nullptr), &ic}) {
    const StProblem pb = make_st_problem(m, mu, flow, init);
    for (int trial = 0; trial < 3; ++trial) {
      const Vec w = oracle::random_matrix(pb.rhs.size(), 1, g).col(0);
      const Mat J = st_jacobian(m, pb, w);
      Mat fd(J.rows(), J.cols());
      const double h = 1e-6;
      for (Index j = 0; j < w.size(); ++j) {
        Vec e = Vec::Zero(w.size());
        e[j] = h;
        fd.col(j) = (st_residual(m, pb, w + e) - st_residual(m, pb, w - e)) / (2 * h);
      }
      CHECK((fd - J).norm() <= 1e-5 * J.norm());
    }
  }
}

TEST_CASE("SRB-TFO with identity spatial bases repeats the FOM") {
  const auto ops = solver_ops(24, 4, 0.8);
  const Index nt = 15;
  const double dt = 0.05;
  ReducedBasisSet b;
  b.phi_u = Mat::Identity(24, 24);
  b.phi_p = Mat::Identity(4, 4);
  b.phi_lambda = Mat::Identity(3, 3);
  b.psi_u = b.psi_p = b.psi_lambda = Mat::Identity(nt, nt);
  const auto sc = BdfScheme::of_order(2);
  const auto m = build_reduced_model(ops, b, sc, dt, ModelOptions{});
  const auto mu = sample_mu();
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, dt);
  const auto ic = InitialState::zero(24, 4, 3, 2);
  const auto fom = fom_solve_transient(ops, sc, dt, mu, flow, ic);
  const auto srb = SrbTfoSolver(m).solve(mu, flow, NewtonConfig{1e-10, 20});
  CHECK(srb.converged);
  CHECK(relative_error(srb.u, fom.u) <= 1e-12);
  CHECK(relative_error(srb.p, fom.p) <= 1e-12);
  CHECK(relative_error(srb.lambda, fom.lambda) <= 1e-12);
  CHECK(srb.iterations == fom.newton_iterations);

  const auto rest = SrbTfoSolver(m).solve(mu, Mat::Zero(2, nt), NewtonConfig{});
  CHECK(rest.u.norm() == 0.0);
  CHECK(rest.total_iterations() == 0);
}

TEST_CASE("SRB-TFO initial data and the dense per-step oracle") {
  std::mt19937_64 g(43);
  const auto ops = solver_ops(20, 3, 0.0);
  const Index nt = 12;
  const double dt = 0.04;
  const auto sc = BdfScheme::of_order(2);
  const auto mu = sample_mu();
  const auto mt = derive_membrane_coefficients(mu.mu_m);
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, dt);
  const InitialState ic = random_state(ops, g);

  // complete bases: the reduced run is the FOM run with the same initial data
  const auto full = build_reduced_model(ops, complete_bases(ops, nt), sc, dt, ModelOptions{});
  const auto fom = fom_solve_transient(ops, sc, dt, mu, flow, ic);
  const auto s = SrbTfoSolver(full).solve(mu, flow, NewtonConfig{1e-12, 5}, &ic);
  const auto rec = reconstruct_srb(full, s, &ic);
  CHECK(field_error(rec.u, fom.u, ops.Xu) <= 1e-10);
  CHECK(field_error(rec.p, fom.p, ops.Xp) <= 1e-10);
  CHECK(field_error(rec.d, fom.d, ops.Xd) <= 1e-10);

  // truncated bases: each step is a dense Galerkin solve of the projected system
  const auto b = random_bases(ops, nt, 7, nt, 2, nt, 3, nt, g);
  const auto m = build_reduced_model(ops, b, sc, dt, ModelOptions{});
  const auto r = SrbTfoSolver(m).solve(mu, flow, NewtonConfig{1e-12, 5});
  const double bdt = sc.beta * dt;
  const Mat Mt = Mat(ops.M) + mt[0] * Mat(ops.Ms);
  const Mat K = mt[1] * Mat(ops.As1) + mt[2] * Mat(ops.As2) + ops.c_s * Mat(ops.Ms);
  const Mat AR = Mat(ops.A) + Mat(ops.resistance_matrix());
  const Index nu = 7, np = 2, nl = 3;
  Mat Q = Mat::Zero(20 + 3 + 3, nu + np + nl);
  Q.block(0, 0, 20, nu) = b.phi_u;
  Q.block(20, nu, 3, np) = b.phi_p;
  Q.block(23, nu + np, 3, nl) = b.phi_lambda;
  Mat Jf = Mat::Zero(26, 26);
  Jf.topLeftCorner(20, 20) = Mt + bdt * AR + bdt * bdt * K;
  Jf.block(0, 20, 20, 3) = bdt * Mat(ops.B).transpose();
  Jf.block(0, 23, 20, 3) = bdt * Mat(ops.L).transpose();
  Jf.block(20, 0, 3, 20) = bdt * Mat(ops.B);
  Jf.block(23, 0, 3, 20) = bdt * Mat(ops.L);
  const Mat Jr = Q.transpose() * Jf * Q;
  std::vector<Vec> us, ds;
  for (Index k = 0; k < nt; ++k) {
    Vec rhs = Vec::Zero(26), hist_u = Vec::Zero(20), hist_d = Vec::Zero(20);
    for (int s = 1; s <= 2; ++s)
      if (k - s >= 0) {
        hist_u += sc.alpha[static_cast<size_t>(s - 1)] * us[static_cast<size_t>(k - s)];
        hist_d += sc.alpha[static_cast<size_t>(s - 1)] * ds[static_cast<size_t>(k - s)];
      }
    rhs.head(20) = Mt * hist_u - bdt * K * hist_d;
    rhs.tail(3) = bdt * ops.dirichlet_vector(flow.col(k));
    const Vec x = Jr.fullPivLu().solve(Q.transpose() * rhs);
    const Vec u = b.phi_u * x.head(nu);
    us.push_back(u);
    ds.push_back(bdt * u + hist_d);
    CHECK((x.head(nu) - r.u.col(k)).norm() <= 1e-12 * std::max(1.0, x.head(nu).norm()));
    CHECK((x.segment(nu, np) - r.p.col(k)).norm() <= 1e-12 * std::max(1.0, x.segment(nu, np).norm()));
  }
}

TEST_CASE("space-time solve matches SRB-TFO when time is not reduced") {
  std::mt19937_64 g(44);
  const auto ops = solver_ops(30, 4, 0.8);
  const Index nt = 20;
  const double dt = 0.05;
  const auto b = random_bases(ops, nt, 9, nt, 3, nt, 3, nt, g);
  const auto m = build_reduced_model(ops, b, BdfScheme::of_order(2), dt, ModelOptions{});
  const auto mu = sample_mu();
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, dt);
  const NewtonConfig tight{1e-12, 20};
  const auto st = StGrbSolver(m).solve(mu, flow, tight);
  const auto srb = SrbTfoSolver(m).solve(mu, flow, tight);
  REQUIRE(st.converged);
  REQUIRE(srb.converged);
  const auto a = reconstruct_st(m, st.w);
  const auto c = reconstruct_srb(m, srb);
  CHECK(field_error(a.u, c.u, ops.Xu) <= 1e-8);
  CHECK(field_error(a.p, c.p, ops.Xp) <= 1e-8);
  CHECK(field_error(a.d, c.d, ops.Xd) <= 1e-8);
}

TEST_CASE("quasi-Newton path") {
  std::mt19937_64 g(45);
  const auto ops = solver_ops(30, 4, 0.5);
  const Index nt = 20;
  const auto b = random_bases(ops, nt, 8, 5, 3, 4, 3, 4, g);
  const auto full_model = build_reduced_model(ops, b, BdfScheme::of_order(2), 0.05, ModelOptions{});
  const auto quasi_model = build_reduced_model(ops, b, BdfScheme::of_order(2), 0.05, ModelOptions{.n_cJ = 0});
  const auto mu = sample_mu();
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, 0.05);
  const NewtonConfig cfg{1e-8, 30};
  const auto full = StGrbSolver(full_model).solve(mu, flow, cfg);
  NewtonConfig qc = cfg;
  qc.mode = JacobianMode::Quasi;
  StGrbSolver qs(quasi_model);
  const auto quasi = qs.solve(mu, flow, qc);
  REQUIRE(full.converged);
  REQUIRE(quasi.converged);
  CHECK((quasi.w - full.w).norm() <= 10 * cfg.tau * full.w.norm());
  CHECK(quasi.iterations >= full.iterations);
  // same Jacobian, assembled every iteration
  const auto assembled = StGrbSolver(quasi_model).solve(mu, flow, cfg);
  CHECK(assembled.iterations == quasi.iterations);
  CHECK((assembled.w - quasi.w).norm() <= 1e-10 * quasi.w.norm());

  // the constant left-hand side does not depend on the flow parameters
  ParameterSample other = mu;
  other.mu_f << 3.0, 0.1, 0.7;
  const Mat flow2 = sample_flow_rates(FlowWaveform{}, other.mu_f, 2, nt, 0.05);
  CHECK(make_st_problem(quasi_model, mu, flow).lhs == make_st_problem(quasi_model, other, flow2).lhs);
}

TEST_CASE("lifted space-time solve with complete bases reproduces the FOM") {
  std::mt19937_64 g(46);
  const auto ops = solver_ops(16, 3, 0.8);
  const Index nt = 10;
  const double dt = 0.05;
  const auto sc = BdfScheme::of_order(2);
  const auto m = build_reduced_model(ops, complete_bases(ops, nt), sc, dt, ModelOptions{.lifted = true});
  const auto mu = sample_mu();
  const Mat flow = sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, dt);
  const InitialState ic = random_state(ops, g, 0.3);
  const auto fom = fom_solve_transient(ops, sc, dt, mu, flow, ic);
  const auto st = StGrbSolver(m).solve(mu, flow, NewtonConfig{1e-13, 20}, nullptr, &ic);
  REQUIRE(st.converged);
  const auto rec = reconstruct_st(m, st.w, &ic);
  CHECK(field_error(rec.u, fom.u, ops.Xu) <= 1e-9);
  CHECK(field_error(rec.p, fom.p, ops.Xp) <= 1e-9);
  CHECK(field_error(rec.d, fom.d, ops.Xd) <= 1e-9);
  CHECK((project_trajectory(ops, m.bases, fom, true) - st.w).norm() <= 1e-9 * st.w.norm());

  const auto unlifted = build_reduced_model(ops, complete_bases(ops, nt), sc, dt, ModelOptions{});
  CHECK_THROWS_AS(make_st_problem(unlifted, mu, flow, &ic), ConfigError);
}

TEST_CASE("reconstruction") {
  std::mt19937_64 g(47);
  const auto ops = solver_ops(20, 3, 0.5);
  const Index nt = 12;
  const auto sc = BdfScheme::of_order(2);
  const auto b = random_bases(ops, nt, 5, 4, 2, 3, 2, 3, g);
  const auto m = build_reduced_model(ops, b, sc, 0.05, ModelOptions{.lifted = true});
  const auto sz = m.sizes();

  const auto zero = reconstruct_st(m, Vec::Zero(sz.total()));
  CHECK(zero.u.norm() == 0.0);
  CHECK(zero.p.norm() == 0.0);
  CHECK(zero.d.norm() == 0.0);
  CHECK_THROWS_AS(reconstruct_st(m, Vec::Zero(sz.total() + 1)), ShapeMismatchError);

  const InitialState ic = random_state(ops, g);
  const auto lifted0 = reconstruct_st(m, Vec::Zero(sz.total()), &ic);
  for (Index k = 0; k < nt; ++k) CHECK(lifted0.u.col(k) == ic.u[0]);
  CHECK(lifted0.initial.u[1] == ic.u[1]);
  CHECK(lifted0.initial.d[0] == ic.d[0]);

  // kinematic coupling at every step, with and without lifting
  const Vec w = oracle::random_matrix(sz.total(), 1, g).col(0);
  for (const InitialState* init : {static_cast<const InitialState*>(nullptr), &ic}) {
    const auto tr = reconstruct_st(m, w, init);
    const double bdt = sc.beta * 0.05;
    for (Index k = 0; k < nt; ++k) {
      Vec res = tr.d.col(k) - bdt * tr.u.col(k);
      for (int s = 1; s <= 2; ++s) {
        const Vec prev = k - s >= 0 ? Vec(tr.d.col(k - s)) : (init ? init->d[static_cast<size_t>(s - k - 1)] : Vec(Vec::Zero(20)));
        res -= sc.alpha[static_cast<size_t>(s - 1)] * prev;
      }
      CHECK(res.norm() <= 1e-12 * std::max(1.0, tr.d.col(k).norm()));
    }
    const std::vector<Index> probes{3, 7, 11};
    const auto pr = reconstruct_st(m, w, init, &probes);
    CHECK(pr.u.rows() == 3);
    CHECK((pr.u.row(1) - tr.u.row(7)).norm() <= 1e-14 * tr.u.norm());
    CHECK((pr.d.row(2) - tr.d.row(11)).norm() <= 1e-14 * tr.d.norm());
  }

  // reconstruct(project(x)) is the orthogonal projection of x
  Trajectory tr = reconstruct_st(m, w);
  tr.initial = InitialState::zero(20, 3, 3, 2);
  CHECK((project_trajectory(ops, b, tr, false) - w).norm() <= 1e-10 * w.norm());

  const auto last = handoff_state(tr, 2);
  CHECK(last.u[0] == Vec(tr.u.col(nt - 1)));
  CHECK(last.u[1] == Vec(tr.u.col(nt - 2)));
  CHECK(last.d[1] == Vec(tr.d.col(nt - 2)));
  CHECK(last.p == Vec(tr.p.col(nt - 1)));
}

TEST_CASE("non-convergence is reported, not thrown") {
  std::mt19937_64 g(48);
  const auto ops = solver_ops(20, 3, 3.0);
  const Index nt = 10;
  const auto b = random_bases(ops, nt, 6, 4, 2, 3, 2, 3, g);
  const auto m = build_reduced_model(ops, b, BdfScheme::of_order(2), 0.05, ModelOptions{.n_cJ = 0});
  auto mu = sample_mu();
  mu.mu_f[0] = 50.0;
  const Mat flow = 20.0 * sample_flow_rates(FlowWaveform{}, mu.mu_f, 2, nt, 0.05);
  NewtonConfig cfg{1e-14, 1, JacobianMode::Quasi};
  const auto s = StGrbSolver(m).solve(mu, flow, cfg);
  CHECK_FALSE(s.converged);
  CHECK(s.iterations == 1);
  CHECK(s.residuals.size() == 2);
}
