#include "strb/solvers.hpp"

#include <chrono>
#include <cmath>

namespace strb {

void NewtonConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("Newton tolerance must be positive");
  if (max_iter < 1) throw ConfigError("Newton needs at least one iteration");
}

StProblem make_st_problem(const ReducedModel& m, const ParameterSample& mu, const Mat& flow_rates,
                          const InitialState* ic) {
  require_dims(flow_rates.cols() == m.n_t, "flow rates must cover the model's " + std::to_string(m.n_t) + " steps");
  const ReducedSizes sz = m.sizes();
  StProblem pb;
  pb.mt = derive_membrane_coefficients(mu.mu_m);
  pb.lhs = assemble_reduced_lhs(m.blocks, sz, pb.mt);
  pb.rhs = Vec::Zero(sz.total());
  pb.rhs.tail(sz.n_lambda()) = assemble_reduced_rhs(m.bar.g, m.bases.psi_lambda, flow_rates, m.beta_dt());
  if (ic && !ic->is_zero()) {
    if (!m.lifted) throw ConfigError("nonzero initial state requires a lifted reduced model");
    const LiftingTerms t = assemble_lifting(m.lift, m.grams, sz, *ic, pb.mt, m.c_s, m.scheme, m.dt);
    pb.rhs += t.f0 + t.f0L;
    pb.lift = ConvectiveLift{t.u0bar, &m.grams.G[0], &m.grams.ones_u};
  }
  return pb;
}

Vec st_residual(const ReducedModel& m, const StProblem& pb, const Vec& w) {
  const ReducedSizes sz = m.sizes();
  require_dims(w.size() == sz.total(), "space-time coordinate length");
  Vec r = pb.lhs * w - pb.rhs;
  if (m.conv.n_c > 0) {
    const Mat U = unfold(w.head(sz.n_u()), sz.u.n_s, sz.u.n_t);
    r.head(sz.n_u()) += fold(eval_reduced_convective(U, m.conv, m.grams.psi3, m.beta_dt(), pb.lift ? &*pb.lift : nullptr));
  }
  return r;
}

Mat st_jacobian(const ReducedModel& m, const StProblem& pb, const Vec& w) {
  const ReducedSizes sz = m.sizes();
  Mat J = pb.lhs;
  if (m.conv.n_cJ > 0) {
    const Mat U = unfold(w.head(sz.n_u()), sz.u.n_s, sz.u.n_t);
    J.topLeftCorner(sz.n_u(), sz.n_u()) +=
        eval_reduced_convective_jacobian(U, m.conv, m.grams.psi3, m.beta_dt(), pb.lift ? &*pb.lift : nullptr);
  }
  return J;
}

std::shared_ptr<const StGrbSolver::Lu> StGrbSolver::cached_lhs(const StProblem& pb) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(pb.mt.value);
    if (it != cache_.end()) return it->second;
  }
  // factor outside the lock; a concurrent duplicate is harmless
  auto lu = std::make_shared<const Lu>(pb.lhs);
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(pb.mt.value, std::move(lu)).first->second;
}

void StGrbSolver::clear_cache() const {
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.clear();
}

StSolution StGrbSolver::solve(const ParameterSample& mu, const Mat& flow_rates, const NewtonConfig& cfg,
                              const Vec* w0, const InitialState* ic) const {
  const auto start = std::chrono::steady_clock::now();
  const StProblem pb = make_st_problem(m_, mu, flow_rates, ic);
  StSolution s = solve(pb, cfg, w0);
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

StSolution StGrbSolver::solve(const StProblem& pb, const NewtonConfig& cfg, const Vec* w0) const {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  StSolution s;
  s.w = w0 ? *w0 : Vec::Zero(pb.rhs.size());
  require_dims(s.w.size() == pb.rhs.size(), "warm start length");
  Vec r = st_residual(m_, pb, s.w);
  const double r0 = r.norm();
  s.residuals.push_back(r0);
  s.converged = r0 == 0.0;
  for (int it = 0; it < cfg.max_iter && !s.converged; ++it) {
    std::shared_ptr<const Lu> lu;
    if (cfg.mode == JacobianMode::Quasi) lu = cached_lhs(pb);
    else lu = std::make_shared<const Lu>(st_jacobian(m_, pb, s.w));
    const double rc = lu->rcond();
    if (!(rc > 0.0) || !std::isfinite(rc)) throw SingularSystemError("reduced Jacobian is singular");
    s.condition = 1.0 / rc;
    s.ill_conditioned = s.ill_conditioned || s.condition > 1e12;
    const Vec delta = lu->solve(r);
    if (!delta.allFinite()) throw SingularSystemError("reduced Newton update is not finite");
    s.w -= delta;
    r = st_residual(m_, pb, s.w);
    s.residuals.push_back(r.norm());
    s.iterations = it + 1;
    s.converged = s.residuals.back() <= cfg.tau * r0;
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

}  // namespace strb
