#include "strb/solvers.hpp"

namespace strb {

namespace {

Mat rows_of(const Mat& m, const std::vector<Index>* rows) {
  if (!rows) return m;
  Mat out(static_cast<Index>(rows->size()), m.cols());
  for (size_t i = 0; i < rows->size(); ++i) {
    const Index r = (*rows)[i];
    require_dims(r >= 0 && r < m.rows(), "probe dof out of range");
    out.row(static_cast<Index>(i)) = m.row(r);
  }
  return out;
}

Vec rows_of(const Vec& v, const std::vector<Index>* rows) { return rows_of(Mat(v), rows).col(0); }

void check_initial(const ReducedModel& m, const InitialState* ic) {
  if (ic && !ic->is_zero() && !m.lifted) throw ConfigError("nonzero initial state requires a lifted reduced model");
}

std::vector<Vec> displacement_history(const ReducedModel& m, const InitialState* ic, Index n,
                                      const std::vector<Index>* probes) {
  std::vector<Vec> h;
  for (int s = 0; s < m.scheme.order; ++s)
    h.push_back(ic && static_cast<int>(ic->d.size()) > s ? rows_of(ic->d[static_cast<size_t>(s)], probes)
                                                          : Vec(Vec::Zero(n)));
  return h;
}

}  // namespace

Mat kinematic_displacement(const Mat& u, const std::vector<Vec>& d_hist, const BdfScheme& scheme, double dt) {
  const int S = scheme.order;
  require_dims(static_cast<int>(d_hist.size()) >= S, "displacement history length");
  Mat d(u.rows(), u.cols());
  for (Index k = 0; k < u.cols(); ++k) {
    Vec v = scheme.beta * dt * u.col(k);
    for (int s = 1; s <= S; ++s) {
      const double a = scheme.alpha[static_cast<size_t>(s - 1)];
      v += a * (k - s >= 0 ? Vec(d.col(k - s)) : d_hist[static_cast<size_t>(s - k - 1)]);
    }
    d.col(k) = v;
  }
  return d;
}

Vec project_trajectory(const FomOperators& ops, const ReducedBasisSet& b, const Trajectory& tr, bool lifted) {
  Mat u = tr.u, p = tr.p, l = tr.lambda;
  if (lifted) {
    if (!tr.initial.u.empty()) u.colwise() -= tr.initial.u[0];
    if (tr.initial.p.size() == p.rows()) p.colwise() -= tr.initial.p;
    if (tr.initial.lambda.size() == l.rows()) l.colwise() -= tr.initial.lambda;
  }
  const Mat U = b.phi_u.transpose() * (ops.Xu * u) * b.psi_u;
  const Mat P = b.phi_p.transpose() * (ops.Xp * p) * b.psi_p;
  const Mat L = b.phi_lambda.transpose() * l * b.psi_lambda;
  Vec w(U.size() + P.size() + L.size());
  w << fold(U), fold(P), fold(L);
  return w;
}

Trajectory reconstruct_st(const ReducedModel& m, const Vec& w, const InitialState* ic,
                          const std::vector<Index>* probes) {
  check_initial(m, ic);
  const ReducedSizes sz = m.sizes();
  if (w.size() != sz.total())
    throw ShapeMismatchError("coordinates of length " + std::to_string(w.size()) + " do not match the model (" +
                             std::to_string(sz.total()) + ")");
  const auto& b = m.bases;
  Trajectory tr;
  tr.u = rows_of(b.phi_u, probes) * unfold(w.head(sz.n_u()), sz.u.n_s, sz.u.n_t) * b.psi_u.transpose();
  tr.p = b.phi_p * unfold(w.segment(sz.n_u(), sz.n_p()), sz.p.n_s, sz.p.n_t) * b.psi_p.transpose();
  tr.lambda = b.phi_lambda * unfold(w.tail(sz.n_lambda()), sz.lambda.n_s, sz.lambda.n_t) * b.psi_lambda.transpose();
  if (ic && !ic->is_zero()) {
    tr.u.colwise() += rows_of(ic->u[0], probes);
    if (ic->p.size() == tr.p.rows()) tr.p.colwise() += ic->p;
    if (ic->lambda.size() == tr.lambda.rows()) tr.lambda.colwise() += ic->lambda;
  }
  tr.d = kinematic_displacement(tr.u, displacement_history(m, ic, tr.u.rows(), probes), m.scheme, m.dt);
  if (ic) tr.initial = *ic;
  return tr;
}

Trajectory reconstruct_srb(const ReducedModel& m, const SrbSolution& s, const InitialState* ic,
                           const std::vector<Index>* probes) {
  const auto& b = m.bases;
  require_dims(s.u.rows() == b.n_u_s() && s.p.rows() == b.n_p_s() && s.lambda.rows() == b.n_lambda_s(),
               "SRB-TFO coordinates do not match the spatial bases");
  Trajectory tr;
  tr.u = rows_of(b.phi_u, probes) * s.u;
  tr.p = b.phi_p * s.p;
  tr.lambda = b.phi_lambda * s.lambda;
  tr.d = kinematic_displacement(tr.u, displacement_history(m, ic, tr.u.rows(), probes), m.scheme, m.dt);
  if (ic) tr.initial = *ic;
  tr.newton_iterations = s.iterations;
  tr.wall_seconds = s.wall_seconds;
  return tr;
}

InitialState handoff_state(const Trajectory& tr, int order) {
  const Index nt = tr.n_t();
  require_dims(nt >= order, "window shorter than the multistep order");
  InitialState ic;
  for (int s = 1; s <= order; ++s) {
    ic.u.push_back(tr.u.col(nt - s));
    ic.d.push_back(tr.d.col(nt - s));
  }
  ic.p = tr.p.col(nt - 1);
  ic.lambda = tr.lambda.col(nt - 1);
  return ic;
}

}  // namespace strb
