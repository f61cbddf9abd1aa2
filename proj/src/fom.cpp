#include "strb/fom.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <numbers>

namespace strb {

std::vector<Index> FomOperators::lambda_sizes() const {
  std::vector<Index> out;
  for (const auto& g : g_space) out.push_back(g.size());
  return out;
}

SpMat FomOperators::resistance_matrix() const {
  std::vector<Triplet> t;
  for (const auto& r : resistance) {
    std::vector<Index> support;
    for (Index i = 0; i < r.flux.size(); ++i)
      if (r.flux[i] != 0.0) support.push_back(i);
    for (Index a : support)
      for (Index b : support) t.emplace_back(a, b, r.resistance * r.flux[a] * r.flux[b]);
  }
  SpMat R(n_u(), n_u());
  R.setFromTriplets(t.begin(), t.end());
  return R;
}

Vec FomOperators::dirichlet_vector(const Eigen::Ref<const Vec>& flow_rates) const {
  require_dims(flow_rates.size() == static_cast<Index>(g_space.size()),
               "dirichlet_vector: one flow rate per boundary");
  Vec g(n_lambda());
  Index off = 0;
  for (size_t k = 0; k < g_space.size(); ++k) {
    g.segment(off, g_space[k].size()) = g_space[k] * flow_rates[static_cast<Index>(k)];
    off += g_space[k].size();
  }
  return g;
}

void FomOperators::check_shapes() const {
  const Index nu = n_u();
  auto square = [&](const SpMat& m, const char* name) {
    require_dims(m.rows() == nu && m.cols() == nu, std::string(name) + " must be n_u x n_u");
  };
  square(M, "M");
  square(A, "A");
  square(Ms, "Ms");
  square(As1, "As1");
  square(As2, "As2");
  square(Xu, "Xu");
  square(Xd, "Xd");
  require_dims(B.cols() == nu, "B columns");
  require_dims(L.cols() == nu, "L columns");
  require_dims(Xp.rows() == n_p() && Xp.cols() == n_p(), "Xp must be n_p x n_p");
  require_dims(C.n == nu, "convective tensor size");
  Index nl = 0;
  for (const auto& g : g_space) nl += g.size();
  require_dims(nl == n_lambda(), "sum of g_space sizes must equal rows of L");
  for (const auto& r : resistance) require_dims(r.flux.size() == nu, "resistance flux length");
  for (Index b : boundary_dofs) require_dims(b >= 0 && b < nu, "boundary dof index");
}

Vec ParameterSample::stacked() const {
  Vec out(mu_f.size() + 4);
  out << mu_f, mu_m[0], mu_m[1], mu_m[2], mu_m[3];
  return out;
}

MembraneCoefficients derive_membrane_coefficients(const std::array<double, 4>& mu_m) {
  const double h = mu_m[0], rho = mu_m[1], E = mu_m[2], nu = mu_m[3];
  if (std::abs(1.0 - nu) < 1e-12 || std::abs(1.0 + nu) < 1e-12)
    throw NumericalError("degenerate Poisson ratio: |1 +- nu| < 1e-12");
  const double lambda1 = E * nu / ((1.0 + nu) * (1.0 - nu));
  const double lambda2 = E / (2.0 * (1.0 + nu));
  return MembraneCoefficients{{h * rho, h * lambda1, 2.0 * h * lambda2}};
}

double flow_waveform_tc1(double t, const Vec& mu_f, double period) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double mu1 = mu_f.size() > 0 ? mu_f[0] : 0.0;
  const double mu2 = mu_f.size() > 1 ? mu_f[1] : 0.0;
  return 1.0 - std::cos(two_pi * t / period) + mu2 * std::sin(two_pi * mu1 * t / period);
}

double flow_waveform_tc1_outlet(double t, const Vec& mu_f, double period) {
  const double mu3 = mu_f.size() > 2 ? mu_f[2] : 1.0;
  return mu3 * flow_waveform_tc1(t, mu_f, period);
}

double FlowWaveform::operator()(Index k, double t, const Vec& mu_f) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return k == 0 ? 1.0 : (mu_f.size() > 2 ? mu_f[2] : 1.0);
    case Kind::Sinusoidal:
      return k == 0 ? flow_waveform_tc1(t, mu_f, period) : flow_waveform_tc1_outlet(t, mu_f, period);
  }
  return 0.0;
}

Mat sample_flow_rates(const FlowWaveform& w, const Vec& mu_f, Index n_boundaries, Index n_t,
                      double dt, double t0) {
  Mat g(n_boundaries, n_t);
  for (Index n = 0; n < n_t; ++n)
    for (Index k = 0; k < n_boundaries; ++k) g(k, n) = w(k, t0 + static_cast<double>(n + 1) * dt, mu_f);
  return g;
}

InitialState InitialState::zero(Index n_u, Index n_p, Index n_lambda, int order) {
  InitialState s;
  s.u.assign(static_cast<size_t>(order), Vec::Zero(n_u));
  s.d.assign(static_cast<size_t>(order), Vec::Zero(n_u));
  s.p = Vec::Zero(n_p);
  s.lambda = Vec::Zero(n_lambda);
  return s;
}

bool InitialState::is_zero() const {
  for (const auto& v : u)
    if (!v.isZero(0.0)) return false;
  for (const auto& v : d)
    if (!v.isZero(0.0)) return false;
  return p.isZero(0.0) && lambda.isZero(0.0);
}

namespace {

struct StepOperators {
  SpMat mass;       // M + mt_1 Ms
  SpMat stiff;      // A + R
  SpMat membrane;   // mt_2 As1 + mt_3 As2 + c_s Ms
  SpMat linear_jacobian;  // block matrix without the convective Jacobian
  SpMat Bt, Lt;
};

StepOperators build_step_operators(const FomOperators& ops, const BdfScheme& scheme, double dt,
                                   const MembraneCoefficients& mt) {
  StepOperators so;
  const double bdt = scheme.beta * dt;
  so.mass = ops.M + mt[0] * ops.Ms;
  so.stiff = ops.A + ops.resistance_matrix();
  so.membrane = mt[1] * ops.As1 + mt[2] * ops.As2 + ops.c_s * ops.Ms;
  so.Bt = ops.B.transpose();
  so.Lt = ops.L.transpose();

  const Index nu = ops.n_u(), np = ops.n_p(), nl = ops.n_lambda();
  const Index ns = nu + np + nl;
  SpMat uu = so.mass + bdt * so.stiff + (bdt * bdt) * so.membrane;
  std::vector<Triplet> t;
  t.reserve(static_cast<size_t>(uu.nonZeros() + 2 * ops.B.nonZeros() + 2 * ops.L.nonZeros()));
  auto push = [&](const SpMat& m, Index r0, Index c0, double scale) {
    for (Index k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it) t.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
  };
  push(uu, 0, 0, 1.0);
  push(so.Bt, 0, nu, bdt);
  push(so.Lt, 0, nu + np, bdt);
  push(ops.B, nu, 0, bdt);
  push(ops.L, nu + np, 0, bdt);
  so.linear_jacobian.resize(ns, ns);
  so.linear_jacobian.setFromTriplets(t.begin(), t.end());
  return so;
}

Vec step_residual(const FomOperators& ops, const StepOperators& so, double bdt, const Vec& g,
                  const Vec& u, const Vec& p, const Vec& lambda, const Vec& d, const Vec& mass_history) {
  const Index nu = ops.n_u(), np = ops.n_p(), nl = ops.n_lambda();
  Vec r(nu + np + nl);
  Vec ru = so.mass * u - mass_history;
  Vec f = so.stiff * u + so.Bt * p + so.Lt * lambda + so.membrane * d;
  if (!ops.C.empty()) f += eval_convective(u, ops.C);
  r.head(nu) = ru + bdt * f;
  r.segment(nu, np) = bdt * (ops.B * u);
  r.tail(nl) = bdt * (ops.L * u - g);
  return r;
}

}  // namespace

Vec fom_step_residual(const FomOperators& ops, const BdfScheme& scheme, double dt,
                      const MembraneCoefficients& mt, const Vec& g, const Vec& u, const Vec& p,
                      const Vec& lambda, const Vec& d, const std::vector<Vec>& u_prev) {
  const StepOperators so = build_step_operators(ops, scheme, dt, mt);
  Vec hist = Vec::Zero(ops.n_u());
  for (int s = 0; s < scheme.order; ++s) hist += scheme.alpha[static_cast<size_t>(s)] * u_prev[static_cast<size_t>(s)];
  return step_residual(ops, so, scheme.beta * dt, g, u, p, lambda, d, so.mass * hist);
}

Trajectory fom_solve_transient(const FomOperators& ops, const BdfScheme& scheme, double dt,
                               const ParameterSample& mu, const Mat& flow_rates,
                               const InitialState& initial, const FomSolveOptions& opts) {
  ops.check_shapes();
  const Index nu = ops.n_u(), np = ops.n_p(), nl = ops.n_lambda();
  const Index nt = flow_rates.cols();
  const int S = scheme.order;
  require_dims(flow_rates.rows() == static_cast<Index>(ops.g_space.size()), "flow_rates rows");
  require_dims(static_cast<int>(initial.u.size()) >= S && static_cast<int>(initial.d.size()) >= S,
               "initial state must supply S prior velocity and displacement states");
  const auto start = std::chrono::steady_clock::now();

  const MembraneCoefficients mt = derive_membrane_coefficients(mu.mu_m);
  const StepOperators so = build_step_operators(ops, scheme, dt, mt);
  const double bdt = scheme.beta * dt;

  Trajectory tr;
  tr.u.resize(nu, nt);
  tr.p.resize(np, nt);
  tr.lambda.resize(nl, nt);
  tr.d.resize(nu, nt);
  tr.initial = initial;
  tr.newton_iterations.reserve(static_cast<size_t>(nt));

  auto u_at = [&](Index n) -> Vec {  // n is the time index, n <= 0 means initial data
    return n >= 1 ? Vec(tr.u.col(n - 1)) : initial.u[static_cast<size_t>(-n)];
  };
  auto d_at = [&](Index n) -> Vec {
    return n >= 1 ? Vec(tr.d.col(n - 1)) : initial.d[static_cast<size_t>(-n)];
  };

  Vec u = initial.u[0];
  Vec p = initial.p.size() == np ? initial.p : Vec::Zero(np);
  Vec lambda = initial.lambda.size() == nl ? initial.lambda : Vec::Zero(nl);

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  for (Index k = 0; k < nt; ++k) {
    const Index n1 = k + 1;
    Vec hist_u = Vec::Zero(nu), hist_d = Vec::Zero(nu);
    for (int s = 1; s <= S; ++s) {
      const double a = scheme.alpha[static_cast<size_t>(s - 1)];
      hist_u += a * u_at(n1 - s);
      hist_d += a * d_at(n1 - s);
    }
    const Vec mass_history = so.mass * hist_u;
    const Vec g = ops.dirichlet_vector(flow_rates.col(k));
    const double scale = std::max({bdt * g.norm(), mass_history.norm(), 1e-300});

    int it = 0;
    double r0 = 0.0;
    bool converged = false;
    for (;; ++it) {
      const Vec d = bdt * u + hist_d;
      const Vec r = step_residual(ops, so, bdt, g, u, p, lambda, d, mass_history);
      const double rn = r.norm();
      if (it == 0) r0 = rn;
      if (rn == 0.0 || rn <= opts.tol * r0 || rn <= opts.abs_tol * scale) {
        converged = true;
        break;
      }
      if (it >= opts.max_iter) break;
      SpMat J = so.linear_jacobian;
      if (!ops.C.empty()) {
        SpMat Jc = eval_convective_jacobian(u, ops.C);
        SpMat pad(nu + np + nl, nu + np + nl);
        std::vector<Triplet> t;
        for (Index c = 0; c < Jc.outerSize(); ++c)
          for (SpMat::InnerIterator jt(Jc, c); jt; ++jt) t.emplace_back(jt.row(), jt.col(), bdt * jt.value());
        pad.setFromTriplets(t.begin(), t.end());
        J += pad;
      }
      J.makeCompressed();
      lu.compute(J);
      if (lu.info() != Eigen::Success)
        throw SingularSystemError("FOM step " + std::to_string(n1) + ": sparse LU failed: " + lu.lastErrorMessage());
      const Vec delta = lu.solve(r);
      u -= delta.head(nu);
      p -= delta.segment(nu, np);
      lambda -= delta.tail(nl);
    }
    if (!converged) {
      const Vec d = bdt * u + hist_d;
      const double rn = step_residual(ops, so, bdt, g, u, p, lambda, d, mass_history).norm();
      throw NewtonFailure("FOM Newton did not converge at step " + std::to_string(n1) +
                              " (residual " + std::to_string(rn) + ")",
                          n1, rn);
    }
    tr.u.col(k) = u;
    tr.p.col(k) = p;
    tr.lambda.col(k) = lambda;
    tr.d.col(k) = bdt * u + hist_d;
    tr.newton_iterations.push_back(it);
  }
  tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return tr;
}

}  // namespace strb
