#include "strb/solvers.hpp"
#include "strb/temporal.hpp"

#include <chrono>

namespace strb {

int SrbSolution::total_iterations() const {
  int n = 0;
  for (int k : iterations) n += k;
  return n;
}

SrbSolution SrbTfoSolver::solve(const ParameterSample& mu, const Mat& flow_rates, const NewtonConfig& cfg,
                                const InitialState* ic) const {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto& bar = m_.bar;
  const auto& sc = m_.scheme;
  const int S = sc.order;
  const Index nu = bar.M.rows(), np = bar.B.rows(), nl = bar.L.rows(), ns = nu + np + nl;
  const Index nt = flow_rates.cols();
  require_dims(flow_rates.rows() == bar.g.cols(), "one flow-rate row per Dirichlet boundary");
  const double bdt = m_.beta_dt();
  const MembraneCoefficients mt = derive_membrane_coefficients(mu.mu_m);

  const Mat mass = bar.M + mt[0] * bar.Ms;
  const Mat stiff = bar.A + bar.R;
  const Mat memb = mt[1] * bar.As1 + mt[2] * bar.As2 + m_.c_s * bar.Ms;
  Mat J0 = Mat::Zero(ns, ns);
  J0.topLeftCorner(nu, nu) = mass + bdt * stiff + (bdt * bdt) * memb;
  J0.block(0, nu, nu, np) = bdt * bar.B.transpose();
  J0.block(0, nu + np, nu, nl) = bdt * bar.L.transpose();
  J0.block(nu, 0, np, nu) = bdt * bar.B;
  J0.block(nu + np, 0, nl, nu) = bdt * bar.L;

  // initial data enters through the mass history and the displacement history
  const bool has_ic = ic && !ic->is_zero();
  std::vector<Vec> mass_ic, memb_ic;
  Mat hom;
  if (has_ic) {
    require_dims(static_cast<int>(ic->u.size()) >= S && static_cast<int>(ic->d.size()) >= S,
                 "initial state must supply S prior velocity and displacement states");
    const auto& lo = m_.lift;
    for (int s = 0; s < S; ++s) {
      const Vec& u = ic->u[static_cast<size_t>(s)];
      const Vec& d = ic->d[static_cast<size_t>(s)];
      mass_ic.push_back(lo.M * u + mt[0] * (lo.Ms * u));
      memb_ic.push_back(mt[1] * (lo.As1 * d) + mt[2] * (lo.As2 * d) + m_.c_s * (lo.Ms * d));
    }
    hom = homogeneous_responses(nt, sc);
  }

  SrbSolution out;
  out.u.resize(nu, nt);
  out.p.resize(np, nt);
  out.lambda.resize(nl, nt);
  Mat dbar(nu, nt);
  Vec u = has_ic ? Vec(m_.lift.Xu_phi.transpose() * ic->u[0]) : Vec::Zero(nu);
  Vec p = Vec::Zero(np), lambda = Vec::Zero(nl);

  Eigen::PartialPivLU<Mat> lu;
  if (cfg.mode == JacobianMode::Quasi) lu.compute(J0);
  for (Index k = 0; k < nt; ++k) {
    const Index n1 = k + 1;
    Vec hist_mass = Vec::Zero(nu), hist_d = Vec::Zero(nu), d_ic = Vec::Zero(nu);
    for (int s = 1; s <= S; ++s) {
      const double a = sc.alpha[static_cast<size_t>(s - 1)];
      if (n1 - s >= 1) {
        hist_mass += a * (mass * out.u.col(n1 - s - 1));
        hist_d += a * dbar.col(n1 - s - 1);
      } else if (has_ic) {
        hist_mass += a * mass_ic[static_cast<size_t>(s - n1)];
      }
      if (has_ic) d_ic += hom(k, s - 1) * memb_ic[static_cast<size_t>(s - 1)];
    }
    const Vec g = bar.g * flow_rates.col(k);
    const double scale = std::max({bdt * g.norm(), hist_mass.norm(), 1e-300});

    auto residual = [&]() {
      Vec r(ns);
      const Vec d = bdt * u + hist_d;
      Vec f = stiff * u + bar.B.transpose() * p + bar.L.transpose() * lambda + memb * d + d_ic;
      if (m_.conv.n_c > 0) f += eval_space_convective(u, m_.conv);
      r.head(nu) = mass * u - hist_mass + bdt * f;
      r.segment(nu, np) = bdt * (bar.B * u);
      r.tail(nl) = bdt * (bar.L * u - g);
      return r;
    };

    int it = 0;
    bool converged = false;
    double r0 = 0.0;
    for (;; ++it) {
      const Vec r = residual();
      const double rn = r.norm();
      if (it == 0) r0 = rn;
      if (rn == 0.0 || rn <= cfg.tau * r0 || rn <= 1e-14 * scale) {
        converged = true;
        break;
      }
      if (it >= cfg.max_iter) break;
      if (cfg.mode == JacobianMode::Full) {
        Mat J = J0;
        if (m_.conv.n_cJ > 0) J.topLeftCorner(nu, nu) += bdt * eval_space_convective_jacobian(u, m_.conv);
        lu.compute(J);
      }
      const Vec delta = lu.solve(r);
      if (!delta.allFinite()) throw SingularSystemError("SRB-TFO step " + std::to_string(n1) + ": singular Jacobian");
      u -= delta.head(nu);
      p -= delta.segment(nu, np);
      lambda -= delta.tail(nl);
    }
    out.converged = out.converged && converged;
    out.iterations.push_back(it);
    out.u.col(k) = u;
    out.p.col(k) = p;
    out.lambda.col(k) = lambda;
    dbar.col(k) = bdt * u + hist_d;
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace strb
