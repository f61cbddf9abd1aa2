#include "strb/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace strb {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  // 53-bit uniform on [0, 1); avoids the implementation-defined std distributions
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Index below(Index n) { return static_cast<Index>(eng_() % static_cast<std::uint64_t>(n)); }
  template <class It>
  void shuffle(It first, It last) {
    for (auto n = last - first; n > 1; --n) std::iter_swap(first + (n - 1), first + below(n));
  }

 private:
  std::mt19937_64 eng_;
};

SpMat weighted_laplacian(Index n, const std::vector<std::pair<Index, Index>>& edges,
                         const std::vector<double>& w) {
  std::vector<Triplet> t;
  for (size_t e = 0; e < edges.size(); ++e) {
    auto [a, b] = edges[e];
    t.emplace_back(a, a, w[e]);
    t.emplace_back(b, b, w[e]);
    t.emplace_back(a, b, -w[e]);
    t.emplace_back(b, a, -w[e]);
  }
  SpMat L(n, n);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

SpMat diagonal(const Vec& d) {
  SpMat D(d.size(), d.size());
  std::vector<Triplet> t;
  for (Index i = 0; i < d.size(); ++i)
    if (d[i] != 0.0) t.emplace_back(i, i, d[i]);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

}  // namespace

FomOperators synth_generate(const SynthConfig& cfg) {
  const Index nu = cfg.n_u, np = cfg.n_p;
  const Index nl = std::accumulate(cfg.n_lambda_per_boundary.begin(), cfg.n_lambda_per_boundary.end(), Index{0});
  if (nu < 2) throw ConfigError("synth: n_u must be at least 2");
  if (np < 0) throw ConfigError("synth: n_p must be nonnegative");
  if (cfg.n_lambda_per_boundary.empty()) throw ConfigError("synth: at least one Dirichlet boundary required");
  for (Index k : cfg.n_lambda_per_boundary)
    if (k <= 0) throw ConfigError("synth: every Dirichlet boundary needs a multiplier");
  if (np + nl > nu)
    throw ConfigError("synth: n_p + n_lambda = " + std::to_string(np + nl) + " exceeds n_u = " +
                      std::to_string(nu) + "; [B; L] cannot have full row rank");
  if (!(cfg.boundary_fraction >= 0.0 && cfg.boundary_fraction <= 1.0))
    throw ConfigError("synth: boundary_fraction must lie in [0, 1]");
  if (cfg.n_resistance < 0) throw ConfigError("synth: n_resistance must be nonnegative");
  if (cfg.c_s < 0.0) throw ConfigError("synth: c_s must be nonnegative");

  Rng rng(cfg.seed);

  // graph: chain plus chords
  std::set<std::pair<Index, Index>> edge_set;
  for (Index i = 0; i + 1 < nu; ++i) edge_set.insert({i, i + 1});
  const Index chords = cfg.chords > 0 ? cfg.chords : nu / 4;
  for (Index c = 0; c < chords; ++c) {
    Index a = rng.below(nu), b = rng.below(nu);
    if (a == b) continue;
    edge_set.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<std::pair<Index, Index>> edges(edge_set.begin(), edge_set.end());
  std::vector<double> w(edges.size());
  for (auto& x : w) x = rng.uniform(0.5, 1.5);
  std::vector<std::vector<Index>> adj(static_cast<size_t>(nu));
  for (auto [a, b] : edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  const SpMat lap = weighted_laplacian(nu, edges, w);

  FomOperators ops;
  ops.A = cfg.viscosity * (lap + cfg.stiffness_shift * sparse_identity(nu));
  ops.M = cfg.density * (sparse_identity(nu) + 0.1 * lap);

  // private DOFs: boundary 0 at the start, the others at the end
  std::vector<Index> taken(static_cast<size_t>(nu), 0);
  std::vector<std::vector<Index>> dirichlet(cfg.n_lambda_per_boundary.size());
  {
    Index front = 0, back = nu - 1;
    for (size_t k = 0; k < cfg.n_lambda_per_boundary.size(); ++k)
      for (Index r = 0; r < cfg.n_lambda_per_boundary[k]; ++r) {
        const Index dof = k == 0 ? front++ : back--;
        dirichlet[k].push_back(dof);
        taken[static_cast<size_t>(dof)] = 1;
      }
  }
  std::vector<Index> free_dofs;
  for (Index i = 0; i < nu; ++i)
    if (!taken[static_cast<size_t>(i)]) free_dofs.push_back(i);
  std::vector<Index> shuffled = free_dofs;
  rng.shuffle(shuffled.begin(), shuffled.end());

  {
    std::vector<Triplet> t;
    for (Index r = 0; r < np; ++r) {
      const Index p = shuffled[static_cast<size_t>(r)];
      t.emplace_back(r, p, 1.0);
      const auto& nb = adj[static_cast<size_t>(p)];
      for (Index j : nb) t.emplace_back(r, j, -rng.uniform(0.1, 0.5) / static_cast<double>(nb.size()));
    }
    ops.B.resize(np, nu);
    ops.B.setFromTriplets(t.begin(), t.end());
  }
  {
    std::vector<Triplet> t;
    Index row = 0;
    for (const auto& dofs : dirichlet)
      for (Index d : dofs) {
        t.emplace_back(row, d, 1.0);
        for (Index j : adj[static_cast<size_t>(d)]) t.emplace_back(row, j, 0.1);
        ++row;
      }
    ops.L.resize(nl, nu);
    ops.L.setFromTriplets(t.begin(), t.end());
  }
  for (Index n : cfg.n_lambda_per_boundary) {
    Vec g(n);
    for (Index r = 0; r < n; ++r) {
      const double x = (static_cast<double>(r) + 0.5) / static_cast<double>(n);
      g[r] = x * (1.0 - x);
    }
    ops.g_space.push_back(g / g.sum());
  }

  // wall DOFs
  std::vector<Index> wall_pool = free_dofs;
  rng.shuffle(wall_pool.begin(), wall_pool.end());
  const Index n_wall = std::min<Index>(static_cast<Index>(free_dofs.size()),
                                       static_cast<Index>(std::llround(cfg.boundary_fraction * static_cast<double>(nu))));
  ops.boundary_dofs.assign(wall_pool.begin(), wall_pool.begin() + n_wall);
  std::sort(ops.boundary_dofs.begin(), ops.boundary_dofs.end());
  {
    Vec ms = Vec::Zero(nu);
    for (Index b : ops.boundary_dofs) ms[b] = rng.uniform(0.5, 1.5);
    ops.Ms = diagonal(ms);
    std::vector<std::pair<Index, Index>> wall_edges;
    std::vector<double> w1, w2;
    for (size_t k = 0; k + 1 < ops.boundary_dofs.size(); ++k) {
      wall_edges.push_back({ops.boundary_dofs[k], ops.boundary_dofs[k + 1]});
      w1.push_back(rng.uniform(0.5, 1.5));
      w2.push_back(rng.uniform(0.5, 1.5));
    }
    Vec shift1 = Vec::Zero(nu), shift2 = Vec::Zero(nu);
    for (Index b : ops.boundary_dofs) {
      shift1[b] = rng.uniform(0.1, 0.3);
      shift2[b] = rng.uniform(0.1, 0.3);
    }
    ops.As1 = cfg.membrane_scale * (weighted_laplacian(nu, wall_edges, w1) + diagonal(shift1));
    ops.As2 = cfg.membrane_scale * (weighted_laplacian(nu, wall_edges, w2) + diagonal(shift2));
  }
  ops.c_s = cfg.c_s;

  // resistance fluxes on patches next to the outlet end of the chain
  for (Index k = 0; k < cfg.n_resistance; ++k) {
    Vec q = Vec::Zero(nu);
    const Index width = std::min<Index>(5, nu);
    const Index start = std::max<Index>(0, nu - width * (k + 1) - (nl - cfg.n_lambda_per_boundary[0]));
    for (Index i = start; i < std::min(nu, start + width); ++i) q[i] = 1.0 / static_cast<double>(width);
    ops.resistance.push_back({cfg.resistance_value, q});
  }

  // local quadratic interactions along the graph, made energy neutral
  ops.C.n = nu;
  if (cfg.convection_scale != 0.0) {
    for (auto [a, b] : edges) {
      for (Index m : {a, b}) {
        ops.C.entries.push_back({a, b, m, cfg.convection_scale * rng.uniform(-1.0, 1.0)});
        ops.C.entries.push_back({b, a, m, cfg.convection_scale * rng.uniform(-1.0, 1.0)});
      }
      ops.C.entries.push_back({a, a, b, cfg.convection_scale * rng.uniform(-1.0, 1.0)});
    }
    ops.C.skew_symmetrize();
  }

  ops.Xu = ops.M + ops.A;
  {
    std::vector<Triplet> t;
    for (Index i = 0; i < np; ++i) {
      t.emplace_back(i, i, 1.2);
      if (i + 1 < np) {
        t.emplace_back(i, i + 1, 0.1);
        t.emplace_back(i + 1, i, 0.1);
      }
    }
    ops.Xp.resize(np, np);
    ops.Xp.setFromTriplets(t.begin(), t.end());
  }
  ops.Xd = ops.Ms;
  ops.check_shapes();

  const double smin = constraint_min_singular_value(ops);
  if (!(smin > 1e-8))
    throw NumericalError("synth: [B; L] is rank deficient (smallest singular value " + std::to_string(smin) + ")");
  return ops;
}

double constraint_min_singular_value(const FomOperators& ops) {
  Mat BL(ops.n_p() + ops.n_lambda(), ops.n_u());
  BL.topRows(ops.n_p()) = Mat(ops.B);
  BL.bottomRows(ops.n_lambda()) = Mat(ops.L);
  if (BL.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::BDCSVD<Mat> svd(BL);
  return svd.singularValues().minCoeff();
}

ParameterBox ParameterBox::tc1() {
  ParameterBox b;
  b.f_lo = Vec(3);
  b.f_hi = Vec(3);
  b.f_lo << 4.0, 0.1, 0.2;
  b.f_hi << 8.0, 0.3, 0.8;
  return b;
}

bool ParameterBox::contains(const ParameterSample& mu) const {
  if (mu.mu_f.size() != f_lo.size()) return false;
  for (Index i = 0; i < f_lo.size(); ++i)
    if (mu.mu_f[i] < f_lo[i] || mu.mu_f[i] > f_hi[i]) return false;
  for (size_t i = 0; i < 4; ++i)
    if (mu.mu_m[i] < m_lo[i] || mu.mu_m[i] > m_hi[i]) return false;
  return true;
}

std::vector<ParameterSample> sample_parameters(const ParameterBox& box, Index count, std::uint64_t seed) {
  require_dims(box.f_lo.size() == box.f_hi.size(), "parameter box bounds");
  Rng rng(seed);
  std::vector<ParameterSample> out;
  for (Index k = 0; k < count; ++k) {
    ParameterSample s;
    s.mu_f.resize(box.f_lo.size());
    for (Index i = 0; i < s.mu_f.size(); ++i) s.mu_f[i] = rng.uniform(box.f_lo[i], box.f_hi[i]);
    for (size_t i = 0; i < 4; ++i) s.mu_m[i] = rng.uniform(box.m_lo[i], box.m_hi[i]);
    out.push_back(s);
  }
  return out;
}

}  // namespace strb
