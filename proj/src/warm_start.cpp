#include "strb/io.hpp"
#include "strb/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace strb {

WarmStartKind parse_warm_start_kind(const std::string& s) {
  if (s == "zero") return WarmStartKind::Zero;
  if (s == "average") return WarmStartKind::Average;
  if (s == "knn") return WarmStartKind::Knn;
  if (s == "podi") return WarmStartKind::Podi;
  throw ConfigError("unknown warm-start strategy '" + s + "' (zero | average | knn | podi)");
}

std::string to_string(WarmStartKind k) {
  switch (k) {
    case WarmStartKind::Zero: return "zero";
    case WarmStartKind::Average: return "average";
    case WarmStartKind::Knn: return "knn";
    case WarmStartKind::Podi: return "podi";
  }
  return "zero";
}

NniWeighting parse_nni_weighting(const std::string& s) {
  if (s == "paper") return NniWeighting::Paper;
  if (s == "inverse") return NniWeighting::Inverse;
  throw ConfigError("unknown nni weighting '" + s + "' (paper | inverse)");
}

std::string to_string(NniWeighting w) { return w == NniWeighting::Paper ? "paper" : "inverse"; }

double thin_plate(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

WarmStartStore::WarmStartStore(std::vector<Vec> parameters, std::vector<Vec> coordinates, WarmStartConfig cfg)
    : params_(std::move(parameters)), coords_(std::move(coordinates)), cfg_(cfg) {
  if (params_.size() != coords_.size()) throw DimensionError("warm-start store: one coordinate vector per parameter");
  if (!coords_.empty()) {
    dim_ = coords_.front().size();
    const Index np = params_.front().size();
    for (size_t k = 0; k < params_.size(); ++k)
      require_dims(coords_[k].size() == dim_ && params_[k].size() == np, "warm-start store entries differ in size");
    lo_ = params_.front();
    Vec hi = lo_;
    for (const auto& p : params_) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    scale_ = (hi - lo_).unaryExpr([](double r) { return r > 0.0 ? 1.0 / r : 1.0; });
  }
  set_config(cfg);
}

void WarmStartStore::set_config(const WarmStartConfig& cfg) {
  if (cfg.kind == WarmStartKind::Knn && cfg.k < 1) throw ConfigError("knn warm start needs K >= 1");
  cfg_ = cfg;
  if (cfg_.kind == WarmStartKind::Podi && !params_.empty() && theta_.size() == 0) build_podi();
}

Vec WarmStartStore::normalized(const Vec& mu) const {
  require_dims(mu.size() == lo_.size(), "warm-start parameter length");
  return (mu - lo_).cwiseProduct(scale_);
}

void WarmStartStore::build_podi() {
  // coincident parameters would make Z singular: keep the first occurrence
  std::vector<Vec> xs;
  nodes_.clear();
  for (size_t k = 0; k < params_.size(); ++k) {
    const Vec x = normalized(params_[k]);
    bool dup = false;
    for (const auto& y : xs) dup = dup || (x - y).norm() == 0.0;
    if (dup) continue;
    xs.push_back(x);
    nodes_.push_back(static_cast<Index>(k));
  }
  const Index n = static_cast<Index>(nodes_.size());
  Mat Z(n, n), A(n, dim_);
  for (Index i = 0; i < n; ++i) {
    A.row(i) = coords_[static_cast<size_t>(nodes_[static_cast<size_t>(i)])].transpose();
    for (Index j = 0; j < n; ++j) Z(i, j) = thin_plate((xs[static_cast<size_t>(i)] - xs[static_cast<size_t>(j)]).norm());
  }
  Eigen::FullPivLU<Mat> lu(Z);
  if (!lu.isInvertible()) {
    lu.compute(Z + 1e-12 * Mat::Identity(n, n));
    if (!lu.isInvertible()) throw SingularSystemError("PODI kernel matrix is singular after jitter");
  }
  theta_ = lu.solve(A);
}

Vec WarmStartStore::operator()(const Vec& mu) const {
  if (cfg_.kind == WarmStartKind::Zero) return Vec::Zero(dim_);
  if (params_.empty()) throw ConfigError("warm start '" + to_string(cfg_.kind) + "' needs a nonempty store");
  switch (cfg_.kind) {
    case WarmStartKind::Average: {
      Vec s = Vec::Zero(dim_);
      for (const auto& c : coords_) s += c;
      return s / static_cast<double>(coords_.size());
    }
    case WarmStartKind::Knn: {
      const Vec x = normalized(mu);
      std::vector<std::pair<double, size_t>> dist;
      for (size_t k = 0; k < params_.size(); ++k) dist.emplace_back((normalized(params_[k]) - x).norm(), k);
      std::stable_sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      const size_t K = std::min(dist.size(), static_cast<size_t>(cfg_.k));
      if (dist.front().first == 0.0 || K == 1) return coords_[dist.front().second];
      std::vector<double> w(K);
      for (size_t i = 0; i < K; ++i)
        w[i] = cfg_.weighting == NniWeighting::Paper ? dist[i].first : 1.0 / dist[i].first;
      const double D = std::accumulate(w.begin(), w.end(), 0.0);
      Vec s = Vec::Zero(dim_);
      for (size_t i = 0; i < K; ++i) s += (w[i] / D) * coords_[dist[i].second];
      return s;
    }
    case WarmStartKind::Podi: {
      const Vec x = normalized(mu);
      Vec z(static_cast<Index>(nodes_.size()));
      for (Index i = 0; i < z.size(); ++i)
        z[i] = thin_plate((normalized(params_[static_cast<size_t>(nodes_[static_cast<size_t>(i)])]) - x).norm());
      return theta_.transpose() * z;
    }
    case WarmStartKind::Zero: break;
  }
  return Vec::Zero(dim_);
}

void WarmStartStore::store(const std::filesystem::path& dir) const {
  io::ensure_directory(dir);
  Mat P(params_.empty() ? 0 : params_.front().size(), static_cast<Index>(params_.size()));
  Mat C(dim_, static_cast<Index>(coords_.size()));
  for (size_t k = 0; k < params_.size(); ++k) {
    P.col(static_cast<Index>(k)) = params_[k];
    C.col(static_cast<Index>(k)) = coords_[k];
  }
  io::write_dense(dir / "parameters.bin", P);
  io::write_dense(dir / "coordinates.bin", C);
  io::KeyValues kv;
  kv["strategy"] = to_string(cfg_.kind);
  kv["k"] = std::to_string(cfg_.k);
  kv["nni_weighting"] = to_string(cfg_.weighting);
  kv["size"] = std::to_string(params_.size());
  io::write_key_values(dir / "warmstart.txt", kv);
}

WarmStartStore WarmStartStore::load(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "warmstart.txt")) throw IoError("missing warm-start store in " + dir.string());
  const auto kv = io::read_key_values(dir / "warmstart.txt");
  WarmStartConfig cfg;
  cfg.kind = parse_warm_start_kind(kv.at("strategy"));
  cfg.k = io::parse_index(kv, "k");
  cfg.weighting = parse_nni_weighting(kv.at("nni_weighting"));
  const Mat P = io::read_dense(dir / "parameters.bin");
  const Mat C = io::read_dense(dir / "coordinates.bin");
  if (P.cols() != C.cols() || P.cols() != io::parse_index(kv, "size"))
    throw ShapeMismatchError(dir.string() + ": warm-start arrays disagree with the manifest");
  std::vector<Vec> ps, cs;
  for (Index k = 0; k < P.cols(); ++k) {
    ps.push_back(P.col(k));
    cs.push_back(C.col(k));
  }
  return WarmStartStore(std::move(ps), std::move(cs), cfg);
}

}  // namespace strb
