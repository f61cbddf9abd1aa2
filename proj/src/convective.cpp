#include "strb/fom.hpp"

#include <cmath>
#include <map>
#include <tuple>

namespace strb {

void ConvectiveTensor::skew_symmetrize() {
  std::map<std::tuple<Index, Index, Index>, double> acc;
  for (const auto& e : entries) {
    acc[{e.i, e.j, e.m}] += 0.5 * e.value;
    acc[{e.i, e.m, e.j}] -= 0.5 * e.value;
  }
  entries.clear();
  for (const auto& [key, v] : acc) {
    if (v == 0.0) continue;
    entries.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  }
}

double ConvectiveTensor::frobenius_norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.value * e.value;
  return std::sqrt(s);
}

Vec eval_convective(const Vec& u, const ConvectiveTensor& c) {
  require_dims(u.size() == c.n, "eval_convective: u has " + std::to_string(u.size()) +
                                    " entries, tensor expects " + std::to_string(c.n));
  Vec out = Vec::Zero(c.n);
  for (const auto& e : c.entries) out[e.m] += e.value * u[e.i] * u[e.j];
  return out;
}

SpMat eval_convective_jacobian(const Vec& u, const ConvectiveTensor& c) {
  require_dims(u.size() == c.n, "eval_convective_jacobian");
  std::vector<Triplet> t;
  t.reserve(2 * c.entries.size());
  for (const auto& e : c.entries) {
    t.emplace_back(e.m, e.j, e.value * u[e.i]);
    t.emplace_back(e.m, e.i, e.value * u[e.j]);
  }
  SpMat J(c.n, c.n);
  J.setFromTriplets(t.begin(), t.end());
  return J;
}

}  // namespace strb
