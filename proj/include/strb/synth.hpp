#pragma once

#include "strb/fom.hpp"

#include <cstdint>

namespace strb {

/// Knobs of the synthetic operator generator. The graph is a chain over the
/// velocity DOFs plus random chords; every operator lives on that graph.
struct SynthConfig {
  Index n_u = 200;
  Index n_p = 40;
  std::vector<Index> n_lambda_per_boundary{4, 1};
  Index n_resistance = 1;
  double boundary_fraction = 0.2;  // share of velocity DOFs on the wall
  Index chords = 0;                // random chords, 0 means n_u / 4
  double density = 1.0;
  double viscosity = 1.0;
  double stiffness_shift = 0.05;
  double convection_scale = 0.5;
  double membrane_scale = 1e-3;
  double resistance_value = 0.5;
  double c_s = 0.0;
  std::uint64_t seed = 42;
};

/// Deterministic for a fixed seed. Throws ConfigError when [B; L] cannot have
/// full row rank or the sizes are otherwise inconsistent.
FomOperators synth_generate(const SynthConfig& cfg);

/// Smallest singular value of the stacked constraint block [B; L].
double constraint_min_singular_value(const FomOperators& ops);

/// Axis-aligned parameter box for flow and membrane parameters.
struct ParameterBox {
  Vec f_lo, f_hi;
  std::array<double, 4> m_lo{0.05, 1.08, 2e6, 0.35};
  std::array<double, 4> m_hi{0.15, 1.80, 6e6, 0.5};

  static ParameterBox tc1();
  bool contains(const ParameterSample& mu) const;
};

/// Uniform samples, deterministic for the seed.
std::vector<ParameterSample> sample_parameters(const ParameterBox& box, Index count, std::uint64_t seed);

}  // namespace strb
