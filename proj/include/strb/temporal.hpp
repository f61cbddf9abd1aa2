#pragma once

#include "strb/core.hpp"

namespace strb {

/// Discrete primitive of a padded sequence (length N_t + S, S leading
/// zeros): x_{n+1} = beta dt v_{n+1} + sum_s alpha_s x_{n+1-s}, x = 0 on the
/// padded slots. Returns the N_t trailing values.
Vec primitive_P0(const Vec& padded, const BdfScheme& scheme, double dt);

/// P0(E(psi)) column by column; psi has N_t rows.
Mat primitive_columns(const Mat& psi, const BdfScheme& scheme, double dt);

/// t_t = P0(E(1)): displacement of a unit constant velocity.
Vec time_ramp(Index n_t, const BdfScheme& scheme, double dt);

/// Response of the homogeneous recursion x_n = sum_r alpha_r x_{n-r} to a
/// unit initial value at slot 1-s (s = 1..S); column s-1, N_t rows.
Mat homogeneous_responses(Index n_t, const BdfScheme& scheme);

/// (G)_{ab} = sum_n a[n, a] b[n - s, b].
Mat shifted_gram(const Mat& a, const Mat& b, int s);

/// psi3(a, b, c) = sum_n psi[n,a] psi[n,b] psi[n,c], unfolded as an
/// n x n^2 matrix with column b + n c.
Mat triple_product(const Mat& psi);

}  // namespace strb
