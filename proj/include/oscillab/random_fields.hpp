#pragma once

// Seeded random coefficient fields. Every draw is keyed by (seed, stream ids) so
// that trial i of a scan never depends on how many trials were requested.

#include "oscillab/hermite.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace oscillab {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

/// i.i.d. standard complex Gaussian coefficients on the support of psi(H/N^2),
/// then Delta_N applied and the result normalized to unit L2 norm.
SpectralField random_localized(int dim, int extent, long long N, Rng& rng);

/// Smallest box extent holding the whole Delta_N window in dimension dim.
int localized_extent(int dim, long long N);

/// Random unit-norm element of the eigenspace {2|m|+d = mu_sq}. Real
/// coefficients when `real` is set (eigenfunctions entering quadrilinear forms).
SpectralField random_eigenfunction(int dim, int extent, int mu_sq, Rng& rng, bool real = true);

/// Smooth multi-mode initial data: c_m = g_m (2|m|+d)^{-decay/2} for |m| <= max_level,
/// g_m standard complex Gaussian, scaled to the requested L2 norm.
SpectralField mixed_mode_data(int dim, int extent, double amplitude, double decay, int max_level,
                              std::uint64_t seed);

}  // namespace oscillab
