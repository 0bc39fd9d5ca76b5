#include "oscillab/random_fields.hpp"

#include "oscillab/spectral_ops.hpp"

#include <vector>

namespace oscillab {

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (stream.size() + 1));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

int localized_extent(int dim, long long N) {
  if (!is_dyadic(N)) throw std::invalid_argument("localized_extent: N must be dyadic");
  // lambda^2 = 2|m| + d < 2 N^2
  const long long max_degree = (2 * N * N - 1 - dim) / 2;
  return static_cast<int>(std::max<long long>(max_degree, 0) + 1);
}

SpectralField random_localized(int dim, int extent, long long N, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField u(dim, extent);
  const Eigen::VectorXi levels = mode_levels(dim, extent);
  const double n_sq = double(N) * double(N);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double lambda_sq = 2.0 * levels[i] + dim;
    const double re = gauss(rng);
    const double im = gauss(rng);
    if (LPProfile::psi(lambda_sq / n_sq) != 0.0) u.coeffs()[i] = {re, im};
  }
  u = littlewood_paley(u, N);
  const double norm = u.norm();
  if (norm == 0.0) throw std::runtime_error("random_localized: Delta_N window is empty for this extent");
  u.coeffs() /= norm;
  return u;
}

SpectralField random_eigenfunction(int dim, int extent, int mu_sq, Rng& rng, bool real) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField u(dim, extent);
  const Eigen::VectorXi levels = mode_levels(dim, extent);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (2 * levels[i] + dim != mu_sq) continue;
    const double re = gauss(rng);
    const double im = real ? 0.0 : gauss(rng);
    u.coeffs()[i] = {re, im};
  }
  const double norm = u.norm();
  if (norm == 0.0) throw std::invalid_argument("random_eigenfunction: no modes with this eigenvalue");
  u.coeffs() /= norm;
  return u;
}

SpectralField mixed_mode_data(int dim, int extent, double amplitude, double decay, int max_level,
                              std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x1d474ULL});
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField u(dim, extent);
  const Eigen::VectorXi levels = mode_levels(dim, extent);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    if (levels[i] > max_level) continue;
    const double scale = std::pow(2.0 * levels[i] + dim, -decay / 2.0);
    u.coeffs()[i] = {re * scale, im * scale};
  }
  const double norm = u.norm();
  if (norm == 0.0) throw std::invalid_argument("mixed_mode_data: empty support");
  u.coeffs() *= amplitude / norm;
  return u;
}

}  // namespace oscillab
