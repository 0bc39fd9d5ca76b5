#include "oscillab/estimates.hpp"

#include "oscillab/parallel.hpp"
#include "oscillab/random_fields.hpp"

#include <cmath>
#include <numeric>

namespace oscillab {

ScalingFit fit_power_law(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  if (xs.size() < 2) throw std::invalid_argument("fit_power_law: need at least two points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw std::invalid_argument("fit_power_law: values must be positive");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw std::invalid_argument("fit_power_law: xs must be strictly increasing");
  }
  const std::size_t n = xs.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(static_cast<long double>(xs[i]));
    my += std::log(static_cast<long double>(ys[i]));
  }
  mx /= n;
  my /= n;
  long double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = std::log(static_cast<long double>(xs[i])) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(static_cast<long double>(ys[i])) - my);
  }
  ScalingFit fit;
  fit.slope = static_cast<double>(sxy / sxx);
  fit.intercept = static_cast<double>(my - sxy / sxx * mx);
  long double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double r = std::log(static_cast<long double>(ys[i])) - (fit.intercept + fit.slope * std::log(static_cast<long double>(xs[i])));
    rss += r * r;
  }
  fit.residual = static_cast<double>(std::sqrt(rss / n));
  fit.xs = std::move(xs);
  fit.ys = std::move(ys);
  return fit;
}

// ---------------------------------------------------------------------------
// Quadrilinear forms

namespace {

int eigenspace_of(const SpectralField& e) {
  const Eigen::VectorXi levels = mode_levels(e.dim(), e.extent());
  int found = -1;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e.coeffs()[i] == std::complex<double>(0)) continue;
    if (found >= 0 && levels[i] != found) throw std::invalid_argument("field is not in a single eigenspace");
    found = levels[i];
  }
  if (found < 0) return -1;
  return 2 * found + e.dim();
}

}  // namespace

QuadTuple QuadTuple::modes(int dim, int extent, const std::array<MultiIndex, 4>& m) {
  QuadTuple t;
  for (int i = 0; i < 4; ++i) {
    t.e[i] = SpectralField::single_mode(dim, extent, m[i]);
    t.mu_sq[i] = static_cast<int>(eigenvalue(m[i], dim));
  }
  return t;
}

void QuadTuple::validate() const {
  for (int i = 0; i < 4; ++i) {
    const SpectralField& f = e[i];
    if (f.dim() != e[0].dim()) throw std::invalid_argument("QuadTuple: dimension mismatch");
    if (f.coeffs().imag().cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("QuadTuple: slot " + std::to_string(i + 1) + " is not real");
    const auto [p, invalid] = project_eigenspace(f, mu_sq[i]);
    if (invalid || (p.coeffs() - f.coeffs()).norm() > 1e-12 * std::max(1.0, f.norm()))
      throw std::invalid_argument("QuadTuple: slot " + std::to_string(i + 1) + " is not in eigenspace " +
                                  std::to_string(mu_sq[i]));
  }
}

int resonance_denominator(const std::array<int, 4>& mu_sq) { return mu_sq[0] - mu_sq[1] - mu_sq[2] - mu_sq[3]; }

QuadLab::QuadLab(int dim, int max_degree) : basis_(dim, max_degree, 1) {
  const auto& x = basis_.rule(Grid::product).nodes;
  const Eigen::Index q = x.size();
  Eigen::Index n = 1;
  for (int j = 0; j < dim; ++j) n *= q;
  radius_sq_ = VectorX<LabScalar>::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index rest = i;
    for (int j = 0; j < dim; ++j) {
      radius_sq_[i] += x[rest % q] * x[rest % q];
      rest /= q;
    }
  }
}

LabSample QuadLab::sample(const SpectralField& e) const {
  if (e.dim() != dim()) throw std::invalid_argument("QuadLab: dimension mismatch");
  if (e.extent() > basis_.extent())
    throw std::length_error("QuadLab: field degree " + std::to_string(e.extent() - 1) + " exceeds lab degree " +
                            std::to_string(max_degree()));
  if (e.size() && e.coeffs().imag().cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("QuadLab: eigenfunctions must have real coefficients");
  const LabField f = e.cast<LabScalar>();
  LabSample s;
  s.value = synthesize(basis_, f, Grid::product).values.real();
  for (int a = 0; a < dim(); ++a) {
    const PWord d({Letter{LetterKind::grad, a}});
    s.grad[a] = synthesize(basis_, apply_P(d, f).field, Grid::product).values.real();
  }
  return s;
}

LabScalar QuadLab::integrate(const VectorX<LabScalar>& f) const {
  return integrate_tensor<LabScalar>(f, dim(), basis_.rule(Grid::product).function_weights);
}

LabScalar QuadLab::L0(const std::array<const LabSample*, 4>& s) const {
  const VectorX<LabScalar> f = s[0]->value.cwiseProduct(s[1]->value).cwiseProduct(s[2]->value).cwiseProduct(s[3]->value);
  return integrate(f);
}

LabScalar QuadLab::L1_plus_weight(const std::array<const LabSample*, 4>& s) const {
  VectorX<LabScalar> f =
      radius_sq_.cwiseProduct(s[0]->value).cwiseProduct(s[1]->value).cwiseProduct(s[2]->value).cwiseProduct(s[3]->value);
  static constexpr int pairs[3][3] = {{1, 2, 3}, {1, 3, 2}, {2, 3, 1}};
  for (const auto& p : pairs) {
    VectorX<LabScalar> dot = VectorX<LabScalar>::Zero(f.size());
    for (int a = 0; a < dim(); ++a) dot += s[p[0]]->grad[a].cwiseProduct(s[p[1]]->grad[a]);
    f += dot.cwiseProduct(s[p[2]]->value).cwiseProduct(s[0]->value);
  }
  return integrate(f);
}

IdentityCheck QuadLab::verify(const std::array<const LabSample*, 4>& s, const std::array<int, 4>& mu_sq) const {
  const int den = resonance_denominator(mu_sq);
  if (den == 0) throw ResonantTuple();
  IdentityCheck c;
  c.mu_sq = mu_sq;
  c.L0 = L0(s);
  c.L1_plus_weight = L1_plus_weight(s);
  c.rhs = LabScalar(-2) / LabScalar(den) * c.L1_plus_weight;
  c.residual = static_cast<double>(std::abs(c.L0 - c.rhs) / (std::abs(c.L0) + kIdentityEpsilon));
  return c;
}

LabScalar QuadLab::quad_L0(const QuadTuple& t) const {
  t.validate();
  const std::array<LabSample, 4> s{sample(t.e[0]), sample(t.e[1]), sample(t.e[2]), sample(t.e[3])};
  return L0({&s[0], &s[1], &s[2], &s[3]});
}

LabScalar QuadLab::quad_L1_plus_weight(const QuadTuple& t) const {
  t.validate();
  const std::array<LabSample, 4> s{sample(t.e[0]), sample(t.e[1]), sample(t.e[2]), sample(t.e[3])};
  return L1_plus_weight({&s[0], &s[1], &s[2], &s[3]});
}

IdentityCheck QuadLab::verify_identity_k1(const QuadTuple& t) const {
  t.validate();
  if (is_resonant(t.mu_sq)) throw ResonantTuple();
  const std::array<LabSample, 4> s{sample(t.e[0]), sample(t.e[1]), sample(t.e[2]), sample(t.e[3])};
  return verify({&s[0], &s[1], &s[2], &s[3]}, t.mu_sq);
}

IdentityScanResult identity_scan_1d(int max_degree) {
  const QuadLab lab(1, max_degree);
  std::vector<LabSample> samples;
  for (int m = 0; m <= max_degree; ++m)
    samples.push_back(lab.sample(SpectralField::single_mode(1, max_degree + 1, MultiIndex{m})));
  IdentityScanResult out;
  for (int a = 0; a <= max_degree; ++a)
    for (int b = 0; b <= max_degree; ++b)
      for (int c = 0; c <= max_degree; ++c)
        for (int d = 0; d <= max_degree; ++d) {
          const std::array<int, 4> mu{2 * a + 1, 2 * b + 1, 2 * c + 1, 2 * d + 1};
          if (is_resonant(mu)) {
            ++out.resonant;
            continue;
          }
          out.checks.push_back(lab.verify({&samples[a], &samples[b], &samples[c], &samples[d]}, mu));
          out.worst_residual = std::max(out.worst_residual, out.checks.back().residual);
        }
  return out;
}

IdentityScanResult identity_scan_random(int dim, int mu_sq_max, int trials, std::uint64_t seed) {
  if (mu_sq_max < dim) throw std::invalid_argument("identity_scan_random: mu_sq_max below the ground state");
  if (trials < 1) throw std::invalid_argument("identity_scan_random: trials must be >= 1");
  const int max_level = (mu_sq_max - dim) / 2;
  const QuadLab lab(dim, std::max(1, max_level));
  IdentityScanResult out;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, {0x1de7ULL, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(trial)});
    std::uniform_int_distribution<int> level(0, max_level);
    std::array<int, 4> mu{};
    for (;;) {
      for (int& m : mu) m = 2 * level(rng) + dim;
      if (!is_resonant(mu)) break;
      ++out.resonant;
    }
    std::array<LabSample, 4> s;
    for (int i = 0; i < 4; ++i) s[i] = lab.sample(random_eigenfunction(dim, lab.max_degree() + 1, mu[i], rng));
    out.checks.push_back(lab.verify({&s[0], &s[1], &s[2], &s[3]}, mu));
    out.worst_residual = std::max(out.worst_residual, out.checks.back().residual);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Almost orthogonality

int orthogonality_threshold(const std::array<int, 3>& partner_mu_sq, double C0) {
  if (!(C0 > 0.0)) throw std::invalid_argument("C0 must be positive");
  const double sum = double(partner_mu_sq[0]) + partner_mu_sq[1] + partner_mu_sq[2];
  return static_cast<int>(std::ceil(C0 * sum - 1e-9));
}

OrthogonalityScan almost_orthogonality_scan(const std::vector<int>& mu1_sq_list, const std::array<SpectralField, 3>& partners,
                                            int max_degree, double C0, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("almost_orthogonality_scan: trials must be >= 1");
  if (mu1_sq_list.size() < 3) throw std::length_error("almost_orthogonality_scan: window needs at least 3 points");
  const int dim = partners[0].dim();
  std::array<int, 3> partner_mu{};
  for (int i = 0; i < 3; ++i) {
    partner_mu[i] = eigenspace_of(partners[i]);
    if (partner_mu[i] < 0) throw std::invalid_argument("almost_orthogonality_scan: zero partner field");
  }
  const int threshold = orthogonality_threshold(partner_mu, C0);
  for (std::size_t i = 0; i < mu1_sq_list.size(); ++i) {
    const int mu = mu1_sq_list[i];
    if (i > 0 && mu <= mu1_sq_list[i - 1]) throw std::invalid_argument("almost_orthogonality_scan: list must increase");
    if (mu < threshold)
      throw std::invalid_argument("almost_orthogonality_scan: mu1^2 = " + std::to_string(mu) +
                                  " violates mu1^2 >= C0 (mu2^2 + mu3^2 + mu4^2) = " + std::to_string(threshold));
    if ((mu - dim) % 2 != 0) throw std::invalid_argument("almost_orthogonality_scan: " + std::to_string(mu) + " is not an eigenvalue");
    if ((mu - dim) / 2 > max_degree) throw std::length_error("almost_orthogonality_scan: mu1^2 beyond the truncation");
  }
  const QuadLab lab(dim, max_degree);
  const std::array<LabSample, 3> ps{lab.sample(partners[0]), lab.sample(partners[1]), lab.sample(partners[2])};
  OrthogonalityScan out;
  std::vector<double> fx, fy;
  for (int mu : mu1_sq_list) {
    double best = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng = make_rng(seed, {0x0a7ULL, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(mu),
                                static_cast<std::uint64_t>(trial)});
      const LabSample s1 = lab.sample(random_eigenfunction(dim, max_degree + 1, mu, rng));
      best = std::max(best, static_cast<double>(std::abs(lab.L0({&s1, &ps[0], &ps[1], &ps[2]}))));
    }
    out.mu1_sq.push_back(mu);
    out.lambda1.push_back(std::sqrt(double(mu)));
    out.max_abs_L0.push_back(best);
    if (best > 0.0) {
      fx.push_back(out.lambda1.back());
      fy.push_back(best);
    }
  }
  out.parity_zero = fx.empty();
  if (fx.size() >= 3) out.fit = fit_power_law(fx, fy);
  return out;
}

// ---------------------------------------------------------------------------
// Energy increments and growth

double local_time(const SpectralField& u0, const IOperatorSpec& spec) {
  const double h1 = sobolev_norm(apply_I(u0, spec), 1.0);
  if (h1 == 0.0) return 1.0;
  return std::min(1.0, 1.0 / (h1 * h1));
}

EnergyIncrementResult energy_increment_scan(const HermiteBasis& basis, const SpectralField& u0, double s,
                                            const std::vector<double>& N_list, const SolverConfig& cfg) {
  if (N_list.empty()) throw std::invalid_argument("energy_increment_scan: empty N list");
  for (std::size_t i = 1; i < N_list.size(); ++i)
    if (!(N_list[i] > N_list[i - 1])) throw std::invalid_argument("energy_increment_scan: N list must increase");
  const NlsSolver solver(basis, cfg.nonlinearity);
  std::vector<IOperatorSpec> specs;
  EnergyIncrementResult out;
  std::vector<double> e0;
  double horizon = 0.0;
  for (double N : N_list) {
    specs.push_back(IOperatorSpec{N, s});
    specs.back().validate();
    out.N.push_back(N);
    out.delta.push_back(local_time(u0, specs.back()));
    out.increment.push_back(0.0);
    e0.push_back(modified_energy(basis, u0, specs.back(), cfg.nonlinearity, Grid::collocation));
    horizon = std::max(horizon, out.delta.back());
  }
  if (!(cfg.dt > 0.0) || cfg.record_every < 1) throw std::invalid_argument("energy_increment_scan: bad solver config");
  const long long steps = static_cast<long long>(std::ceil(horizon / cfg.dt - 1e-9));
  SpectralField u = u0;
  out.max_spillage = boundary_spillage(u);
  for (long long k = 1; k <= steps; ++k) {
    u = solver.step(u, cfg.dt, cfg.scheme);
    if (k % cfg.record_every != 0 && k != steps) continue;
    const double t = k * cfg.dt;
    out.max_spillage = std::max(out.max_spillage, boundary_spillage(u));
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (t > out.delta[i] + 1e-12) continue;
      const double e = modified_energy(basis, u, specs[i], cfg.nonlinearity, Grid::collocation);
      out.increment[i] = std::max(out.increment[i], std::abs(e - e0[i]));
    }
  }
  out.tainted = out.max_spillage > cfg.taint_threshold;
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.increment.size(); ++i)
    if (!(out.increment[i] < out.increment[i - 1])) out.strictly_decreasing = false;
  const bool positive = std::all_of(out.increment.begin(), out.increment.end(), [](double v) { return v > 0.0; });
  if (positive && out.N.size() >= 2) {
    out.fit = fit_power_law(out.N, out.increment);
    out.alpha = -out.fit->slope;
  }
  return out;
}

double growth_bound(int dim, double s) {
  if (dim == 2) return 2.0 / 3.0 * (s - 1.0) + 0.2;
  if (dim == 3) return (s - 1.0) + 0.2;
  return std::numeric_limits<double>::quiet_NaN();
}

NormGrowthResult norm_growth_experiment(const HermiteBasis& basis, const SpectralField& u0, double s,
                                        const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.T < 100 * cfg.dt) throw std::invalid_argument("norm_growth_experiment: T must be at least 100 dt");
  const NlsSolver solver(basis, cfg.nonlinearity);
  NormGrowthResult out;
  SpectralField u = u0;
  double running = sobolev_norm(u, s);
  out.max_spillage = boundary_spillage(u);
  out.t.push_back(0.0);
  out.norm.push_back(running);
  out.running_max.push_back(running);
  const long long n = cfg.steps();
  std::vector<double> fx, fy;
  for (long long k = 1; k <= n; ++k) {
    u = solver.step(u, cfg.dt, cfg.scheme);
    if (k % cfg.record_every != 0 && k != n) continue;
    const double t = k * cfg.dt;
    const double v = sobolev_norm(u, s);
    if (!std::isfinite(v)) throw std::runtime_error("norm_growth_experiment: non-finite norm");
    running = std::max(running, v);
    out.max_spillage = std::max(out.max_spillage, boundary_spillage(u));
    out.t.push_back(t);
    out.norm.push_back(v);
    out.running_max.push_back(running);
    fx.push_back(1.0 + t);
    fy.push_back(running);
  }
  out.tainted = out.max_spillage > cfg.taint_threshold;
  out.fit = fit_power_law(fx, fy);
  out.exponent = out.fit.slope;
  out.bound = growth_bound(basis.dim(), s);
  out.consistent = std::isnan(out.bound) || out.exponent <= out.bound;
  return out;
}

}  // namespace oscillab
