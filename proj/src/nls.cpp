#include "oscillab/nls.hpp"

#include <cmath>

namespace oscillab {

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("T must be positive");
  if (dt > T) throw std::invalid_argument("dt must not exceed T");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (!std::isfinite(nonlinearity)) throw std::invalid_argument("nonlinearity must be finite");
  if (!(taint_threshold > 0.0)) throw std::invalid_argument("taint_threshold must be positive");
}

long long SolverConfig::steps() const { return std::max<long long>(1, std::llround(T / dt)); }

SpectralField linear_propagator(const SpectralField& u, double t) {
  const Eigen::VectorXi levels = mode_levels(u.dim(), u.extent());
  const int top = levels.size() ? levels.maxCoeff() : 0;
  std::vector<std::complex<double>> phase(top + 1);
  for (int l = 0; l <= top; ++l) phase[l] = std::polar(1.0, -(2.0 * l + u.dim()) * t);
  SpectralField out = u;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.coeffs()[i] *= phase[levels[i]];
  return out;
}

GridField nonlinear_phase_step(const GridField& values, double dt, double nonlinearity) {
  GridField out = values;
  for (auto& v : out.values) v *= std::polar(1.0, -nonlinearity * std::norm(v) * dt);
  return out;
}

double mass(const SpectralField& u) { return u.coeffs().squaredNorm(); }

double energy(const HermiteBasis& basis, const SpectralField& u, double nonlinearity, Grid grid) {
  const double s1 = sobolev_norm(u, 1.0);
  double quartic = 0.0;
  if (nonlinearity != 0.0) {
    const GridField g = synthesize(basis, u, grid);
    const Eigen::VectorXd p = g.values.cwiseAbs2().array().square();
    quartic = integrate(basis, grid, p);
  }
  return 0.5 * s1 * s1 + 0.25 * nonlinearity * quartic;
}

double modified_energy(const HermiteBasis& basis, const SpectralField& u, const IOperatorSpec& spec,
                       double nonlinearity, Grid grid) {
  return energy(basis, apply_I(u, spec), nonlinearity, grid);
}

double boundary_spillage(const SpectralField& u) {
  const Eigen::VectorXi maxdeg = mode_max_degrees(u.dim(), u.extent());
  double edge = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (maxdeg[i] == u.extent() - 1) edge += std::norm(u.coeffs()[i]);
  const double total = u.coeffs().squaredNorm();
  return total > 0.0 ? edge / total : 0.0;
}

NlsSolver::NlsSolver(const HermiteBasis& basis, double nonlinearity) : basis_(basis), g_(nonlinearity) {}

SpectralField NlsSolver::nonlinear_step(const SpectralField& u, double dt) const {
  if (g_ == 0.0) return u;
  return analyze(nonlinear_phase_step(synthesize(basis_, u), dt, g_), basis_);
}

SpectralField NlsSolver::strang_step(const SpectralField& u, double dt) const {
  return linear_propagator(nonlinear_step(linear_propagator(u, dt / 2), dt), dt / 2);
}

SpectralField NlsSolver::lie_step(const SpectralField& u, double dt) const {
  return nonlinear_step(linear_propagator(u, dt), dt);
}

SpectralField NlsSolver::step(const SpectralField& u, double dt, Scheme scheme) const {
  return scheme == Scheme::strang ? strang_step(u, dt) : lie_step(u, dt);
}

EnergyReport NlsSolver::report(double t, const SpectralField& u, const SolverConfig& cfg,
                               const IOperatorSpec& spec) const {
  EnergyReport r;
  r.t = t;
  r.mass = mass(u);
  r.energy = energy(basis_, u, g_, Grid::collocation);
  r.modified_energy = modified_energy(basis_, u, spec, g_, Grid::collocation);
  for (double s : cfg.sobolev_orders) r.hs_norms.push_back(sobolev_norm(u, s));
  return r;
}

EvolveResult NlsSolver::evolve(const SpectralField& u0, const SolverConfig& cfg, const IOperatorSpec& spec) const {
  cfg.validate();
  spec.validate();
  if (u0.dim() != basis_.dim() || u0.extent() != basis_.extent())
    throw std::invalid_argument("evolve: initial data does not match the basis");
  EvolveResult out;
  SpectralField u = u0;
  const long long n = cfg.steps();
  out.reports.push_back(report(0.0, u, cfg, spec));
  out.max_spillage = boundary_spillage(u);
  for (long long k = 1; k <= n; ++k) {
    u = step(u, cfg.dt, cfg.scheme);
    if (k % cfg.record_every == 0 || k == n) {
      if (!u.coeffs().allFinite()) throw std::runtime_error("evolve: non-finite coefficients");
      out.max_spillage = std::max(out.max_spillage, boundary_spillage(u));
      out.reports.push_back(report(static_cast<double>(k) * cfg.dt, u, cfg, spec));
    }
  }
  out.tainted = out.max_spillage > cfg.taint_threshold;
  out.final_state = std::move(u);
  return out;
}

}  // namespace oscillab
