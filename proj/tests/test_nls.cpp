#include "doctest.h"

#include "oscillab/nls.hpp"
#include "oscillab/random_fields.hpp"

#include <cmath>
#include <numbers>

using namespace oscillab;

namespace {

constexpr double pi = std::numbers::pi;

double max_diff(const SpectralField& a, const SpectralField& b) {
  return (a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff();
}

double max_energy_drift(const HermiteBasis& basis, const SpectralField& u0, double dt, double T) {
  const NlsSolver solver(basis);
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.T = T;
  cfg.record_every = 1;
  const EvolveResult r = solver.evolve(u0, cfg, IOperatorSpec{1e6, 2.0});
  double drift = 0;
  for (const auto& rep : r.reports) drift = std::max(drift, std::abs(rep.energy - r.reports[0].energy));
  return drift;
}

}  // namespace

TEST_CASE("linear propagator") {
  const SpectralField u = mixed_mode_data(2, 10, 1.3, 1.0, 18, 3);
  CHECK(linear_propagator(u, 0.0).coeffs() == u.coeffs());
  const SpectralField v = linear_propagator(u, 0.73);
  CHECK(std::abs(v.norm() - u.norm()) < 1e-15);
  for (int dim : {1, 2, 3}) {
    const SpectralField w = mixed_mode_data(dim, 6, 1.0, 0.0, 12, 7 + dim);
    SpectralField expect = w;
    expect.coeffs() *= std::polar(1.0, -dim * pi);
    CAPTURE(dim);
    CHECK(max_diff(linear_propagator(w, pi), expect) < 1e-12);
  }
  const SpectralField h = SpectralField::single_mode(1, 6, MultiIndex{4}, {0.6, 0.8});
  for (double t : {0.1, 1.0, 17.0}) CHECK(std::abs(std::abs(linear_propagator(h, t)[MultiIndex{4}]) - 1.0) < 1e-15);
}

TEST_CASE("nonlinear phase step") {
  GridField g{Grid::collocation, 1, 3, Eigen::VectorXcd(3)};
  g.values << std::complex<double>(1, 0), std::complex<double>(0.3, -2), std::complex<double>(0, 0);
  const GridField a = nonlinear_phase_step(g, 0.37);
  CHECK((a.values.cwiseAbs() - g.values.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(nonlinear_phase_step(g, 0.0).values == g.values);
  const GridField b = nonlinear_phase_step(g, pi);
  CHECK(std::abs(b.values[0] - std::complex<double>(-1, 0)) < 1e-15);
}

TEST_CASE("splitting steps") {
  const HermiteBasis basis(2, 12);
  const SpectralField u = mixed_mode_data(2, basis.extent(), 1.0, 3.0, 6, 17);

  SUBCASE("zero nonlinearity is the linear flow") {
    const NlsSolver linear(basis, 0.0);
    CHECK(max_diff(linear.strang_step(u, 0.01), linear_propagator(u, 0.01)) < 1e-14);
    CHECK(max_diff(linear.lie_step(u, 0.01), linear_propagator(u, 0.01)) < 1e-14);
  }
  SUBCASE("Strang step is symmetric") {
    const NlsSolver solver(basis);
    CHECK(max_diff(solver.strang_step(solver.strang_step(u, 0.02), -0.02), u) < 1e-10);
  }
  SUBCASE("mass is conserved over 10^4 steps") {
    const HermiteBasis b1(1, 16);
    const SpectralField w = mixed_mode_data(1, b1.extent(), 1.5, 2.0, 8, 2);
    const NlsSolver solver(b1);
    SpectralField cur = w;
    for (int k = 0; k < 10000; ++k) cur = solver.strang_step(cur, 1e-3);
    CHECK(std::abs(mass(cur) - mass(w)) / mass(w) < 1e-8);
  }
  SUBCASE("time reversal of the full scheme") {
    const NlsSolver solver(basis);
    SpectralField cur = u;
    for (int k = 0; k < 500; ++k) cur = solver.strang_step(cur, 2e-3);
    for (int k = 0; k < 500; ++k) cur = solver.strang_step(cur, -2e-3);
    CHECK(max_diff(cur, u) < 1e-7);
  }
}

TEST_CASE("energy functionals") {
  const HermiteBasis basis(1, 16);
  const SpectralField h0 = SpectralField::single_mode(1, basis.extent(), MultiIndex{0});
  const double expect = 0.5 + 0.25 / std::sqrt(2 * pi);
  CHECK(std::abs(energy(basis, h0) - expect) < 1e-15);
  CHECK(std::abs(modified_energy(basis, h0, IOperatorSpec{1.0, 2.0}) - expect) < 1e-15);
  CHECK(modified_energy(basis, basis.zero_field(), IOperatorSpec{2.0, 1.5}) == 0.0);
  // N above the largest eigenvalue: I is the identity.
  const SpectralField u = mixed_mode_data(1, basis.extent(), 1.0, 1.0, 16, 4);
  CHECK(modified_energy(basis, u, IOperatorSpec{6.0, 2.0}) == energy(basis, u));
  CHECK(mass(u) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("evolve") {
  SUBCASE("small data: energy constant over T = 10") {
    const HermiteBasis basis(1, 16);
    SpectralField u0 = SpectralField::single_mode(1, basis.extent(), MultiIndex{0}, 0.01);
    const NlsSolver solver(basis);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 10;
    cfg.record_every = 10;
    cfg.sobolev_orders = {1.0, 2.0};
    const EvolveResult r = solver.evolve(u0, cfg, IOperatorSpec{2.0, 1.5});
    CHECK_FALSE(r.tainted);
    REQUIRE(r.reports.size() == 101);
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      CHECK(r.reports[i].t == doctest::Approx(i * 0.1).epsilon(1e-12));
      CHECK(std::abs(r.reports[i].energy - r.reports[0].energy) < 1e-9);
      CHECK(std::abs(r.reports[i].mass - r.reports[0].mass) < 1e-8 * r.reports[0].mass);
      CHECK(r.reports[i].hs_norms.size() == 2);
    }
  }
  SUBCASE("energy drift is second order") {
    const HermiteBasis basis(2, 16);
    const SpectralField u0 = mixed_mode_data(2, basis.extent(), 1.0, 4.0, 5, 8);
    const double a = max_energy_drift(basis, u0, 0.02, 2.0);
    const double b = max_energy_drift(basis, u0, 0.01, 2.0);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(a / b == doctest::Approx(4.0).epsilon(0.2));
  }
  SUBCASE("boundary content taints the run") {
    const HermiteBasis basis(1, 8);
    const SpectralField u0 = mixed_mode_data(1, basis.extent(), 2.0, 0.0, 8, 1);
    const NlsSolver solver(basis);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.T = 0.1;
    const EvolveResult r = solver.evolve(u0, cfg, IOperatorSpec{2.0, 1.5});
    CHECK(r.tainted);
    CHECK(r.max_spillage > cfg.taint_threshold);
  }
  SUBCASE("config validation") {
    SolverConfig cfg;
    cfg.dt = 2.0;
    cfg.T = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg.dt = 0.1;
    cfg.record_every = 0;
    CHECK_THROWS(cfg.validate());
  }
}
