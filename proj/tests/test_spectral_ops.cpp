#include "doctest.h"

#include "oscillab/random_fields.hpp"
#include "oscillab/spectral_ops.hpp"

#include <cmath>

using namespace oscillab;

namespace {

SpectralField random_field(int dim, int extent, std::uint64_t seed, int max_level) {
  return mixed_mode_data(dim, extent, 1.0, 0.0, max_level, seed);
}

double diff(const SpectralField& a, const SpectralField& b) {
  const int e = std::max(a.extent(), b.extent());
  return (a.resized(e).coeffs() - b.resized(e).coeffs()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("apply_H") {
  const SpectralField u = SpectralField::single_mode(2, 4, MultiIndex{1, 0}, {0.5, -1.0});
  const SpectralField hu = apply_H(u);
  CHECK(hu[MultiIndex{1, 0}] == std::complex<double>(2.0, -4.0));
  CHECK(apply_H(SpectralField(3, 3)).coeffs().cwiseAbs().maxCoeff() == 0.0);

  const SpectralField r = random_field(2, 9, 5, 16);
  long double direct = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const MultiIndex m = r.multi_index(i);
    const long double lam = 2.0L * m.total() + 2;
    direct += lam * lam * std::norm(std::complex<long double>(r.coeffs()[i]));
  }
  CHECK(std::abs(apply_H(r).coeffs().squaredNorm() - double(direct)) < 1e-13 * double(direct));
}

TEST_CASE("apply_P: ladder words") {
  SUBCASE("X on h0 against quadrature") {
    const HermiteBasis basis(1, 10);
    const SpectralField h0 = SpectralField::single_mode(1, 1, MultiIndex{0});
    const OpResult r = apply_P(PWord::parse("X1"), h0);
    CHECK(r.field.extent() == 2);
    CHECK(std::abs(r.field.coeffs()[1] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(r.field.coeffs()[0]) == 0.0);
    // x h0 sampled and analyzed independently.
    const auto& x = basis.rule(Grid::collocation).nodes;
    GridField g{Grid::collocation, 1, basis.points(Grid::collocation), Eigen::VectorXcd(x.size())};
    for (Eigen::Index j = 0; j < x.size(); ++j) g.values[j] = x[j] * std::pow(std::numbers::pi, -0.25) * std::exp(-x[j] * x[j] / 2);
    CHECK(diff(analyze(g, basis), r.field) < 1e-13);
  }
  SUBCASE("empty word is the identity") {
    const SpectralField u = random_field(2, 6, 3, 10);
    const OpResult r = apply_P(PWord{}, u);
    CHECK(r.field.coeffs() == u.coeffs());
    CHECK(r.spillage == 0.0);
  }
  SUBCASE("-sum D_j D_j + sum X_j X_j reproduces H") {
    for (int dim : {1, 2, 3}) {
      const SpectralField u = random_field(dim, 5, 11 + dim, 12);
      SpectralField acc(dim, 7);
      for (int a = 0; a < dim; ++a) {
        const std::string j = std::to_string(a + 1);
        accumulate(acc, apply_P(PWord::parse("D" + j + " D" + j), u).field, -1.0);
        accumulate(acc, apply_P(PWord::parse("X" + j + " X" + j), u).field, 1.0);
      }
      CAPTURE(dim);
      CHECK(diff(acc, apply_H(u)) < 1e-13);
    }
  }
  SUBCASE("canonical commutation [d/dx, x] = 1 per axis") {
    const SpectralField u = random_field(2, 8, 21, 14);
    for (int a = 0; a < 2; ++a) {
      const std::string j = std::to_string(a + 1);
      SpectralField c = apply_P(PWord::parse("D" + j + " X" + j), u).field;
      c.coeffs() -= apply_P(PWord::parse("X" + j + " D" + j), u).field.coeffs();
      CHECK(diff(c, u) < 1e-12);
    }
  }
  SUBCASE("truncation reports spillage") {
    const SpectralField u = SpectralField::single_mode(1, 4, MultiIndex{3});
    const OpResult r = apply_P(PWord::parse("X1"), u, 4);
    CHECK(r.field.extent() == 4);
    CHECK(r.spillage == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("word errors") {
    CHECK_THROWS(PWord::parse("D1 D1 D1 D1 D1 D1 D1 D1 D1"));
    CHECK_THROWS(PWord::parse("Y1"));
    CHECK_THROWS(PWord::parse("D"));
    CHECK_THROWS(PWord::parse("D4"));
    const SpectralField u(1, 3);
    CHECK_THROWS_AS(apply_P(PWord::parse("X2"), u), std::invalid_argument);
    CHECK(PWord::parse("d1,x2  D3").to_string() == "D1 X2 D3");
    CHECK(PWord::all_of_order(2, 2).size() == 16);
  }
}

TEST_CASE("commutators with H") {
  SUBCASE("[H, d/dx] = -2x and [H, x] = -2 d/dx") {
    const SpectralField u = random_field(2, 7, 8, 12);
    const CommutatorResult cd = commutator_H_P(PWord::parse("D1"), u);
    CHECK(diff(cd.direct, [&] {
            SpectralField e = apply_P(PWord::parse("X1"), u).field;
            e.coeffs() *= -2.0;
            return e;
          }()) < 1e-12);
    const CommutatorResult cx = commutator_H_P(PWord::parse("X2"), u);
    CHECK(diff(cx.direct, [&] {
            SpectralField e = apply_P(PWord::parse("D2"), u).field;
            e.coeffs() *= -2.0;
            return e;
          }()) < 1e-12);
    CHECK(cd.discrepancy < 1e-10);
    CHECK(cx.discrepancy < 1e-10);
  }
  SUBCASE("expansion matches direct composition for longer words") {
    const SpectralField u = random_field(3, 5, 9, 9);
    for (const char* w : {"D1 X1", "X2 X2 D3", "D1 D2 X3 X1", "X1 D1 X1 D1 X2 D3 X3 D2"}) {
      CAPTURE(w);
      CHECK(commutator_H_P(PWord::parse(w), u).discrepancy < 1e-10);
    }
  }
  SUBCASE("zero field") {
    const CommutatorResult c = commutator_H_P(PWord::parse("D1 X1"), SpectralField(1, 5));
    CHECK(c.direct.coeffs().cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.discrepancy == 0.0);
  }
}

TEST_CASE("eigenspace projectors") {
  const SpectralField u = random_field(2, 6, 4, 10);
  const ProjectionResult p = project_pi_mu(u, 4);
  CHECK_FALSE(p.invalid_eigenvalue);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const MultiIndex m = u.multi_index(i);
    const bool keep = (m == MultiIndex{1, 0} || m == MultiIndex{0, 1});
    CHECK(p.field.coeffs()[i] == (keep ? u.coeffs()[i] : std::complex<double>(0)));
  }
  SpectralField sum(2, 6);
  for (int mu = 2; mu <= 2 * 10 + 2; mu += 2) sum.coeffs() += project_pi_mu(u, mu).field.coeffs();
  CHECK(sum.coeffs() == u.coeffs());
  CHECK(project_pi_mu(project_pi_mu(u, 6).field, 8).field.coeffs().cwiseAbs().maxCoeff() == 0.0);
  CHECK(project_pi_mu(project_pi_mu(u, 6).field, 6).field.coeffs() == project_pi_mu(u, 6).field.coeffs());

  const SpectralField v = random_field(2, 6, 44, 10);
  const auto lhs = project_pi_mu(u, 8).field.coeffs().dot(v.coeffs());
  const auto rhs = u.coeffs().dot(project_pi_mu(v, 8).field.coeffs());
  CHECK(std::abs(lhs - rhs) < 1e-13);

  const ProjectionResult bad = project_pi_mu(u, 5);
  CHECK(bad.invalid_eigenvalue);
  CHECK(bad.field.coeffs().cwiseAbs().maxCoeff() == 0.0);
  CHECK(project_pi_mu(u, 0).invalid_eigenvalue);
}

TEST_CASE("Littlewood-Paley blocks") {
  SUBCASE("profile") {
    CHECK(LPProfile::eta(0.5) == 1.0);
    CHECK(LPProfile::eta(1.0) == 1.0);
    CHECK(LPProfile::eta(2.0) == 0.0);
    CHECK(LPProfile::eta(1.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double x = 1.01; x < 2.0; x += 0.01) CHECK(LPProfile::eta(x) <= LPProfile::eta(x - 0.01));
  }
  SUBCASE("support window") {
    // lambda^2 = 17 (m = 8): lambda > sqrt(2) * 2
    const SpectralField u = SpectralField::single_mode(1, 12, MultiIndex{8});
    CHECK(littlewood_paley(u, 2).coeffs().cwiseAbs().maxCoeff() == 0.0);
    for (long long N : {1LL, 2LL, 4LL, 8LL, 16LL})
      for (int lam_sq = 1; lam_sq < 2000; ++lam_sq) {
        const double lam = std::sqrt(double(lam_sq));
        if (LPProfile::psi(lam_sq / double(N * N)) != 0.0) {
          CHECK(lam > N / 2.0);
          CHECK(lam < std::sqrt(2.0) * N);
        }
      }
    CHECK_THROWS(littlewood_paley(u, 3));
  }
  SUBCASE("partition of unity") {
    for (int lam_sq = 1; lam_sq <= 100000; ++lam_sq) {
      double s = LPProfile::eta(4.0 * lam_sq);
      for (long long N = 1; N <= (1LL << 20); N *= 2) s += LPProfile::psi(lam_sq / double(N * N));
      if (std::abs(s - 1.0) > 1e-12) FAIL("partition of unity fails at lambda^2 = " << lam_sq);
    }
    const SpectralField u = random_field(2, 20, 6, 38);
    SpectralField sum = littlewood_paley_low(u);
    for (long long N = 1; N <= 16; N *= 2) sum.coeffs() += littlewood_paley(u, N).coeffs();
    CHECK(diff(sum, u) < 1e-12);
  }
  SUBCASE("commutes with H and I") {
    const SpectralField u = random_field(2, 10, 7, 18);
    const IOperatorSpec spec{2.0, 1.7};
    CHECK(diff(littlewood_paley(apply_H(u), 4), apply_H(littlewood_paley(u, 4))) < 1e-14);
    CHECK(diff(littlewood_paley(apply_I(u, spec), 4), apply_I(littlewood_paley(u, 4), spec)) < 1e-15);
  }
}

TEST_CASE("Sobolev norms") {
  const SpectralField one = SpectralField::single_mode(1, 5, MultiIndex{3}, {0.0, -2.5});
  CHECK(sobolev_norm(one, 0.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sobolev_norm(SpectralField::single_mode(2, 2, MultiIndex{0, 0}), 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  for (int dim : {1, 2, 3}) {
    const SpectralField u = random_field(dim, 6, 30 + dim, 12);
    double grad_x = 0;
    for (int a = 0; a < dim; ++a) {
      const std::string j = std::to_string(a + 1);
      grad_x += apply_P(PWord::parse("D" + j), u).field.coeffs().squaredNorm();
      grad_x += apply_P(PWord::parse("X" + j), u).field.coeffs().squaredNorm();
    }
    const double h1 = sobolev_norm(u, 1.0);
    CHECK(std::abs(grad_x - h1 * h1) < 1e-12 * h1 * h1);
    CHECK(sobolev_norm(u, 2.0) >= sobolev_norm(u, 1.0));
  }
}

TEST_CASE("I-operator") {
  const IOperatorSpec spec{1.0, 2.0};
  // d=2, |m| = 7: lambda^2 = 16, lambda = 4N
  const SpectralField high = SpectralField::single_mode(2, 8, MultiIndex{3, 4});
  CHECK(apply_I(high, spec)[MultiIndex{3, 4}].real() == doctest::Approx(4.0).epsilon(1e-15));
  const IOperatorSpec wide{8.0, 1.5};
  const SpectralField low = SpectralField::single_mode(2, 8, MultiIndex{5, 5});  // lambda^2 = 22 < 64
  CHECK(apply_I(low, wide).coeffs() == low.coeffs());

  SUBCASE("sandwich on a single high mode") {
    for (double s : {1.3, 2.0, 3.5})
      for (double N : {1.0, 2.0, 3.0}) {
        const IOperatorSpec sp{N, s};
        for (int m = 0; m < 40; ++m) {
          const double lam = std::sqrt(2.0 * m + 1);
          if (lam < 2 * N) continue;
          const SpectralField h = SpectralField::single_mode(1, 40, MultiIndex{m});
          const double ratio = sobolev_norm(apply_I(h, sp), 1.0) / sobolev_norm(h, s);
          CHECK(ratio == doctest::Approx(std::pow(N, 1.0 - s)).epsilon(1e-13));
        }
      }
  }
  SUBCASE("multiplier shape") {
    const IOperatorSpec sp{3.0, 2.5};
    double prev = 0;
    for (double lam = 0.5; lam < 12; lam += 1e-3) {
      const double m = sp.multiplier(lam);
      CHECK(m >= prev);
      CHECK(m > 0);
      prev = m;
    }
    // value and slope continuous at both ends of the bridge
    const double h = 1e-6;
    for (double edge : {3.0, 6.0}) {
      CHECK(sp.multiplier(edge - h) == doctest::Approx(sp.multiplier(edge + h)).epsilon(1e-5));
      const double left = (sp.multiplier(edge - h) - sp.multiplier(edge - 2 * h)) / h;
      const double right = (sp.multiplier(edge + 2 * h) - sp.multiplier(edge + h)) / h;
      CHECK(left == doctest::Approx(right).epsilon(1e-4));
    }
    CHECK_THROWS(IOperatorSpec{2.0, 1.0}.validate());
    CHECK_THROWS(IOperatorSpec{0.0, 2.0}.validate());
  }
  SUBCASE("inverse") {
    const SpectralField u = random_field(3, 7, 12, 18);
    const IOperatorSpec sp{1.5, 2.2};
    CHECK(diff(apply_I_inverse(apply_I(u, sp), sp), u) < 1e-13);
  }
}

TEST_CASE("Bernstein ratio") {
  CHECK(bernstein_ratio(PWord{}, 8, 4, 1) == doctest::Approx(1.0).epsilon(1e-15));

  // Oracle: operator norm of d/dx restricted to the Delta_8 window (d=1).
  const long long N = 8;
  const int extent = localized_extent(1, N);
  std::vector<int> window;
  for (int k = 0; k < extent; ++k)
    if (LPProfile::psi((2.0 * k + 1) / double(N * N)) != 0.0) window.push_back(k);
  const Eigen::MatrixXd full = axis_word_matrix<double>(PWord::parse("D1"), 0, extent);
  Eigen::MatrixXd restricted(full.rows(), window.size());
  for (std::size_t j = 0; j < window.size(); ++j) restricted.col(j) = full.col(window[j]);
  const double opnorm = Eigen::JacobiSVD<Eigen::MatrixXd>(restricted).singularValues()[0] / N;
  const double r = bernstein_ratio(PWord::parse("D1"), N, 64, 3);
  CHECK(r <= 2.0);
  CHECK(r <= opnorm + 1e-12);
  CHECK(r >= 0.5 * opnorm);

  // determinism and monotone in the number of trials
  CHECK(bernstein_ratio(PWord::parse("X1 D1"), 16, 8, 9) == bernstein_ratio(PWord::parse("X1 D1"), 16, 8, 9));
  CHECK(bernstein_ratio(PWord::parse("X1 D1"), 16, 16, 9) >= bernstein_ratio(PWord::parse("X1 D1"), 16, 8, 9));
  CHECK(bernstein_ratio(PWord::parse("X1"), 8, 6, 2, 1, 3) == bernstein_ratio(PWord::parse("X1"), 8, 6, 2, 1, 1));

  // bounded across N
  for (const char* w : {"D1", "X1", "D1 X1"}) {
    double top = 0, last = 0;
    for (long long n : {4LL, 8LL, 16LL, 32LL}) {
      last = bernstein_ratio(PWord::parse(w), n, 8, 5);
      top = std::max(top, last);
    }
    CAPTURE(w);
    CHECK(top <= 1.25 * last);
  }
}
