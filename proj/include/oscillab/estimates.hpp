#pragma once

// Numerical checks of the quadrilinear identity, almost orthogonality of
// eigenfunction products, bilinear space-time estimates for the linear flow and
// the modified-energy increment of the I-method.
//
// Quadrilinear forms are evaluated in long double on the product grid (exact for
// four Hermite factors and the |x|^2 weight). Everything else is double.

#include "oscillab/hermite.hpp"
#include "oscillab/nls.hpp"
#include "oscillab/spectral_ops.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oscillab {

using LabScalar = long double;
using LabBasis = BasicHermiteBasis<LabScalar>;
using LabField = BasicSpectralField<LabScalar>;

// ---------------------------------------------------------------------------
// Power-law fits

struct ScalingFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0;
  double intercept = 0;
  /// RMS of the log-log residuals.
  double residual = 0;
};

/// Least squares of log y against log x. Needs >= 2 points, xs strictly increasing, ys > 0.
ScalingFit fit_power_law(std::vector<double> xs, std::vector<double> ys);

// ---------------------------------------------------------------------------
// Quadrilinear forms

/// Four real eigenfunctions e_i with H e_i = mu_sq[i] e_i.
struct QuadTuple {
  std::array<SpectralField, 4> e;
  std::array<int, 4> mu_sq{};

  /// Single-mode tuple h_{m1}, ..., h_{m4}.
  static QuadTuple modes(int dim, int extent, const std::array<MultiIndex, 4>& m);
  /// Throws unless every slot is real and lies in its eigenspace.
  void validate() const;
};

/// mu1^2 - mu2^2 - mu3^2 - mu4^2.
int resonance_denominator(const std::array<int, 4>& mu_sq);
inline bool is_resonant(const std::array<int, 4>& mu_sq) { return resonance_denominator(mu_sq) == 0; }

struct ResonantTuple : std::domain_error {
  ResonantTuple() : std::domain_error("resonant tuple: mu1^2 - mu2^2 - mu3^2 - mu4^2 = 0") {}
};

struct IdentityCheck {
  std::array<int, 4> mu_sq{};
  LabScalar L0 = 0;
  LabScalar L1_plus_weight = 0;
  /// -2 / (mu1^2 - mu2^2 - mu3^2 - mu4^2) * (L1 + L0^{|x|^2})
  LabScalar rhs = 0;
  /// |L0 - rhs| / (|L0| + eps); 0 when both sides vanish exactly.
  double residual = 0;
};

inline constexpr LabScalar kIdentityEpsilon = 1e-30L;

/// Grid samples of one field and its gradient on the lab's product grid.
struct LabSample {
  VectorX<LabScalar> value;
  std::array<VectorX<LabScalar>, kMaxDimension> grad;
};

class QuadLab {
 public:
  QuadLab(int dim, int max_degree);

  int dim() const { return basis_.dim(); }
  int max_degree() const { return basis_.max_degree(); }
  const LabBasis& basis() const { return basis_; }

  /// Values and gradient of a real field; throws if any coefficient is complex
  /// or the degree exceeds the basis.
  LabSample sample(const SpectralField& e) const;

  LabScalar L0(const std::array<const LabSample*, 4>& s) const;
  /// L1 + L0^{|x|^2}: the sum over the three pairs {i,j} of {2,3,4} of
  /// int grad e_i . grad e_j e_k e_1, plus int |x|^2 e1 e2 e3 e4.
  LabScalar L1_plus_weight(const std::array<const LabSample*, 4>& s) const;
  IdentityCheck verify(const std::array<const LabSample*, 4>& s, const std::array<int, 4>& mu_sq) const;

  LabScalar quad_L0(const QuadTuple& t) const;
  LabScalar quad_L1_plus_weight(const QuadTuple& t) const;
  /// Throws ResonantTuple when the denominator vanishes.
  IdentityCheck verify_identity_k1(const QuadTuple& t) const;

 private:
  LabScalar integrate(const VectorX<LabScalar>& f) const;

  LabBasis basis_;
  VectorX<LabScalar> radius_sq_;
};

struct IdentityScanResult {
  std::vector<IdentityCheck> checks;  // nonresonant tuples, in enumeration order
  long long resonant = 0;
  double worst_residual = 0;
};

/// Every ordered tuple of 1D modes with degrees <= max_degree.
IdentityScanResult identity_scan_1d(int max_degree);

/// Random real eigenspace quadruples in dimension dim with mu_sq_i <= mu_sq_max.
IdentityScanResult identity_scan_random(int dim, int mu_sq_max, int trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Almost orthogonality

struct OrthogonalityScan {
  std::vector<int> mu1_sq;
  std::vector<double> lambda1;
  std::vector<double> max_abs_L0;
  /// Fit over the nonzero entries; absent when fewer than three are nonzero.
  std::optional<ScalingFit> fit;
  /// Every L0 vanished by parity.
  bool parity_zero = false;
};

/// Smallest mu1^2 allowed by mu1^2 >= C0 (mu2^2 + mu3^2 + mu4^2).
int orthogonality_threshold(const std::array<int, 3>& partner_mu_sq, double C0);

/// max over trials of |int e1 e2 e3 e4| for each mu1^2 in the list, e1 a random
/// real element of its eigenspace, e2..e4 fixed. Throws std::invalid_argument when
/// some mu1^2 violates the precondition, and std::length_error when fewer than
/// three points are requested.
OrthogonalityScan almost_orthogonality_scan(const std::vector<int>& mu1_sq_list, const std::array<SpectralField, 3>& partners,
                                            int max_degree, double C0, int trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Bilinear space-time norms of the linear flow

struct WordPair {
  PWord a;
  PWord b;
};

struct BilinearSettings {
  int dim = 2;
  double T = 1.0;
  int trials = 32;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Product-grid nodes whose contribution bound is below prune_tol times the
  /// largest one are dropped.
  double prune_tol = 1e-16;

  void validate() const;
};

struct BilinearCell {
  long long N = 0;
  long long M = 0;
  /// Per word pair: max over trials of the normalized ratio, and the raw
  /// ||P(a) e^{itH} u_N P(b) e^{itH} v_M||_{L2([0,T] x R^d)} of unit-norm data
  /// at the maximizing trial.
  std::vector<double> ratio;
  std::vector<double> raw_norm;
  int nodes_per_axis = 0;
  int time_nodes = 0;
};

/// Composite 8-point Gauss-Legendre on [0,T] with ceil(4T/pi) panels (32 nodes per revival period).
void time_rule(double T, std::vector<double>& nodes, std::vector<double>& weights);

BilinearCell bilinear_cell(long long N, long long M, const std::vector<WordPair>& words, const BilinearSettings& cfg);

double bilinear_strichartz_ratio(long long N, long long M, const BilinearSettings& cfg);
double derivative_bilinear_ratio(const PWord& word_a, const PWord& word_b, long long N, long long M,
                                 const BilinearSettings& cfg);

/// N^{k1} M^{k2} M^{(d-1)/2} N^{-1/2}.
double bilinear_normalizer(long long N, long long M, int dim, int k1 = 0, int k2 = 0);

// ---------------------------------------------------------------------------
// Modified energy and norm growth

struct EnergyIncrementResult {
  std::vector<double> N;
  std::vector<double> delta;
  std::vector<double> increment;
  /// Fit of increment against N; alpha = -slope. Absent when some increment is 0.
  std::optional<ScalingFit> fit;
  double alpha = 0;
  bool strictly_decreasing = false;
  bool tainted = false;
  double max_spillage = 0;
};

/// delta = min(1, ||I u0||_{H^1}^{-2}).
double local_time(const SpectralField& u0, const IOperatorSpec& spec);

/// One trajectory of the full flow; for each N, max over recorded t <= delta_N of
/// |E(I_N u(t)) - E(I_N u0)| with the collocation (discrete) energy.
EnergyIncrementResult energy_increment_scan(const HermiteBasis& basis, const SpectralField& u0, double s,
                                            const std::vector<double>& N_list, const SolverConfig& cfg);

struct NormGrowthResult {
  std::vector<double> t;
  std::vector<double> norm;
  std::vector<double> running_max;
  ScalingFit fit;
  double exponent = 0;
  /// s~0 (s - 1) + 0.2 with s~0 = 2/3 (d=2), 1 (d=3); NaN in d=1.
  double bound = 0;
  bool consistent = true;
  bool tainted = false;
  double max_spillage = 0;
};

double growth_bound(int dim, double s);

/// Fits log running-max ||u(t)||_{H^s} against log(1 + t) over the records with t > 0.
NormGrowthResult norm_growth_experiment(const HermiteBasis& basis, const SpectralField& u0, double s,
                                        const SolverConfig& cfg);

}  // namespace oscillab
