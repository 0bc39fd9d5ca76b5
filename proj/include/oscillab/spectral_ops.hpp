#pragma once

// Coefficient-space operator calculus for H = -Delta + |x|^2: diagonal spectral
// multipliers (H, pi_mu, Littlewood-Paley blocks, the I-operator, Sobolev norms)
// and the tridiagonal ladder words P(alpha) built from d/dx_j and x_j.

#include "oscillab/hermite.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace oscillab {

// ---------------------------------------------------------------------------
// Diagonal maps

template <typename Scalar, typename Symbol>
BasicSpectralField<Scalar> apply_level_symbol(const BasicSpectralField<Scalar>& u, Symbol&& symbol) {
  const Eigen::VectorXi levels = mode_levels(u.dim(), u.extent());
  BasicSpectralField<Scalar> out = u;
  // Symbols depend only on |m|; evaluate once per level.
  const int max_level = levels.size() ? levels.maxCoeff() : 0;
  VectorX<Scalar> table(max_level + 1);
  for (int l = 0; l <= max_level; ++l) table[l] = static_cast<Scalar>(symbol(2 * l + u.dim()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out.coeffs()[i] *= table[levels[i]];
  return out;
}

/// c_m -> (2|m|+d) c_m.
template <typename Scalar>
BasicSpectralField<Scalar> apply_H(const BasicSpectralField<Scalar>& u) {
  return apply_level_symbol(u, [](int lambda_sq) { return static_cast<double>(lambda_sq); });
}

/// sqrt(sum (2|m|+d)^s |c_m|^2), i.e. ||H^{s/2} u||.
template <typename Scalar>
double sobolev_norm(const BasicSpectralField<Scalar>& u, double s) {
  const Eigen::VectorXi levels = mode_levels(u.dim(), u.extent());
  long double acc = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    acc += std::pow(static_cast<long double>(2 * levels[i] + u.dim()), static_cast<long double>(s)) *
           std::norm(std::complex<long double>(u.coeffs()[i]));
  return static_cast<double>(std::sqrt(acc));
}

struct ProjectionResult {
  SpectralField field;
  bool invalid_eigenvalue = false;
};

/// Spectral projector onto the eigenspace {2|m|+d = mu_sq}. A mu_sq of the wrong
/// parity (or below d) is not an eigenvalue; the projection is empty and flagged.
template <typename Scalar>
std::pair<BasicSpectralField<Scalar>, bool> project_eigenspace(const BasicSpectralField<Scalar>& u, int mu_sq) {
  const bool invalid = mu_sq < u.dim() || (mu_sq - u.dim()) % 2 != 0;
  BasicSpectralField<Scalar> out =
      apply_level_symbol(u, [&](int lambda_sq) { return (!invalid && lambda_sq == mu_sq) ? 1.0 : 0.0; });
  return {std::move(out), invalid};
}

inline ProjectionResult project_pi_mu(const SpectralField& u, int mu_sq) {
  auto [f, invalid] = project_eigenspace(u, mu_sq);
  return ProjectionResult{std::move(f), invalid};
}

// ---------------------------------------------------------------------------
// Littlewood-Paley

/// Smooth cutoff eta (1 on [0,1], 0 on [2,inf)) joined by the exp(-1/t) bump
/// quotient eta(x) = f(2-x) / (f(2-x) + f(x-1)), f(t) = exp(-1/t) for t > 0;
/// psi(x) = eta(x) - eta(4x).
struct LPProfile {
  static double eta(double x) {
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    const double a = std::exp(-1.0 / (2.0 - x));
    const double b = std::exp(-1.0 / (x - 1.0));
    return a / (a + b);
  }
  static double psi(double x) { return eta(x) - eta(4.0 * x); }
};

inline bool is_dyadic(long long n) { return n >= 1 && (n & (n - 1)) == 0; }

/// Delta_N u = psi(H / N^2) u for dyadic N >= 1.
template <typename Scalar>
BasicSpectralField<Scalar> littlewood_paley(const BasicSpectralField<Scalar>& u, long long N) {
  if (!is_dyadic(N)) throw std::invalid_argument("littlewood_paley: N must be a power of two >= 1");
  const double n_sq = static_cast<double>(N) * static_cast<double>(N);
  return apply_level_symbol(u, [&](int lambda_sq) { return LPProfile::psi(lambda_sq / n_sq); });
}

/// eta(4H) u: the part of the spectrum below every dyadic block. Vanishes for
/// the oscillator (lambda^2 >= d >= 1), kept for the partition-of-unity check.
template <typename Scalar>
BasicSpectralField<Scalar> littlewood_paley_low(const BasicSpectralField<Scalar>& u) {
  return apply_level_symbol(u, [](int lambda_sq) { return LPProfile::eta(4.0 * lambda_sq); });
}

// ---------------------------------------------------------------------------
// I-operator

/// Upside-down I multiplier m(lambda): 1 for lambda <= N, (lambda/N)^{s-1} for
/// lambda >= 2N. On (N, 2N) log m is a quintic in t = log2(lambda/N) matching
/// value, slope and curvature at both ends (C^2, strictly increasing).
struct IOperatorSpec {
  double N = 1.0;
  double s = 2.0;

  void validate() const {
    if (!(N > 0.0)) throw std::invalid_argument("IOperatorSpec: N must be positive");
    if (!(s > 1.0)) throw std::invalid_argument("IOperatorSpec: s must exceed 1");
  }

  double multiplier(double lambda) const {
    if (lambda <= N) return 1.0;
    const double t = std::log2(lambda / N);
    const double top = (s - 1.0) * std::numbers::ln2;
    if (t >= 1.0) return std::pow(lambda / N, s - 1.0);
    const double q = t * t * t * (6.0 + t * (-8.0 + 3.0 * t));
    return std::exp(top * q);
  }
};

template <typename Scalar>
BasicSpectralField<Scalar> apply_I(const BasicSpectralField<Scalar>& u, const IOperatorSpec& spec) {
  spec.validate();
  return apply_level_symbol(u, [&](int lambda_sq) { return spec.multiplier(std::sqrt(double(lambda_sq))); });
}

template <typename Scalar>
BasicSpectralField<Scalar> apply_I_inverse(const BasicSpectralField<Scalar>& u, const IOperatorSpec& spec) {
  spec.validate();
  return apply_level_symbol(u,
                            [&](int lambda_sq) { return 1.0 / spec.multiplier(std::sqrt(double(lambda_sq))); });
}

// ---------------------------------------------------------------------------
// Ladder words

enum class LetterKind { grad, x };

struct Letter {
  LetterKind kind = LetterKind::grad;
  int axis = 0;  // 0-based

  friend bool operator==(const Letter&, const Letter&) = default;
};

/// Word alpha over {d/dx_j, x_j}; P(alpha) = P(alpha_1) ... P(alpha_k), so the
/// rightmost letter acts first. Text form: tokens "D<j>" / "X<j>" with 1-based
/// axes, e.g. "X1 D1" is x_1 d/dx_1. The empty string is the identity.
class PWord {
 public:
  static constexpr int kMaxOrder = kLadderHeadroom;

  PWord() = default;
  explicit PWord(std::vector<Letter> letters) : letters_(std::move(letters)) {
    if (ord() > kMaxOrder) throw std::invalid_argument("PWord: word longer than ladder headroom");
  }

  static PWord parse(std::string_view text);
  std::string to_string() const;

  int ord() const { return static_cast<int>(letters_.size()); }
  bool empty() const { return letters_.empty(); }
  const std::vector<Letter>& letters() const { return letters_; }

  /// Number of letters acting on one axis.
  int ord_on_axis(int axis) const {
    int n = 0;
    for (const Letter& l : letters_) n += (l.axis == axis);
    return n;
  }

  void validate(int dim) const {
    for (const Letter& l : letters_)
      if (l.axis < 0 || l.axis >= dim)
        throw std::invalid_argument("PWord: axis " + std::to_string(l.axis + 1) + " out of range for d=" +
                                    std::to_string(dim));
  }

  /// All words of a given order in dimension dim.
  static std::vector<PWord> all_of_order(int order, int dim);

  friend bool operator==(const PWord&, const PWord&) = default;

 private:
  std::vector<Letter> letters_;
};

/// One letter along its axis: d/dx h_k = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1},
/// x h_k = sqrt(k/2) h_{k-1} + sqrt((k+1)/2) h_{k+1}. The output extent grows by one.
template <typename Scalar>
BasicSpectralField<Scalar> apply_letter(const Letter& letter, const BasicSpectralField<Scalar>& u) {
  using std::sqrt;
  const int dim = u.dim();
  if (letter.axis < 0 || letter.axis >= dim) throw std::invalid_argument("apply_letter: axis out of range");
  const int n = u.extent();
  const int m = n + 1;
  BasicSpectralField<Scalar> out(dim, m);
  const Scalar sign = letter.kind == LetterKind::grad ? Scalar(-1) : Scalar(1);
  VectorX<Scalar> down(n), up(n);
  for (int k = 0; k < n; ++k) {
    down[k] = sqrt(Scalar(k) / 2);
    up[k] = sign * sqrt(Scalar(k + 1) / 2);
  }
  const int e1 = dim > 1 ? n : 1;
  const int e2 = dim > 2 ? n : 1;
  const auto& in = u.coeffs();
  auto& res = out.coeffs();
  std::array<Eigen::Index, 3> in_stride{1, n, Eigen::Index(n) * n};
  std::array<Eigen::Index, 3> out_stride{1, m, Eigen::Index(m) * m};
  const int a = letter.axis;
  for (int i2 = 0; i2 < e2; ++i2)
    for (int i1 = 0; i1 < e1; ++i1)
      for (int i0 = 0; i0 < n; ++i0) {
        const std::array<int, 3> idx{i0, i1, i2};
        const auto c = in[i0 + i1 * in_stride[1] + i2 * in_stride[2]];
        if (c == std::complex<Scalar>(0)) continue;
        Eigen::Index base = 0;
        for (int j = 0; j < 3; ++j)
          if (j != a) base += idx[j] * out_stride[j];
        const int k = idx[a];
        if (k > 0) res[base + (k - 1) * out_stride[a]] += down[k] * c;
        res[base + (k + 1) * out_stride[a]] += up[k] * c;
      }
  return out;
}

template <typename Scalar>
struct BasicOpResult {
  BasicSpectralField<Scalar> field;
  /// l2 mass (sum of |c|^2) of the coefficients dropped by truncation.
  Scalar spillage = 0;
};
using OpResult = BasicOpResult<double>;

/// Truncates to a smaller extent, reporting the l2 mass of what was dropped.
template <typename Scalar>
BasicOpResult<Scalar> truncate(const BasicSpectralField<Scalar>& u, int extent) {
  if (extent >= u.extent()) return {u, Scalar(0)};
  const Eigen::VectorXi maxdeg = mode_max_degrees(u.dim(), u.extent());
  Scalar dropped = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (maxdeg[i] >= extent) dropped += std::norm(u.coeffs()[i]);
  return {u.resized(extent), dropped};
}

/// P(word) u. The result has extent u.extent() + ord (exact); when max_extent is
/// given and smaller, higher modes are dropped and their mass reported.
template <typename Scalar>
BasicOpResult<Scalar> apply_P(const PWord& word, const BasicSpectralField<Scalar>& u, int max_extent = -1) {
  word.validate(u.dim());
  BasicSpectralField<Scalar> cur = u;
  for (auto it = word.letters().rbegin(); it != word.letters().rend(); ++it) cur = apply_letter(*it, cur);
  if (max_extent > 0) return truncate(cur, max_extent);
  return {std::move(cur), Scalar(0)};
}

/// Dense matrix of the letters of `word` acting on one axis, restricted to input
/// degrees < extent_in: shape (extent_in + ord_on_axis) x extent_in.
template <typename Scalar>
MatrixX<Scalar> axis_word_matrix(const PWord& word, int axis, int extent_in) {
  using std::sqrt;
  MatrixX<Scalar> op = MatrixX<Scalar>::Identity(extent_in, extent_in);
  for (auto it = word.letters().rbegin(); it != word.letters().rend(); ++it) {
    if (it->axis != axis) continue;
    const Eigen::Index n = op.rows();
    MatrixX<Scalar> step = MatrixX<Scalar>::Zero(n + 1, n);
    const Scalar sign = it->kind == LetterKind::grad ? Scalar(-1) : Scalar(1);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k > 0) step(k - 1, k) = sqrt(Scalar(k) / 2);
      step(k + 1, k) = sign * sqrt(Scalar(k + 1) / 2);
    }
    op = step * op;
  }
  return op;
}

/// Adds a (possibly smaller) field into `acc` with a scalar weight.
template <typename Scalar>
void accumulate(BasicSpectralField<Scalar>& acc, const BasicSpectralField<Scalar>& term, Scalar weight) {
  if (term.extent() == acc.extent()) {
    acc.coeffs() += weight * term.coeffs();
    return;
  }
  const BasicSpectralField<Scalar> r = term.resized(acc.extent());
  acc.coeffs() += weight * r.coeffs();
}

struct CommutatorResult {
  /// H P(word) u - P(word) H u, by direct composition.
  SpectralField direct;
  /// Same quantity from the expansion [H, A_1...A_k] = sum_j A_1..[H,A_j]..A_k
  /// with [H, d/dx_j] = -2 x_j and [H, x_j] = -2 d/dx_j.
  SpectralField expansion;
  double discrepancy = 0;
};

CommutatorResult commutator_H_P(const PWord& word, const SpectralField& u);

/// max over random Delta_N-localized fields of ||P(word) u_N|| / (N^ord ||u_N||).
/// Fields live in coefficient space only (no grid), so N up to ~64 in d=1 is cheap.
double bernstein_ratio(const PWord& word, long long N, int trials, std::uint64_t seed, int dim = 1,
                       int threads = 1);

}  // namespace oscillab
