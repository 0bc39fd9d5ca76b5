#pragma once

// Hermite functions, Gauss-Hermite rules and the physical <-> spectral
// transform pair for tensor-product fields in d <= 3 dimensions.
//
// Conventions: h_k is the L2-normalized Hermite function of degree k,
// h_m(x) = prod_j h_{m_j}(x_j), and H h_m = (2|m| + d) h_m with H = -Delta + |x|^2.
// Coefficient and grid tensors are stored flat with axis 0 fastest.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>

namespace oscillab {

inline constexpr int kMaxDimension = 3;
inline constexpr int kDefaultDegreeCap = 1024;
inline constexpr int kLadderHeadroom = 8;
inline constexpr int kMaxQuadratureNodes = 16384;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ComplexVectorX = VectorX<std::complex<Scalar>>;

// ---------------------------------------------------------------------------
// MultiIndex

class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<int> degrees) {
    if (degrees.size() < 1 || degrees.size() > static_cast<std::size_t>(kMaxDimension))
      throw std::invalid_argument("MultiIndex: dimension must be 1, 2 or 3");
    dim_ = static_cast<int>(degrees.size());
    int j = 0;
    for (int m : degrees) {
      if (m < 0) throw std::invalid_argument("MultiIndex: negative degree");
      degrees_[j++] = m;
    }
  }

  static MultiIndex zeros(int dim) {
    check_dim(dim);
    MultiIndex m;
    m.dim_ = dim;
    return m;
  }

  int dim() const { return dim_; }
  int operator[](int axis) const { return degrees_[axis]; }
  void set(int axis, int degree) {
    if (degree < 0) throw std::invalid_argument("MultiIndex: negative degree");
    degrees_[axis] = degree;
  }
  int total() const {
    int s = 0;
    for (int j = 0; j < dim_; ++j) s += degrees_[j];
    return s;
  }
  int max_degree() const {
    int s = 0;
    for (int j = 0; j < dim_; ++j) s = std::max(s, degrees_[j]);
    return s;
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

  static void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDimension)
      throw std::invalid_argument("dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }

 private:
  int dim_ = 1;
  std::array<int, kMaxDimension> degrees_{};
};

/// Eigenvalue of H on h_m: 2|m| + d. The eigenvalue of sqrt(H) is its square root.
inline double eigenvalue(const MultiIndex& m, int dim) {
  if (m.dim() != dim) throw std::invalid_argument("eigenvalue: multi-index dimension mismatch");
  return 2.0 * m.total() + dim;
}

// ---------------------------------------------------------------------------
// Hermite function values

namespace detail {

template <typename Scalar>
Scalar emit_scaled(Scalar value, Scalar log_scale) {
  using std::exp;
  using std::log;
  using std::abs;
  if (value == Scalar(0)) return Scalar(0);
  if (log_scale > Scalar(-600)) return value * exp(log_scale);
  const Scalar magnitude = exp(log(abs(value)) + log_scale);
  return value < Scalar(0) ? -magnitude : magnitude;
}

// Scaled three-term recurrence: h_k(x) = value_k * exp(log_scale). Values are
// renormalized whenever they grow past 2^400 so that neither the Gaussian
// envelope nor the polynomial growth over/underflows for |x| up to ~60.
template <typename Scalar, typename Sink>
void hermite_recurrence(int max_degree, Scalar x, Sink&& sink) {
  using std::log;
  using std::sqrt;
  const Scalar big = std::ldexp(Scalar(1), 400);
  Scalar log_scale = -x * x / 2 - log(std::numbers::pi_v<Scalar>) / 4;
  Scalar prev = 0;
  Scalar cur = 1;
  sink(0, cur, log_scale);
  for (int k = 0; k < max_degree; ++k) {
    const Scalar next = x * sqrt(Scalar(2) / Scalar(k + 1)) * cur - sqrt(Scalar(k) / Scalar(k + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > big) {
      cur /= big;
      prev /= big;
      log_scale += log(big);
    }
    sink(k + 1, cur, log_scale);
  }
}

}  // namespace detail

/// Table of h_k(x_j): row k, column j, for 0 <= k <= max_degree.
template <typename Scalar>
MatrixX<Scalar> hermite_values(int max_degree, const VectorX<Scalar>& nodes,
                               int degree_cap = kDefaultDegreeCap) {
  if (max_degree < 0) throw std::invalid_argument("hermite_values: negative degree");
  if (max_degree > degree_cap)
    throw std::length_error("hermite_values: degree " + std::to_string(max_degree) +
                            " exceeds cap " + std::to_string(degree_cap));
  MatrixX<Scalar> table(max_degree + 1, nodes.size());
  for (Eigen::Index j = 0; j < nodes.size(); ++j) {
    detail::hermite_recurrence<Scalar>(max_degree, nodes[j], [&](int k, Scalar v, Scalar ls) {
      table(k, j) = detail::emit_scaled(v, ls);
    });
  }
  return table;
}

/// Sum_{k <= max_degree} h_k(x)^2 (the Christoffel sum of the Hermite functions).
template <typename Scalar>
Scalar hermite_christoffel_sum(int max_degree, Scalar x) {
  Scalar sum = 0;
  detail::hermite_recurrence<Scalar>(max_degree, x, [&](int, Scalar v, Scalar ls) {
    const Scalar h = detail::emit_scaled(v, ls);
    sum += h * h;
  });
  return sum;
}

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss rule for the weight exp(-w y^2), w in {1, 2}.
/// `function_weights` integrate plain functions: int f dx ~= sum_j f(x_j) * function_weights_j,
/// i.e. function_weights_j = weights_j * exp(w x_j^2). They stay O(1) where the raw
/// weights underflow.
template <typename Scalar>
struct QuadratureRule {
  VectorX<Scalar> nodes;
  VectorX<Scalar> weights;
  VectorX<Scalar> function_weights;
  int weight_exponent = 1;

  Eigen::Index size() const { return nodes.size(); }
};

template <typename Scalar>
QuadratureRule<Scalar> gauss_hermite_rule(int num_nodes, int weight_exponent = 1) {
  using std::abs;
  using std::exp;
  using std::sqrt;
  if (num_nodes < 1) throw std::invalid_argument("gauss_hermite_rule: need at least one node");
  if (num_nodes > kMaxQuadratureNodes)
    throw std::length_error("gauss_hermite_rule: too many nodes");
  if (weight_exponent != 1 && weight_exponent != 2)
    throw std::invalid_argument("gauss_hermite_rule: weight exponent must be 1 or 2");

  const int q = num_nodes;
  VectorX<Scalar> y(q);
  if (q == 1) {
    y[0] = 0;
  } else {
    // Golub-Welsch on the Jacobi matrix of the physicists' Hermite weight.
    VectorX<double> diag = VectorX<double>::Zero(q);
    VectorX<double> sub(q - 1);
    for (int k = 1; k < q; ++k) sub[k - 1] = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<MatrixX<double>> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    for (int j = 0; j < q; ++j) y[j] = static_cast<Scalar>(solver.eigenvalues()[j]);

    // Newton polish on h_q; the common scale factor of the recurrence cancels.
    const Scalar tol = std::numeric_limits<Scalar>::epsilon() * 4;
    for (int j = 0; j < q; ++j) {
      for (int iter = 0; iter < 12; ++iter) {
        Scalar h_top = 0, h_below = 0, scale_top = 0, scale_below = 0;
        detail::hermite_recurrence<Scalar>(q, y[j], [&](int k, Scalar v, Scalar ls) {
          if (k == q - 1) { h_below = v; scale_below = ls; }
          if (k == q) { h_top = v; scale_top = ls; }
        });
        h_below *= exp(scale_below - scale_top);
        const Scalar derivative = sqrt(Scalar(2 * q)) * h_below - y[j] * h_top;
        const Scalar step = h_top / derivative;
        y[j] -= step;
        if (abs(step) <= tol * std::max(Scalar(1), abs(y[j]))) break;
      }
    }
    // Enforce exact reflection symmetry.
    for (int j = 0; j < q / 2; ++j) {
      const Scalar a = (abs(y[j]) + abs(y[q - 1 - j])) / 2;
      y[j] = -a;
      y[q - 1 - j] = a;
    }
    if (q % 2 == 1) y[q / 2] = 0;
  }

  QuadratureRule<Scalar> rule;
  rule.weight_exponent = weight_exponent;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  rule.function_weights.resize(q);
  for (int j = 0; j < q; ++j) {
    // Christoffel function: w_j e^{y_j^2} = 1 / sum_{k<q} h_k(y_j)^2.
    const Scalar fw = Scalar(1) / hermite_christoffel_sum<Scalar>(q - 1, y[j]);
    const Scalar w = fw * exp(-y[j] * y[j]);
    if (weight_exponent == 1) {
      rule.nodes[j] = y[j];
      rule.weights[j] = w;
      rule.function_weights[j] = fw;
    } else {
      const Scalar r = sqrt(Scalar(2));
      rule.nodes[j] = y[j] / r;
      rule.weights[j] = w / r;
      rule.function_weights[j] = fw / r;
    }
  }
  for (int j = 0; j < q / 2; ++j) {
    rule.weights[q - 1 - j] = rule.weights[j];
    rule.function_weights[q - 1 - j] = rule.function_weights[j];
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Fields

/// Complex coefficient tensor c_m over the box 0 <= m_j < extent.
template <typename Scalar>
class BasicSpectralField {
 public:
  using Complex = std::complex<Scalar>;

  BasicSpectralField() = default;
  BasicSpectralField(int dim, int extent) : dim_(dim), extent_(extent) {
    MultiIndex::check_dim(dim);
    if (extent < 1) throw std::invalid_argument("SpectralField: extent must be positive");
    Eigen::Index n = 1;
    for (int j = 0; j < dim; ++j) n *= extent;
    coeffs_ = ComplexVectorX<Scalar>::Zero(n);
  }

  static BasicSpectralField single_mode(int dim, int extent, const MultiIndex& m,
                                        Complex value = Complex(1)) {
    BasicSpectralField f(dim, extent);
    f[m] = value;
    return f;
  }

  int dim() const { return dim_; }
  int extent() const { return extent_; }
  Eigen::Index size() const { return coeffs_.size(); }

  ComplexVectorX<Scalar>& coeffs() { return coeffs_; }
  const ComplexVectorX<Scalar>& coeffs() const { return coeffs_; }

  Eigen::Index flat_index(const MultiIndex& m) const {
    if (m.dim() != dim_) throw std::invalid_argument("SpectralField: multi-index dimension mismatch");
    Eigen::Index idx = 0;
    for (int j = dim_ - 1; j >= 0; --j) {
      if (m[j] >= extent_) throw std::out_of_range("SpectralField: degree outside extent");
      idx = idx * extent_ + m[j];
    }
    return idx;
  }

  MultiIndex multi_index(Eigen::Index flat) const {
    MultiIndex m = MultiIndex::zeros(dim_);
    for (int j = 0; j < dim_; ++j) {
      m.set(j, static_cast<int>(flat % extent_));
      flat /= extent_;
    }
    return m;
  }

  Complex& operator[](const MultiIndex& m) { return coeffs_[flat_index(m)]; }
  const Complex& operator[](const MultiIndex& m) const { return coeffs_[flat_index(m)]; }

  /// L2 norm (Parseval).
  Scalar norm() const { return coeffs_.norm(); }

  bool same_shape(const BasicSpectralField& o) const { return dim_ == o.dim_ && extent_ == o.extent_; }

  /// Copy into a box of a different extent; modes that do not fit are dropped.
  BasicSpectralField resized(int new_extent) const {
    BasicSpectralField out(dim_, new_extent);
    const int common = std::min(extent_, new_extent);
    for (Eigen::Index i = 0; i < size(); ++i) {
      const MultiIndex m = multi_index(i);
      if (m.max_degree() < common) out[m] = coeffs_[i];
    }
    return out;
  }

  template <typename Other>
  BasicSpectralField<Other> cast() const {
    BasicSpectralField<Other> out(dim_, extent_);
    out.coeffs() = coeffs_.template cast<std::complex<Other>>();
    return out;
  }

 private:
  int dim_ = 1;
  int extent_ = 1;
  ComplexVectorX<Scalar> coeffs_;
};

/// Total degree |m| of every flat index of a (dim, extent) box.
inline Eigen::VectorXi mode_levels(int dim, int extent) {
  MultiIndex::check_dim(dim);
  Eigen::Index n = 1;
  for (int j = 0; j < dim; ++j) n *= extent;
  Eigen::VectorXi levels(n);
  Eigen::Index i = 0;
  const int e1 = dim > 1 ? extent : 1;
  const int e2 = dim > 2 ? extent : 1;
  for (int m2 = 0; m2 < e2; ++m2)
    for (int m1 = 0; m1 < e1; ++m1)
      for (int m0 = 0; m0 < extent; ++m0) levels[i++] = m0 + m1 + m2;
  return levels;
}

/// Largest single-axis degree of every flat index.
inline Eigen::VectorXi mode_max_degrees(int dim, int extent) {
  Eigen::Index n = 1;
  for (int j = 0; j < dim; ++j) n *= extent;
  Eigen::VectorXi out(n);
  Eigen::Index i = 0;
  const int e1 = dim > 1 ? extent : 1;
  const int e2 = dim > 2 ? extent : 1;
  for (int m2 = 0; m2 < e2; ++m2)
    for (int m1 = 0; m1 < e1; ++m1)
      for (int m0 = 0; m0 < extent; ++m0) out[i++] = std::max({m0, m1, m2});
  return out;
}

enum class Grid { collocation, product };

inline const char* to_string(Grid g) { return g == Grid::collocation ? "collocation" : "product"; }

/// Values on a tensor quadrature grid (points per axis, axis 0 fastest).
template <typename Scalar>
struct BasicGridField {
  Grid grid = Grid::collocation;
  int dim = 1;
  int points = 0;
  ComplexVectorX<Scalar> values;
};

// ---------------------------------------------------------------------------
// Tensor contraction

using AxisLengths = std::array<Eigen::Index, kMaxDimension>;

/// Applies `op` (new_len x old_len) along `axis` of a flat tensor with the given lengths.
template <typename Scalar, typename OpScalar>
ComplexVectorX<Scalar> contract_axis(const ComplexVectorX<Scalar>& in, int dim, AxisLengths& lens,
                                     int axis, const MatrixX<OpScalar>& op) {
  using Complex = std::complex<Scalar>;
  using CMatrix = MatrixX<Complex>;
  if (op.cols() != lens[axis]) throw std::invalid_argument("contract_axis: operator shape mismatch");
  Eigen::Index before = 1;
  Eigen::Index after = 1;
  for (int j = 0; j < axis; ++j) before *= lens[j];
  for (int j = axis + 1; j < dim; ++j) after *= lens[j];
  const Eigen::Index old_len = lens[axis];
  const Eigen::Index new_len = op.rows();
  ComplexVectorX<Scalar> out(before * new_len * after);
  if (axis == 0) {
    Eigen::Map<const CMatrix> x(in.data(), old_len, after);
    Eigen::Map<CMatrix> y(out.data(), new_len, after);
    y.noalias() = op.template cast<Complex>() * x;
  } else {
    const MatrixX<Complex> op_t = op.transpose().template cast<Complex>();
    for (Eigen::Index a = 0; a < after; ++a) {
      Eigen::Map<const CMatrix> x(in.data() + a * before * old_len, before, old_len);
      Eigen::Map<CMatrix> y(out.data() + a * before * new_len, before, new_len);
      y.noalias() = x * op_t;
    }
  }
  lens[axis] = new_len;
  return out;
}

/// Sum of a real tensor against per-axis weights; each axis is reduced in mirrored
/// pairs (j, n-1-j) so integrands odd in any axis cancel exactly.
template <typename Scalar>
Scalar integrate_tensor(const VectorX<Scalar>& values, int dim, const VectorX<Scalar>& weights) {
  const Eigen::Index q = weights.size();
  VectorX<Scalar> cur = values;
  for (int axis = dim - 1; axis >= 0; --axis) {
    // Reduce the slowest axis first; the remaining tensor keeps axes 0..axis-1.
    Eigen::Index inner = 1;
    for (int j = 0; j < axis; ++j) inner *= q;
    VectorX<Scalar> next(inner);
    for (Eigen::Index i = 0; i < inner; ++i) {
      Scalar acc = 0;
      for (Eigen::Index j = 0; j < q / 2; ++j)
        acc += weights[j] * (cur[i + j * inner] + cur[i + (q - 1 - j) * inner]);
      if (q % 2 == 1) acc += weights[q / 2] * cur[i + (q / 2) * inner];
      next[i] = acc;
    }
    cur = std::move(next);
  }
  return cur[0];
}

// ---------------------------------------------------------------------------
// Basis

/// Quadrature grids and tabulated Hermite functions for a (dim, K) truncation.
///
/// Two rules are held per axis:
///  - collocation: Gauss-Hermite (w=1) with K+1 nodes. The transform pair is exact
///    and square, so analyze(synthesize(u)) == u and the discrete L2 norm equals
///    the coefficient norm.
///  - product: Gauss-Hermite (w=2) with 2*(K+headroom)+2 nodes, exact for
///    integrals of four Hermite functions of degree <= K+headroom times |x|^2.
/// Value tables cover degrees 0..K+headroom so ladder words of length <= headroom
/// can be synthesized without truncation.
template <typename Scalar>
class BasicHermiteBasis {
 public:
  BasicHermiteBasis(int dim, int max_degree, int headroom = kLadderHeadroom)
      : dim_(dim), max_degree_(max_degree), headroom_(headroom) {
    MultiIndex::check_dim(dim);
    if (max_degree < 1) throw std::invalid_argument("HermiteBasis: K must be >= 1");
    if (headroom < 0) throw std::invalid_argument("HermiteBasis: negative headroom");
    if (max_degree + headroom > kDefaultDegreeCap)
      throw std::length_error("HermiteBasis: K exceeds the degree cap");
    collocation_ = gauss_hermite_rule<Scalar>(max_degree + 1, 1);
    product_ = gauss_hermite_rule<Scalar>(2 * eval_degree() + 2, 2);
    collocation_values_ = hermite_values<Scalar>(eval_degree(), collocation_.nodes);
    product_values_ = hermite_values<Scalar>(eval_degree(), product_.nodes);
    analysis_ = collocation_values_.topRows(extent()) * collocation_.function_weights.asDiagonal();
  }

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  int headroom() const { return headroom_; }
  int eval_degree() const { return max_degree_ + headroom_; }
  int extent() const { return max_degree_ + 1; }

  const QuadratureRule<Scalar>& rule(Grid g) const { return g == Grid::collocation ? collocation_ : product_; }
  const MatrixX<Scalar>& values(Grid g) const {
    return g == Grid::collocation ? collocation_values_ : product_values_;
  }
  int points(Grid g) const { return static_cast<int>(rule(g).size()); }

  /// (K+1) x Q matrix mapping collocation values to coefficients along one axis.
  const MatrixX<Scalar>& analysis_matrix() const { return analysis_; }

  BasicSpectralField<Scalar> zero_field() const { return BasicSpectralField<Scalar>(dim_, extent()); }

 private:
  int dim_;
  int max_degree_;
  int headroom_;
  QuadratureRule<Scalar> collocation_;
  QuadratureRule<Scalar> product_;
  MatrixX<Scalar> collocation_values_;
  MatrixX<Scalar> product_values_;
  MatrixX<Scalar> analysis_;
};

/// Pointwise values sum_m c_m h_m(x) on the chosen grid, one axis at a time.
template <typename Scalar>
BasicGridField<Scalar> synthesize(const BasicHermiteBasis<Scalar>& basis, const BasicSpectralField<Scalar>& u,
                                  Grid grid = Grid::collocation) {
  if (u.dim() != basis.dim()) throw std::invalid_argument("synthesize: dimension mismatch");
  if (u.extent() > basis.eval_degree() + 1)
    throw std::invalid_argument("synthesize: field degree exceeds tabulated range");
  const MatrixX<Scalar> op = basis.values(grid).topRows(u.extent()).transpose();
  AxisLengths lens{1, 1, 1};
  for (int j = 0; j < u.dim(); ++j) lens[j] = u.extent();
  ComplexVectorX<Scalar> cur = u.coeffs();
  for (int axis = 0; axis < u.dim(); ++axis) cur = contract_axis<Scalar>(cur, u.dim(), lens, axis, op);
  return BasicGridField<Scalar>{grid, u.dim(), basis.points(grid), std::move(cur)};
}

/// Quadrature coefficients c_m = <u, h_m> from collocation values.
/// Exact for any u in the span of h_m with m_j <= K; content above K aliases.
template <typename Scalar>
BasicSpectralField<Scalar> analyze(const BasicGridField<Scalar>& values, const BasicHermiteBasis<Scalar>& basis) {
  if (values.grid != Grid::collocation)
    throw std::invalid_argument("analyze: values must live on the collocation grid");
  Eigen::Index expected = 1;
  for (int j = 0; j < basis.dim(); ++j) expected *= basis.points(Grid::collocation);
  if (values.dim != basis.dim() || values.points != basis.points(Grid::collocation) ||
      values.values.size() != expected)
    throw std::invalid_argument("analyze: grid shape mismatch");
  AxisLengths lens{1, 1, 1};
  for (int j = 0; j < basis.dim(); ++j) lens[j] = values.points;
  ComplexVectorX<Scalar> cur = values.values;
  for (int axis = 0; axis < basis.dim(); ++axis)
    cur = contract_axis<Scalar>(cur, basis.dim(), lens, axis, basis.analysis_matrix());
  BasicSpectralField<Scalar> out(basis.dim(), basis.extent());
  out.coeffs() = std::move(cur);
  return out;
}

/// Integral of a real function sampled on a grid of the basis.
template <typename Scalar>
Scalar integrate(const BasicHermiteBasis<Scalar>& basis, Grid grid, const VectorX<Scalar>& values) {
  return integrate_tensor<Scalar>(values, basis.dim(), basis.rule(grid).function_weights);
}

using HermiteBasis = BasicHermiteBasis<double>;
using SpectralField = BasicSpectralField<double>;
using GridField = BasicGridField<double>;

}  // namespace oscillab
