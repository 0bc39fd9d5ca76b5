#include "oscillab/estimates.hpp"

#include "oscillab/parallel.hpp"
#include "oscillab/random_fields.hpp"

#include <cmath>
#include <map>

namespace oscillab {

void BilinearSettings::validate() const {
  MultiIndex::check_dim(dim);
  if (!(T > 0.0) || T > std::numbers::pi + 1e-12) throw std::invalid_argument("T must lie in (0, pi]");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!(prune_tol >= 0.0) || prune_tol >= 1.0) throw std::invalid_argument("prune_tol must lie in [0, 1)");
}

void time_rule(double T, std::vector<double>& nodes, std::vector<double>& weights) {
  constexpr int kPanelNodes = 8;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(kPanelNodes);
  Eigen::VectorXd sub(kPanelNodes - 1);
  for (int k = 1; k < kPanelNodes; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gl;
  gl.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const int panels = std::max(1, static_cast<int>(std::ceil(4.0 * T / std::numbers::pi - 1e-12)));
  const double h = T / panels;
  nodes.clear();
  weights.clear();
  for (int p = 0; p < panels; ++p)
    for (int j = 0; j < kPanelNodes; ++j) {
      const double v0 = gl.eigenvectors()(0, j);
      nodes.push_back(p * h + h * (gl.eigenvalues()[j] + 1.0) / 2.0);
      weights.push_back(h * v0 * v0);
    }
}

double bilinear_normalizer(long long N, long long M, int dim, int k1, int k2) {
  const double n = static_cast<double>(N), m = static_cast<double>(M);
  return std::pow(n, k1) * std::pow(m, k2) * std::pow(m, (dim - 1) / 2.0) / std::sqrt(n);
}

namespace {

// Rows of P^T V for the letters of `word` on one axis: for each letter L (leftmost
// first) row k becomes sqrt(k/2) V(k-1) + sign sqrt((k+1)/2) V(k+1).
Eigen::MatrixXd word_table(const PWord& word, int axis, const Eigen::MatrixXd& values, int extent_in) {
  Eigen::MatrixXd cur = values.topRows(extent_in + word.ord_on_axis(axis));
  for (const Letter& l : word.letters()) {
    if (l.axis != axis) continue;
    const double sign = l.kind == LetterKind::grad ? -1.0 : 1.0;
    Eigen::MatrixXd next(cur.rows() - 1, cur.cols());
    for (Eigen::Index k = 0; k < next.rows(); ++k) {
      next.row(k) = sign * std::sqrt((k + 1) / 2.0) * cur.row(k + 1);
      if (k > 0) next.row(k) += std::sqrt(k / 2.0) * cur.row(k - 1);
    }
    cur = std::move(next);
  }
  return cur.topRows(extent_in);
}

std::string axis_key(const PWord& w, int axis) {
  std::string key;
  for (const Letter& l : w.letters())
    if (l.axis == axis) key += l.kind == LetterKind::grad ? 'D' : 'X';
  return key;
}

struct AxisTables {
  // tables[axis]: extent x P
  std::array<Eigen::MatrixXd, kMaxDimension> t;
};

// Generic tensor synthesis on the pruned grid.
Eigen::VectorXcd synth_generic(const SpectralField& f, const AxisTables& tabs) {
  AxisLengths lens{1, 1, 1};
  for (int j = 0; j < f.dim(); ++j) lens[j] = f.extent();
  Eigen::VectorXcd cur = f.coeffs();
  for (int axis = 0; axis < f.dim(); ++axis) {
    const Eigen::MatrixXd op = tabs.t[axis].transpose();
    cur = contract_axis<double>(cur, f.dim(), lens, axis, op);
  }
  return cur;
}

// d = 2 synthesis exploiting the triangular support m0 + m1 <= E - 1.
// Stage one contracts axis 1: A = C * T1 (E x P); stage two U = T0^T A.
void stage_one(const Eigen::MatrixXd& cre, const Eigen::MatrixXd& cim, const Eigen::MatrixXd& t1, Eigen::MatrixXd& are,
               Eigen::MatrixXd& aim) {
  const Eigen::Index e = cre.rows();
  const Eigen::Index p = t1.cols();
  are.setZero(e, p);
  aim.setZero(e, p);
  constexpr Eigen::Index block = 256;
  for (Eigen::Index r = 0; r < e; r += block) {
    const Eigen::Index rows = std::min(block, e - r);
    const Eigen::Index cols = e - r;  // m1 <= E - 1 - r
    are.middleRows(r, rows).noalias() = cre.block(r, 0, rows, cols) * t1.topRows(cols);
    aim.middleRows(r, rows).noalias() = cim.block(r, 0, rows, cols) * t1.topRows(cols);
  }
}

}  // namespace

BilinearCell bilinear_cell(long long N, long long M, const std::vector<WordPair>& words, const BilinearSettings& cfg) {
  cfg.validate();
  if (!is_dyadic(N) || !is_dyadic(M)) throw std::invalid_argument("N and M must be powers of two");
  if (M > N) throw std::invalid_argument("bilinear: M must not exceed N");
  if (words.empty()) throw std::invalid_argument("bilinear: no word pairs");
  const int dim = cfg.dim;
  int ord_a = 0, ord_b = 0;
  for (const WordPair& w : words) {
    w.a.validate(dim);
    w.b.validate(dim);
    if (w.a.ord() + w.b.ord() > kLadderHeadroom) throw std::invalid_argument("bilinear: word orders exceed headroom");
    for (int a = 0; a < dim; ++a) {
      ord_a = std::max(ord_a, w.a.ord_on_axis(a));
      ord_b = std::max(ord_b, w.b.ord_on_axis(a));
    }
  }
  const int eu = localized_extent(dim, N);
  const int ev = localized_extent(dim, M);
  const int deg_u = eu - 1 + ord_a;
  const int deg_v = ev - 1 + ord_b;

  // |U|^2 |V|^2 is a polynomial of degree 2(deg_u + deg_v) times exp(-2|x|^2).
  const int q = deg_u + deg_v + 1;
  const auto rule = gauss_hermite_rule<double>(q, 2);
  Eigen::VectorXd score(q);
  for (int j = 0; j < q; ++j)
    score[j] = rule.function_weights[j] * hermite_christoffel_sum<double>(deg_u, rule.nodes[j]) *
               hermite_christoffel_sum<double>(deg_v, rule.nodes[j]);
  const double cut = cfg.prune_tol * score.maxCoeff();
  std::vector<int> keep;
  for (int j = 0; j < q; ++j)
    if (score[j] > cut) keep.push_back(j);
  const int p = static_cast<int>(keep.size());
  Eigen::VectorXd x(p), w(p);
  for (int i = 0; i < p; ++i) {
    x[i] = rule.nodes[keep[i]];
    w[i] = rule.function_weights[keep[i]];
  }
  const Eigen::MatrixXd vu = hermite_values<double>(deg_u, x, kMaxQuadratureNodes);
  const Eigen::MatrixXd vv = hermite_values<double>(deg_v, x, kMaxQuadratureNodes);

  std::vector<AxisTables> ta(words.size()), tb(words.size());
  for (std::size_t i = 0; i < words.size(); ++i)
    for (int a = 0; a < dim; ++a) {
      ta[i].t[a] = word_table(words[i].a, a, vu, eu);
      tb[i].t[a] = word_table(words[i].b, a, vv, ev);
    }

  // Full tensor of quadrature weights, axis 0 fastest.
  Eigen::Index grid_size = 1;
  for (int a = 0; a < dim; ++a) grid_size *= p;
  Eigen::VectorXd weight(grid_size);
  for (Eigen::Index i = 0; i < grid_size; ++i) {
    double wt = 1.0;
    Eigen::Index rest = i;
    for (int a = 0; a < dim; ++a) {
      wt *= w[rest % p];
      rest /= p;
    }
    weight[i] = wt;
  }

  std::vector<double> tn, tw;
  time_rule(cfg.T, tn, tw);

  std::vector<std::vector<double>> per_trial(cfg.trials, std::vector<double>(words.size(), 0.0));
  parallel_for(cfg.trials, cfg.threads, [&](int trial) {
    const auto tr = static_cast<std::uint64_t>(trial);
    Rng ru = make_rng(cfg.seed, {0xb1ULL, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(N), tr});
    Rng rv = make_rng(cfg.seed, {0xb2ULL, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(M), tr});
    const SpectralField u = random_localized(dim, eu, N, ru);
    const SpectralField v = random_localized(dim, ev, M, rv);
    std::vector<double>& acc = per_trial[trial];

    Eigen::MatrixXd cre, cim, are, aim;
    if (dim == 2) {
      cre.setZero(eu, eu);
      cim.setZero(eu, eu);
    }
    for (std::size_t k = 0; k < tn.size(); ++k) {
      // e^{itH}
      const SpectralField vt = linear_propagator(v, -tn[k]);
      std::vector<Eigen::VectorXcd> uw(words.size()), vw(words.size());
      if (dim == 2) {
        std::vector<std::complex<double>> phase(eu);
        for (int l = 0; l < eu; ++l) phase[l] = std::polar(1.0, (2.0 * l + dim) * tn[k]);
        for (int m1 = 0; m1 < eu; ++m1)
          for (int m0 = 0; m0 + m1 < eu; ++m0) {
            const auto c = u.coeffs()[m0 + Eigen::Index(eu) * m1] * phase[m0 + m1];
            cre(m0, m1) = c.real();
            cim(m0, m1) = c.imag();
          }
        std::map<std::string, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> stage;
        for (std::size_t i = 0; i < words.size(); ++i) {
          const std::string key = axis_key(words[i].a, 1);
          auto it = stage.find(key);
          if (it == stage.end()) {
            stage_one(cre, cim, ta[i].t[1], are, aim);
            it = stage.emplace(key, std::make_pair(are, aim)).first;
          }
          const Eigen::MatrixXd ure = ta[i].t[0].transpose() * it->second.first;
          const Eigen::MatrixXd uim = ta[i].t[0].transpose() * it->second.second;
          uw[i].resize(grid_size);
          for (Eigen::Index j = 0; j < grid_size; ++j) uw[i][j] = {ure.data()[j], uim.data()[j]};
        }
      } else {
        const SpectralField ut = linear_propagator(u, -tn[k]);
        for (std::size_t i = 0; i < words.size(); ++i) uw[i] = synth_generic(ut, ta[i]);
      }
      for (std::size_t i = 0; i < words.size(); ++i) {
        vw[i] = synth_generic(vt, tb[i]);
        const double integral =
            (weight.array() * uw[i].cwiseAbs2().array() * vw[i].cwiseAbs2().array()).sum();
        acc[i] += tw[k] * integral;
      }
    }
  });

  BilinearCell cell;
  cell.N = N;
  cell.M = M;
  cell.nodes_per_axis = p;
  cell.time_nodes = static_cast<int>(tn.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double norm = bilinear_normalizer(N, M, dim, words[i].a.ord(), words[i].b.ord());
    double best = -1.0, raw = 0.0;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const double r = std::sqrt(per_trial[trial][i]);
      if (r / norm > best) {
        best = r / norm;
        raw = r;
      }
    }
    cell.ratio.push_back(best);
    cell.raw_norm.push_back(raw);
  }
  return cell;
}

double bilinear_strichartz_ratio(long long N, long long M, const BilinearSettings& cfg) {
  return derivative_bilinear_ratio(PWord{}, PWord{}, N, M, cfg);
}

double derivative_bilinear_ratio(const PWord& word_a, const PWord& word_b, long long N, long long M,
                                 const BilinearSettings& cfg) {
  return bilinear_cell(N, M, {WordPair{word_a, word_b}}, cfg).ratio[0];
}

}  // namespace oscillab
