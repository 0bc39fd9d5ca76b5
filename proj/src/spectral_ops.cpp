#include "oscillab/spectral_ops.hpp"

#include "oscillab/parallel.hpp"
#include "oscillab/random_fields.hpp"

#include <cctype>

namespace oscillab {

PWord PWord::parse(std::string_view text) {
  std::vector<Letter> letters;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == ',' || c == '\t') {
      ++i;
      continue;
    }
    Letter letter;
    if (c == 'D' || c == 'd') {
      letter.kind = LetterKind::grad;
    } else if (c == 'X' || c == 'x') {
      letter.kind = LetterKind::x;
    } else {
      throw std::invalid_argument("PWord: unexpected character '" + std::string(1, c) + "' in \"" +
                                  std::string(text) + "\"");
    }
    ++i;
    std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) throw std::invalid_argument("PWord: letter without axis in \"" + std::string(text) + "\"");
    const int axis = std::stoi(std::string(text.substr(start, i - start)));
    if (axis < 1 || axis > kMaxDimension) throw std::invalid_argument("PWord: axis out of range");
    letter.axis = axis - 1;
    letters.push_back(letter);
  }
  return PWord(std::move(letters));
}

std::string PWord::to_string() const {
  std::string out;
  for (const Letter& l : letters_) {
    if (!out.empty()) out += ' ';
    out += l.kind == LetterKind::grad ? 'D' : 'X';
    out += std::to_string(l.axis + 1);
  }
  return out;
}

std::vector<PWord> PWord::all_of_order(int order, int dim) {
  std::vector<PWord> words{PWord{}};
  for (int k = 0; k < order; ++k) {
    std::vector<PWord> next;
    for (const PWord& w : words)
      for (LetterKind kind : {LetterKind::grad, LetterKind::x})
        for (int axis = 0; axis < dim; ++axis) {
          std::vector<Letter> letters = w.letters();
          letters.push_back({kind, axis});
          next.emplace_back(std::move(letters));
        }
    words = std::move(next);
  }
  return words;
}

CommutatorResult commutator_H_P(const PWord& word, const SpectralField& u) {
  word.validate(u.dim());
  const int out_extent = u.extent() + word.ord();

  SpectralField direct = apply_H(apply_P(word, u).field);
  direct.coeffs() -= apply_P(word, apply_H(u)).field.coeffs();

  SpectralField expansion(u.dim(), out_extent);
  for (int j = 0; j < word.ord(); ++j) {
    std::vector<Letter> letters = word.letters();
    Letter& l = letters[j];
    l.kind = l.kind == LetterKind::grad ? LetterKind::x : LetterKind::grad;
    const SpectralField term = apply_P(PWord(std::move(letters)), u).field;
    accumulate(expansion, term, -2.0);
  }
  const double discrepancy = (direct.coeffs() - expansion.coeffs()).cwiseAbs().maxCoeff();
  return CommutatorResult{std::move(direct), std::move(expansion), discrepancy};
}

double bernstein_ratio(const PWord& word, long long N, int trials, std::uint64_t seed, int dim, int threads) {
  if (trials < 1) throw std::invalid_argument("bernstein_ratio: trials must be >= 1");
  word.validate(dim);
  const int extent = localized_extent(dim, N);
  const double scale = std::pow(static_cast<double>(N), word.ord());
  std::vector<double> ratios(trials, 0.0);
  parallel_for(trials, threads, [&](int trial) {
    Rng rng = make_rng(seed, {0xbe55ULL, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(N),
                              static_cast<std::uint64_t>(trial)});
    const SpectralField u = random_localized(dim, extent, N, rng);
    ratios[trial] = apply_P(word, u).field.norm() / (scale * u.norm());
  });
  double best = 0.0;
  for (double r : ratios) best = std::max(best, r);
  return best;
}

}  // namespace oscillab
