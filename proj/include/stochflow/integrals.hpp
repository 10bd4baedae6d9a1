// Per-step values of multiple Stratonovich integrals: exact closed
// forms where available, conditional expectations given the fine-scale
// increments via the recursive subinterval (Chen) composition, exact
// unconditional means, and the quadrature rate/effort calculus.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflow/shuffle.hpp"
#include "stochflow/wiener.hpp"
#include "stochflow/word.hpp"

namespace stochflow {

/// How per-subinterval base values are chosen when composing across the
/// quadrature lattice:
///  - brownian_bridge: conditional-expectation base catalog (exact
///    closed forms for lengths 1-2 and the special length-3 words,
///    mean-corrected linear-interpolation values otherwise);
///  - linear_path: exact iterated integrals of the piecewise-linear
///    interpolant through the lattice points (Wong-Zakai), which makes
///    tables at different resolutions of one path exactly compatible.
enum class IntegralMode { brownian_bridge, linear_path };

enum class Provenance { exact, conditioned, expectation_only };

/// One evaluation step's view of the fine increments: Q subintervals of
/// width delta for each of the d driving components.
struct StepSlice {
  double delta = 0.0;
  std::int64_t Q = 0;
  int d = 0;
  std::vector<const double*> dw;  // dw[i-1][q], q = 0..Q-1

  double h() const { return delta * static_cast<double>(Q); }
  double increment(int component, std::int64_t q) const {
    return dw[component - 1][q];
  }
  double step_increment(int component) const {
    double s = 0.0;
    for (std::int64_t q = 0; q < Q; ++q) s += dw[component - 1][q];
    return s;
  }

  static StepSlice from_grid(const WienerGrid& g, std::int64_t step) {
    StepSlice s;
    s.delta = g.dt;
    s.Q = g.Q;
    s.d = g.d;
    for (int i = 0; i < g.d; ++i)
      s.dw.push_back(g.increments[i].data() + step * g.Q);
    return s;
  }
};

/// Exact pathwise closed form, when one exists: J_0 = h, J_i = dW^i,
/// constant words J_{i...i} = (dW^i)^l / l! (and h^l / l! for zeros).
inline std::optional<double> exact_value(const Word& w, double h,
                                         const std::vector<double>& step_dw) {
  if (w.empty()) return 1.0;
  for (std::size_t k = 1; k < w.size(); ++k)
    if (w[k] != w[0]) return std::nullopt;
  const double base = (w[0] == 0) ? h : step_dw.at(w[0] - 1);
  double v = 1.0;
  for (std::size_t k = 0; k < w.size(); ++k) v *= base / static_cast<double>(k + 1);
  return v;
}

/// Exact unconditional mean E[J_w(0,t)] = c t^k as (c, k), via the
/// recursion: appending 0 integrates in time; appending a repeat of the
/// previous nonzero letter picks up the 1/2 quadratic-variation term;
/// anything else has mean zero.
inline std::pair<Rational, int> exact_mean_poly(const Word& w) {
  if (w.empty()) return {Rational(1), 0};
  const int last = w.back();
  if (last == 0) {
    Word head(w.begin(), w.end() - 1);
    auto [c, k] = exact_mean_poly(head);
    return {c / (k + 1), k + 1};
  }
  if (w.size() >= 2 && w[w.size() - 2] == last) {
    Word head(w.begin(), w.end() - 2);
    auto [c, k] = exact_mean_poly(head);
    return {c / (2 * (k + 1)), k + 1};
  }
  return {Rational(0), 0};
}

inline double exact_mean(const Word& w, double h) {
  auto [c, k] = exact_mean_poly(w);
  return static_cast<double>(c) * std::pow(h, k);
}

namespace detail {

// E[product of increments] / l! for the linear-interpolation base:
// delta^{n0} * prod_i (m_i - 1)!! delta^{m_i / 2} / l!, zero when any
// nonzero letter has odd multiplicity.
inline std::pair<Rational, int> wz_mean_poly(const Word& w) {
  std::map<int, int> mult;
  for (int c : w) ++mult[c];
  Rational coeff = 1;
  int power = 0;
  for (const auto& [letter, m] : mult) {
    if (letter == 0) {
      power += m;
      continue;
    }
    if (m % 2 != 0) return {Rational(0), 0};
    for (int t = m - 1; t >= 1; t -= 2) coeff *= t;  // (m-1)!!
    power += m / 2;
  }
  Rational fact = 1;
  for (std::size_t k = 1; k <= w.size(); ++k) fact *= static_cast<int>(k);
  return {coeff / fact, power};
}

// Mean correction (true mean minus linear-interpolation mean) as a
// coefficient of delta^{l_eff}; both means are monomials of the same
// power when nonzero.
inline double mean_correction(const Word& w, double delta) {
  auto [ct, kt] = exact_mean_poly(w);
  auto [cw, kw] = wz_mean_poly(w);
  double corr = 0.0;
  if (ct != 0) corr += static_cast<double>(ct) * std::pow(delta, kt);
  if (cw != 0) corr -= static_cast<double>(cw) * std::pow(delta, kw);
  return corr;
}

}  // namespace detail

/// Per-word evaluation plan for one step: the base value of every
/// contiguous subword on one subinterval, precomputed as closures over
/// (delta, increments at q).
class WordEvaluator {
 public:
  WordEvaluator(const Word& w, IntegralMode mode) : w_(w), mode_(mode) {
    const int l = static_cast<int>(w.size());
    if (l < 1 || l > 4)
      throw std::invalid_argument("conditional_expectation: unsupported word length for " +
                                  word_str(w));
    // Precompute static metadata for every contiguous subword [m, k).
    for (int m = 0; m < l; ++m)
      for (int k = m + 1; k <= l; ++k) {
        Sub s;
        s.m = m;
        s.k = k;
        const Word sub(w.begin() + m, w.begin() + k);
        s.letters = sub;
        s.factorial = 1.0;
        for (std::size_t t = 1; t <= sub.size(); ++t) s.factorial *= static_cast<double>(t);
        s.kind = Sub::generic;
        if (mode == IntegralMode::brownian_bridge) {
          if (sub.size() == 2) {
            s.kind = Sub::pair;
          } else if (sub.size() == 3 && sub[1] == 0 && sub[0] != 0 && sub[2] != 0) {
            s.kind = (sub[0] == sub[2]) ? Sub::i0i : Sub::i0j;
          }
        }
        subs_.push_back(std::move(s));
      }
  }

  const Word& word() const { return w_; }

  /// E[J_w | lattice increments] composed across the slice.
  double evaluate(const StepSlice& slice) const {
    const int l = static_cast<int>(w_.size());
    double P[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
    double nextP[5];
    const double delta = slice.delta;
    for (std::int64_t q = 0; q < slice.Q; ++q) {
      for (int k = 0; k <= l; ++k) nextP[k] = P[k];
      for (const Sub& s : subs_) {
        if (P[s.m] == 0.0) continue;
        nextP[s.k] += P[s.m] * base(s, slice, q, delta);
      }
      for (int k = 0; k <= l; ++k) P[k] = nextP[k];
    }
    return P[l];
  }

 private:
  struct Sub {
    int m, k;
    Word letters;
    double factorial;
    enum Kind { generic, pair, i0i, i0j } kind;
    // Mean correction coefficient cache: filled lazily per delta.
    mutable double corr_delta = -1.0;
    mutable double corr_value = 0.0;
  };

  double base(const Sub& s, const StepSlice& slice, std::int64_t q,
              double delta) const {
    auto dw = [&](int letter) {
      return letter == 0 ? delta : slice.increment(letter, q);
    };
    switch (s.kind) {
      case Sub::pair: {
        const int a = s.letters[0], b = s.letters[1];
        // Exact conditional forms for length 2: diagonal halves are
        // exact; the conditional Levy area has zero mean.
        return 0.5 * dw(a) * dw(b);
      }
      case Sub::i0i: {
        const double x = dw(s.letters[0]);
        return delta * (x * x - delta) / 6.0;
      }
      case Sub::i0j:
        return delta * dw(s.letters[0]) * dw(s.letters[2]) / 6.0;
      case Sub::generic:
      default: {
        double v = 1.0;
        for (int letter : s.letters) v *= dw(letter);
        v /= s.factorial;
        if (mode_ == IntegralMode::brownian_bridge && s.letters.size() >= 3) {
          if (s.corr_delta != delta) {
            s.corr_value = detail::mean_correction(s.letters, delta);
            s.corr_delta = delta;
          }
          v += s.corr_value;
        }
        return v;
      }
    }
  }

  Word w_;
  IntegralMode mode_;
  std::vector<Sub> subs_;
};

/// One-off conditional expectation (builds the evaluator each call; the
/// IntegralTable builder below caches evaluators across steps).
inline double conditional_expectation(const Word& w, const StepSlice& slice,
                                      IntegralMode mode = IntegralMode::brownian_bridge) {
  return WordEvaluator(w, mode).evaluate(slice);
}

/// Per-step values of the integrals a scheme needs.
struct IntegralTable {
  double h = 0.0;
  std::int64_t step = 0;
  std::map<Word, double> values;
  std::map<Word, Provenance> provenance;

  double at(const Word& w) const {
    auto it = values.find(w);
    if (it == values.end())
      throw std::out_of_range("IntegralTable: missing word " + word_str(w));
    return it->second;
  }
  bool has(const Word& w) const { return values.count(w) != 0; }
};

/// Reusable builder: one evaluator per conditioned word, shared across
/// all steps and paths of an experiment.
class TableBuilder {
 public:
  TableBuilder(std::vector<Word> conditioned, std::vector<Word> expectation_only,
               IntegralMode mode)
      : mode_(mode) {
    std::set<Word> seen;
    std::set<Word> evaluated_pairs;
    for (const Word& w : conditioned) {
      if (!seen.insert(w).second) continue;
      if (is_constant(w) || w.size() == 1) {
        exact_words_.push_back(w);
        continue;
      }
      // Levy-pair dedup: once J_{ij} is known, J_{ji} follows exactly
      // from the shuffle identity J_i J_j = J_{ij} + J_{ji}.
      if (w.size() == 2 && w[0] != w[1]) {
        const Word rev{w[1], w[0]};
        if (evaluated_pairs.count(rev)) {
          derived_pairs_.emplace_back(w, rev);
          continue;
        }
        evaluated_pairs.insert(w);
      }
      conditioned_.emplace_back(w, mode);
    }
    for (const Word& w : expectation_only)
      if (seen.insert(w).second) expectation_only_.push_back(w);
  }

  IntegralMode mode() const { return mode_; }

  /// Fills (or, when the table already carries the key set, overwrites
  /// in place without allocation) the per-step values.
  void update(IntegralTable& t, const StepSlice& slice,
              std::int64_t step_index = 0) const {
    const bool fresh = t.values.empty();
    t.h = slice.h();
    t.step = step_index;
    std::vector<double> step_dw(slice.d);
    for (int i = 1; i <= slice.d; ++i) step_dw[i - 1] = slice.step_increment(i);
    const auto put = [&](const Word& w, double v, Provenance p) {
      if (fresh) {
        t.values.emplace(w, v);
        t.provenance.emplace(w, p);
      } else {
        t.values.find(w)->second = v;
      }
    };
    for (const Word& w : exact_words_)
      put(w, *exact_value(w, t.h, step_dw), Provenance::exact);
    for (const WordEvaluator& ev : conditioned_)
      put(ev.word(), ev.evaluate(slice), Provenance::conditioned);
    for (const auto& [w, rev] : derived_pairs_) {
      const double ja = (w[0] == 0) ? t.h : step_dw[w[0] - 1];
      const double jb = (w[1] == 0) ? t.h : step_dw[w[1] - 1];
      put(w, ja * jb - t.values.find(rev)->second, Provenance::conditioned);
    }
    for (const Word& w : expectation_only_)
      put(w, exact_mean(w, t.h), Provenance::expectation_only);
  }

  IntegralTable build(const StepSlice& slice, std::int64_t step_index = 0) const {
    IntegralTable t;
    update(t, slice, step_index);
    return t;
  }

 private:
  static bool is_constant(const Word& w) {
    for (int c : w)
      if (c != w[0]) return false;
    return true;
  }

  IntegralMode mode_;
  std::vector<Word> exact_words_;
  std::vector<WordEvaluator> conditioned_;
  std::vector<std::pair<Word, Word>> derived_pairs_;  // (word, evaluated reverse)
  std::vector<Word> expectation_only_;
};

/// Number of quadrature lattice points needed so that the conditioned
/// approximation of J_w matches a global order-M scheme:
/// Q_w = ceil(h^{-2(M + 1/2 - (l+n)/2) / (n*+1)}), at least 1.
inline std::int64_t q_for_word(const Word& w, double h, double M) {
  const WordStats st = word_stats(w);
  if (st.constant) return 1;
  const RatePair r = quadrature_rate(w);
  const double local_target = M + 0.5;  // local L2 order for global order M
  const double expo = (local_target - r.h_exponent) / r.q_exponent;
  if (expo <= 0.0) return 1;  // already accurate enough at Q = 1
  return static_cast<std::int64_t>(std::ceil(std::pow(h, -expo) - 1e-9));
}

/// Modeled quadrature operation count for approximating one word at
/// lattice size Q: Q^e with e = 0 (exact), 1 (single sum), 2 (double
/// sum) per the shuffle classification; words longer than 5 letters use
/// the generic exponent l - 1.
inline std::uint64_t quad_cost(const Word& w, std::int64_t Q) {
  int e;
  if (w.size() > 5) {
    e = static_cast<int>(w.size()) - 1;
  } else {
    switch (classify_word(w)) {
      case WordClass::exact: e = 0; break;
      case WordClass::single_sum: e = 1; break;
      default: e = 2; break;
    }
  }
  std::uint64_t cost = 1;
  for (int t = 0; t < e; ++t) cost *= static_cast<std::uint64_t>(Q);
  return cost;
}

}  // namespace stochflow
