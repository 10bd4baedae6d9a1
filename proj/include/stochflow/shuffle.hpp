// Symbolic shuffle algebra of integral words: shuffle products with
// exact rational coefficients, integration-by-parts reductions of
// repeated-index words, the two-letter linear shuffle systems and the
// single/double-sum quadrature classification.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stochflow/word.hpp"

namespace stochflow {

using Rational = boost::multiprecision::cpp_rational;

/// Linear combination of words with rational coefficients.
using WordPoly = std::map<Word, Rational>;

/// Formal product of integral words (sorted multiset) acting as one
/// monomial J_{w1}·J_{w2}···; the empty monomial is the scalar 1.
using Monomial = std::vector<Word>;

/// Polynomial in integral generators: map monomial -> coefficient.
using JExpr = std::map<Monomial, Rational>;

inline void poly_add(WordPoly& p, const Word& w, const Rational& c) {
  auto it = p.find(w);
  if (it == p.end()) {
    if (c != 0) p.emplace(w, c);
    return;
  }
  it->second += c;
  if (it->second == 0) p.erase(it);
}

inline void expr_add(JExpr& e, const Monomial& m, const Rational& c) {
  auto it = e.find(m);
  if (it == e.end()) {
    if (c != 0) e.emplace(m, c);
    return;
  }
  it->second += c;
  if (it->second == 0) e.erase(it);
}

inline Monomial make_monomial(std::initializer_list<Word> ws) {
  Monomial m(ws);
  std::sort(m.begin(), m.end());
  return m;
}

inline JExpr expr_from_word(const Word& w, Rational c = 1) {
  JExpr e;
  expr_add(e, Monomial{w}, c);
  return e;
}

inline JExpr expr_scale(JExpr e, const Rational& c) {
  if (c == 0) return {};
  for (auto& [m, v] : e) v *= c;
  return e;
}

inline JExpr expr_sum(const JExpr& a, const JExpr& b) {
  JExpr out = a;
  for (const auto& [m, c] : b) expr_add(out, m, c);
  return out;
}

inline JExpr expr_mul(const JExpr& a, const JExpr& b) {
  JExpr out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) {
      Monomial m = ma;
      m.insert(m.end(), mb.begin(), mb.end());
      std::sort(m.begin(), m.end());
      expr_add(out, m, ca * cb);
    }
  return out;
}

/// Evaluates an expression given numeric values for the generator words.
inline double expr_eval(const JExpr& e,
                        const std::function<double(const Word&)>& value) {
  double total = 0.0;
  for (const auto& [m, c] : e) {
    double term = static_cast<double>(c);
    for (const Word& w : m) term *= value(w);
    total += term;
  }
  return total;
}

/// Sum over all riffle shuffles of u and v, coefficient +1 with
/// multiplicity. Every term has length l(u)+l(v).
inline WordPoly shuffle_product(const Word& u, const Word& v) {
  if (u.empty()) return {{v, 1}};
  if (v.empty()) return {{u, 1}};
  const Word u0(u.begin(), u.end() - 1);
  const Word v0(v.begin(), v.end() - 1);
  WordPoly out;
  for (const auto& [w, c] : shuffle_product(u0, v)) {
    Word t = w;
    t.push_back(u.back());
    poly_add(out, t, c);
  }
  for (const auto& [w, c] : shuffle_product(u, v0)) {
    Word t = w;
    t.push_back(v.back());
    poly_add(out, t, c);
  }
  return out;
}

inline WordPoly shuffle_product(const WordPoly& p, const Word& v) {
  WordPoly out;
  for (const auto& [u, c] : p)
    for (const auto& [w, cc] : shuffle_product(u, v)) poly_add(out, w, c * cc);
  return out;
}

/// Shuffle product of a whole monomial (product of words).
inline WordPoly shuffle_expand(const Monomial& m) {
  WordPoly out{{Word{}, 1}};
  for (const Word& w : m) out = shuffle_product(out, w);
  return out;
}

// Number of blocks of equal consecutive letters.
inline int block_count(const Word& w) {
  int blocks = w.empty() ? 0 : 1;
  for (std::size_t k = 1; k < w.size(); ++k) blocks += (w[k] != w[k - 1]);
  return blocks;
}

inline int distinct_letters(const Word& w) {
  return static_cast<int>(std::set<int>(w.begin(), w.end()).size());
}

// Pattern i...i j i...i: some letter occurs exactly once and every
// other letter is the same (covers p = 0 or q = 0 as two-block words).
inline bool is_single_minority(const Word& w) {
  if (distinct_letters(w) != 2) return false;
  std::map<int, int> counts;
  for (int c : w) ++counts[c];
  for (const auto& [letter, cnt] : counts)
    if (cnt == 1) return true;
  return false;
}

inline bool is_two_block(const Word& w) {
  return distinct_letters(w) == 2 && block_count(w) == 2;
}

/// Integration-by-parts reduction (repeated application of the two
/// product formulae). Accepts constant-letter words, words with a
/// single minority letter (i...i j i...i) and two-block words
/// (i...i j...j); the result's generators are all single-sum
/// computable and the identity is exact pathwise.
inline JExpr parts_reduce(const Word& w) {
  const int dl = distinct_letters(w);
  if (dl == 1) {
    // J_{i...i} = (J_i)^l / l!
    Rational fact = 1;
    Monomial m;
    for (std::size_t k = 0; k < w.size(); ++k) {
      fact *= static_cast<int>(k + 1);
      m.push_back(Word{w[0]});
    }
    JExpr e;
    expr_add(e, m, Rational(1) / fact);
    return e;
  }
  if (dl != 2)
    throw std::invalid_argument("parts_reduce: word " + word_str(w) +
                                " outside supported patterns; see classify_word");
  if (is_two_block(w)) return expr_from_word(w);  // already single-sum
  if (!is_single_minority(w))
    throw std::invalid_argument("parts_reduce: word " + word_str(w) +
                                " outside supported patterns; see classify_word");
  // w = i^p j i^q with q >= 1. Recurse on
  // J_{i^p j i^q} = sum_{k=1}^q (-1)^{k+1} J_{i^k} J_{i^p j i^{q-k}}
  //                 + (-1)^q C(p+q, p) J_{i^{p+q} j}.
  int j_letter = -1, i_letter = -1;
  {
    std::map<int, int> counts;
    for (int c : w) ++counts[c];
    for (const auto& [letter, cnt] : counts)
      (cnt == 1 ? j_letter : i_letter) = letter;
  }
  int p = 0;
  while (w[p] == i_letter) ++p;
  const int q = static_cast<int>(w.size()) - p - 1;
  if (q == 0) return expr_from_word(w);  // i^p j: single-sum generator

  std::function<JExpr(int, int)> reduce = [&](int pp, int qq) -> JExpr {
    if (qq == 0) {
      Word g(pp, i_letter);
      g.push_back(j_letter);
      return expr_from_word(g);
    }
    JExpr total;
    Rational sign = 1;
    for (int k = 1; k <= qq; ++k) {
      // J_{i^k} = (J_i)^k / k!
      Rational fact = 1;
      Monomial mk;
      for (int t = 1; t <= k; ++t) {
        fact *= t;
        mk.push_back(Word{i_letter});
      }
      JExpr jk;
      expr_add(jk, mk, Rational(1) / fact);
      total = expr_sum(total, expr_scale(expr_mul(jk, reduce(pp, qq - k)), sign));
      sign = -sign;
    }
    // (-1)^qq * C(pp+qq, pp) * J_{i^{pp+qq} j}
    Rational binom = 1;
    for (int t = 1; t <= qq; ++t) binom = binom * (pp + t) / t;
    Word g(pp + qq, i_letter);
    g.push_back(j_letter);
    const Rational tail_sign = (qq % 2 == 0) ? 1 : -1;
    total = expr_sum(total, expr_from_word(g, tail_sign * binom));
    return total;
  };
  return reduce(p, q);
}

/// Result of the two-letter shuffle linear system: rank over the
/// rationals, a generator set, and expressions of the remaining
/// permutation words in terms of generators and lower-order products.
struct ShuffleSystem {
  int rank = 0;
  int n_equations = 0;
  int n_unknowns = 0;
  std::vector<Word> generators;       // excluded single-sum words + free words
  std::vector<Word> free_words;       // free unknowns only
  std::map<Word, JExpr> reduction;    // pivot word -> expression
};

namespace detail {

// All unordered factorizations of the content (ca letters a, cb letters
// b) into >= 2 nonempty parts, each part given as (xa, xb).
inline void enumerate_partitions(int ca, int cb, std::pair<int, int> max_part,
                                 std::vector<std::pair<int, int>>& cur,
                                 std::vector<std::vector<std::pair<int, int>>>& out) {
  if (ca == 0 && cb == 0) {
    if (cur.size() >= 2) out.push_back(cur);
    return;
  }
  for (int xa = std::min(ca, max_part.first); xa >= 0; --xa) {
    const int xb_hi = (xa == max_part.first) ? std::min(cb, max_part.second) : cb;
    for (int xb = xb_hi; xb >= 0; --xb) {
      if (xa + xb == 0) continue;
      cur.emplace_back(xa, xb);
      enumerate_partitions(ca - xa, cb - xb, {xa, xb}, cur, out);
      cur.pop_back();
    }
  }
}

inline std::vector<Word> permutations_of(int na, int a, int nb, int b) {
  Word base(na, a);
  base.insert(base.end(), nb, b);
  std::sort(base.begin(), base.end());
  std::vector<Word> out;
  do {
    out.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

}  // namespace detail

/// Builds and solves the linear shuffle system for a two-letter index
/// pattern (given as any word carrying the multiset), per the
/// integration-by-parts algebra. Words already single-sum reachable by
/// the parts formulae (two-block, single-minority) are moved to the
/// known side; if that excludes everything, all permutation words are
/// kept as unknowns.
inline ShuffleSystem solve_shuffle_system(const Word& pattern) {
  if (pattern.size() < 2 || pattern.size() > 5)
    throw std::invalid_argument("solve_shuffle_system: pattern length must be 2..5");
  const int dl = distinct_letters(pattern);
  if (dl > 2)
    throw std::invalid_argument("solve_shuffle_system: pattern must use at most two letters");
  int a = pattern[0], b = pattern[0];
  for (int c : pattern) {
    a = std::min(a, c);
    b = std::max(b, c);
  }
  int ca = 0, cb = 0;
  for (int c : pattern) (c == a ? ca : cb)++;
  if (dl == 1) cb = 0;

  const std::vector<Word> perms = detail::permutations_of(ca, a, cb, b);

  std::vector<Word> excluded, unknowns;
  for (const Word& w : perms) {
    if (distinct_letters(w) == 2 && (is_two_block(w) || is_single_minority(w)))
      excluded.push_back(w);
    else
      unknowns.push_back(w);
  }
  if (unknowns.empty()) {
    unknowns = perms;  // degenerate pattern: keep all words as unknowns
    excluded.clear();
  }
  std::sort(unknowns.begin(), unknowns.end());  // ascending lexicographic

  std::map<Word, int> col;
  for (std::size_t k = 0; k < unknowns.size(); ++k) col[unknowns[k]] = static_cast<int>(k);
  std::set<Word> excluded_set(excluded.begin(), excluded.end());

  // Equations: for every factorization into >= 2 parts and every choice
  // of a word per part, shuffle-expand the product.
  std::vector<std::vector<std::pair<int, int>>> partitions;
  {
    std::vector<std::pair<int, int>> cur;
    detail::enumerate_partitions(ca, cb, {ca, cb}, cur, partitions);
  }
  std::set<Monomial> equations;
  for (const auto& parts : partitions) {
    std::vector<std::vector<Word>> choices;
    for (const auto& [xa, xb] : parts)
      choices.push_back(detail::permutations_of(xa, a, xb, b));
    std::vector<std::size_t> idx(parts.size(), 0);
    while (true) {
      Monomial m;
      for (std::size_t k = 0; k < parts.size(); ++k) m.push_back(choices[k][idx[k]]);
      std::sort(m.begin(), m.end());
      equations.insert(m);
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }

  // Rows: coefficients over unknown columns; rhs: monomial minus the
  // known (excluded) words.
  const int ncol = static_cast<int>(unknowns.size());
  std::vector<std::vector<Rational>> rows;
  std::vector<JExpr> rhs;
  for (const Monomial& m : equations) {
    std::vector<Rational> row(ncol, 0);
    JExpr r;
    expr_add(r, m, 1);
    for (const auto& [w, c] : shuffle_expand(m)) {
      auto it = col.find(w);
      if (it != col.end())
        row[it->second] += c;
      else if (excluded_set.count(w))
        expr_add(r, Monomial{w}, -c);
      else
        throw std::logic_error("solve_shuffle_system: unexpected word " + word_str(w));
    }
    rows.push_back(std::move(row));
    rhs.push_back(std::move(r));
  }

  // Exact Gaussian elimination, pivoting columns in ascending
  // lexicographic order so free variables sit at the lexicographic top.
  ShuffleSystem out;
  out.n_equations = static_cast<int>(rows.size());
  out.n_unknowns = ncol;
  std::vector<int> pivot_row_of_col(ncol, -1);
  int rank = 0;
  for (int c = 0; c < ncol && rank < static_cast<int>(rows.size()); ++c) {
    int pr = -1;
    for (int r = rank; r < static_cast<int>(rows.size()); ++r)
      if (rows[r][c] != 0) {
        pr = r;
        break;
      }
    if (pr < 0) continue;
    std::swap(rows[rank], rows[pr]);
    std::swap(rhs[rank], rhs[pr]);
    const Rational inv = Rational(1) / rows[rank][c];
    for (int j = 0; j < ncol; ++j) rows[rank][j] *= inv;
    rhs[rank] = expr_scale(rhs[rank], inv);
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
      if (r == rank || rows[r][c] == 0) continue;
      const Rational f = rows[r][c];
      for (int j = 0; j < ncol; ++j) rows[r][j] -= f * rows[rank][j];
      rhs[r] = expr_sum(rhs[r], expr_scale(rhs[rank], -f));
    }
    pivot_row_of_col[c] = rank;
    ++rank;
  }
  out.rank = rank;

  std::vector<int> free_cols;
  for (int c = 0; c < ncol; ++c)
    if (pivot_row_of_col[c] < 0) free_cols.push_back(c);
  for (int c : free_cols) out.free_words.push_back(unknowns[c]);

  out.generators = excluded;
  out.generators.insert(out.generators.end(), out.free_words.begin(),
                        out.free_words.end());

  for (int c = 0; c < ncol; ++c) {
    const int r = pivot_row_of_col[c];
    if (r < 0) continue;
    JExpr e = rhs[r];
    for (int fc : free_cols)
      if (rows[r][fc] != 0)
        e = expr_sum(e, expr_from_word(unknowns[fc], -rows[r][fc]));
    out.reduction[unknowns[c]] = std::move(e);
  }
  return out;
}

enum class WordClass { exact, single_sum, double_sum };

inline const char* word_class_name(WordClass c) {
  switch (c) {
    case WordClass::exact: return "exact";
    case WordClass::single_sum: return "single_sum";
    default: return "double_sum";
  }
}

namespace detail {

// Free generators of the two-letter system for canonical content
// (ca letters '1', cb letters '2'), cached.
inline const std::set<Word>& free_generators(int ca, int cb) {
  static std::map<std::pair<int, int>, std::set<Word>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(ca, cb);
  auto it = cache.find(key);
  if (it == cache.end()) {
    Word pattern(ca, 1);
    pattern.insert(pattern.end(), cb, 2);
    const ShuffleSystem sys = solve_shuffle_system(pattern);
    // Generators minus the single-minority words: two-block words with
    // both blocks repeated and any unsolved unknowns need double sums.
    std::set<Word> frees;
    for (const Word& g : sys.generators)
      if (!is_single_minority(g)) frees.insert(g);
    it = cache.emplace(key, std::move(frees)).first;
  }
  return it->second;
}

}  // namespace detail

/// Cheapest quadrature representation class of a word (length <= 5):
/// exact for constant-letter words; single_sum for words reachable by
/// the integration-by-parts formulae or solvable in terms of such
/// generators; double_sum for the irreducible free generators and any
/// word with three or more distinct letters.
inline WordClass classify_word(const Word& w) {
  if (w.empty() || w.size() > 5)
    throw std::invalid_argument("classify_word: word length must be 1..5");
  const int dl = distinct_letters(w);
  if (dl == 1) return WordClass::exact;
  if (dl >= 3) return WordClass::double_sum;
  // Two-block words are single-sum computable by the explicit
  // integration-by-parts formulae, as are single-minority words.
  if (is_two_block(w) || is_single_minority(w)) return WordClass::single_sum;
  // Otherwise consult the linear system in canonical letters.
  int a = w[0], b = w[0];
  for (int c : w) {
    a = std::min(a, c);
    b = std::max(b, c);
  }
  int ca = 0, cb = 0;
  for (int c : w) (c == a ? ca : cb)++;
  Word canon;
  for (int c : w) canon.push_back(c == a ? 1 : 2);
  return detail::free_generators(ca, cb).count(canon) ? WordClass::double_sum
                                                      : WordClass::single_sum;
}

/// Stable text rendering: words as digit strings, rationals as p/q.
inline std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

inline std::string to_string(const Monomial& m) {
  if (m.empty()) return "1";
  std::string s;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (k) s += "*";
    s += "J_" + word_str(m[k]);
  }
  return s;
}

inline std::string to_string(const JExpr& e) {
  if (e.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [m, c] : e) {
    Rational mag = c < 0 ? Rational(-c) : c;
    if (first) {
      if (c < 0) s += "-";
    } else {
      s += (c < 0) ? " - " : " + ";
    }
    first = false;
    if (mag != 1 || m.empty()) {
      s += to_string(mag);
      if (!m.empty()) s += "*";
    }
    s += m.empty() ? "" : to_string(m);
  }
  return s;
}

inline std::string to_string(const WordPoly& p) {
  JExpr e;
  for (const auto& [w, c] : p) expr_add(e, Monomial{w}, c);
  return to_string(e);
}

}  // namespace stochflow
