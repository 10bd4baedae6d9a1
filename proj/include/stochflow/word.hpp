// Multi-index words over the alphabet {0,1,...,d} with the statistics
// governing quadrature error rates, plus the order/effort calculus
// (beta exponents and critical stepsizes).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflow {

/// A word is an ordered letter sequence; letters are read left-to-right
/// in time order (leftmost = innermost/earliest integration variable),
/// so J_{0ij} integrates dt first. Letter 0 denotes time.
using Word = std::vector<int>;

inline std::string word_str(const Word& w) {
  std::string s;
  for (int c : w) s += static_cast<char>('0' + c);
  return s;
}

inline Word word_from_string(const std::string& s) {
  Word w;
  for (char c : s) {
    if (c < '0' || c > '9')
      throw std::invalid_argument("word_from_string: bad character in " + s);
    w.push_back(c - '0');
  }
  if (w.empty()) throw std::invalid_argument("word_from_string: empty word");
  return w;
}

struct WordStats {
  int length = 0;      // l(alpha)
  int zeros = 0;       // n(alpha), number of 0 letters
  int j_star = 0;      // min{j <= l-1 : letters at positions > j all equal}, 1-based
  int n_star = 0;      // zeros among positions j*..l (1-based, inclusive)
  bool constant = false;  // all letters equal: j*/n* undefined
};

inline WordStats word_stats(const Word& w) {
  if (w.empty()) throw std::invalid_argument("word_stats: empty word");
  WordStats st;
  st.length = static_cast<int>(w.size());
  for (int c : w) st.zeros += (c == 0);
  st.constant = std::all_of(w.begin(), w.end(), [&](int c) { return c == w[0]; });
  if (st.constant) return st;
  // Smallest 1-based j <= l-1 such that all letters at positions > j coincide.
  int j = st.length - 1;
  while (j >= 2 && w[j - 1] == w[st.length - 1]) --j;
  st.j_star = j;
  for (int k = st.j_star; k <= st.length; ++k) st.n_star += (w[k - 1] == 0);
  return st;
}

/// Exponent pair ((l+n)/2, (n*+1)/2) of the L2 quadrature error law
/// h^{(l+n)/2} / Q^{(n*+1)/2} for conditioned approximation of J_alpha.
struct RatePair {
  double h_exponent;
  double q_exponent;
};

inline RatePair quadrature_rate(const Word& w) {
  const WordStats st = word_stats(w);
  if (st.constant)
    throw std::invalid_argument("quadrature_rate: word " + word_str(w) +
                                " is constant-letter (approximation exact)");
  return {0.5 * (st.length + st.zeros), 0.5 * (st.n_star + 1)};
}

/// beta(M, l) = (l-1)(2M+1-l) + 1. M is a half-integer order.
inline int beta(double M, int ell) {
  if (ell < 2 || M < 0.5 * ell)
    throw std::invalid_argument("beta: need l >= 2 and M >= l/2");
  const double b = (ell - 1) * (2.0 * M + 1.0 - ell) + 1.0;
  const int bi = static_cast<int>(std::lround(b));
  if (std::abs(b - bi) > 1e-12)
    throw std::invalid_argument("beta: non-integer result (check M half-integer)");
  return bi;
}

/// Error-vs-effort exponent -M / beta(M, l) in the quadrature-dominated
/// regime.
inline double effort_exponent(double M, int ell) { return -M / beta(M, ell); }

/// Critical stepsize of the effort crossover:
/// h_cr = (T (c_M p^2 + c_E))^{-1/(1 - beta(M, l_max))}, l_max = max{d, M+1}.
inline double critical_stepsize(double M, int d, int p, double T, double c_M,
                                double c_E) {
  const int ell_max = std::max(d, static_cast<int>(std::lround(M + 1.0)));
  if (ell_max < 2)
    throw std::invalid_argument("critical_stepsize: l_max < 2 (no quadrature words)");
  const int b = beta(M, ell_max);
  const double base = T * (c_M * p * p + c_E);
  return std::pow(base, -1.0 / (1.0 - b));
}

}  // namespace stochflow
