// Independent brute-force oracles for the test suite: iterated
// Stratonovich integrals via midpoint (trapezoidal) sums on a fine
// lattice, and Brownian-bridge refinement of a coarse lattice.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "stochflow/wiener.hpp"
#include "stochflow/word.hpp"

namespace oracle {

/// Iterated Stratonovich integral of the word over the piecewise-linear
/// path with the given fine increments (per component, 1-based letters;
/// letter 0 integrates dt). Chen's identity: across one cell the path
/// is a straight segment, whose contribution for a subword of length m
/// is the product of its letter increments divided by m!. The update is
/// therefore exact for the linear interpolant at every word length.
inline double strat_iterated(const stochflow::Word& w,
                             const std::vector<std::vector<double>>& increments,
                             double dt) {
  const std::size_t L = w.size();
  const std::size_t n = increments.empty() ? 0 : increments[0].size();
  std::vector<double> fact(L + 1, 1.0);
  for (std::size_t m = 1; m <= L; ++m) fact[m] = fact[m - 1] * static_cast<double>(m);
  std::vector<double> P(L + 1, 0.0);  // P[j] = integral of the length-j prefix
  P[0] = 1.0;
  std::vector<double> dws(L, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t m = 0; m < L; ++m)
      dws[m] = (w[m] == 0) ? dt : increments[w[m] - 1][k];
    // P_new[j] = sum_{i<=j} P_old[i] * (prod_{m=i}^{j-1} dws[m]) / (j-i)!;
    // descending j so P[i], i < j, still holds the start-of-cell value.
    for (std::size_t j = L; j >= 1; --j) {
      double acc = P[j], prod = 1.0;
      for (std::size_t i = j; i-- > 0;) {
        prod *= dws[i];
        acc += P[i] * prod / fact[j - i];
      }
      P[j] = acc;
    }
  }
  return P[L];
}

inline double strat_iterated(const stochflow::Word& w,
                             const stochflow::WienerGrid& g) {
  return strat_iterated(w, g.increments, g.dt);
}

/// Brownian-bridge refinement: splits every increment of g into
/// `factor` fine increments whose sum is the original increment.
inline stochflow::WienerGrid refine(const stochflow::WienerGrid& g,
                                    std::int64_t factor, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> n01;
  stochflow::WienerGrid out;
  out.d = g.d;
  out.T = g.T;
  out.N = g.N;
  out.Q = g.Q * factor;
  out.dt = g.dt / static_cast<double>(factor);
  out.seed = g.seed;
  out.path_index = g.path_index;
  const double sd = std::sqrt(out.dt);
  out.increments.assign(g.d, {});
  for (int i = 0; i < g.d; ++i) {
    out.increments[i].reserve(g.increments[i].size() * factor);
    for (double coarse : g.increments[i]) {
      std::vector<double> fine(factor);
      double s = 0.0;
      for (auto& v : fine) {
        v = sd * n01(rng);
        s += v;
      }
      const double adj = (coarse - s) / static_cast<double>(factor);
      for (double v : fine) out.increments[i].push_back(v + adj);
    }
  }
  return out;
}

}  // namespace oracle
