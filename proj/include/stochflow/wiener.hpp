// Deterministic, seedable Brownian increment lattices on the two-scale
// grid (quadrature scale dt, evaluation scale h = Q*dt), with coarsening
// for coupled reference solutions and a binary dump/load format.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflow {

// splitmix64 finalizer; full-avalanche mix of a 64-bit counter.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: the sample at (seed, path, component, index) is
/// a pure function of its key, independent of traversal order.
inline std::uint64_t counter_rng(std::uint64_t seed, std::uint64_t path,
                                 std::uint64_t component, std::uint64_t index) {
  std::uint64_t s = mix64(seed ^ 0x8c5f2c1d4e9a7b63ULL);
  s = mix64(s ^ mix64(path ^ 0xd1342543de82ef95ULL));
  s = mix64(s ^ mix64(component ^ 0xaf251af3b0f025b5ULL));
  return mix64(s ^ mix64(index ^ 0x9fb21c651e98df25ULL));
}

/// Uniform in (0,1), never exactly 0 or 1.
inline double uniform01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Acklam's inverse normal CDF (relative error below 1.15e-9, refined by
/// one Halley step to full double precision).
inline double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  // One Halley refinement against the exact CDF.
  const double e =
      0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) *
                   std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

/// Standard normal sample for a counter key.
inline double normal_sample(std::uint64_t seed, std::uint64_t path,
                            std::uint64_t component, std::uint64_t index) {
  return inverse_normal_cdf(uniform01(counter_rng(seed, path, component, index)));
}

/// Two-scale Brownian increment lattice. Increments are stored at the
/// finest scale only (d rows of N*Q samples, each ~ Normal(0, dt)).
struct WienerGrid {
  int d = 0;
  double T = 0.0;
  std::int64_t N = 0;
  std::int64_t Q = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  // increments[i] holds component i+1's fine increments (components are
  // 1-based to match the letter alphabet; letter 0 is time).
  std::vector<std::vector<double>> increments;

  double fine(int component, std::int64_t k) const {
    return increments[component - 1][k];
  }

  /// Evaluation-scale increment of component i over step n (sum of the
  /// Q fine increments).
  double step_increment(int component, std::int64_t n) const {
    const auto& row = increments[component - 1];
    double s = 0.0;
    for (std::int64_t q = n * Q; q < (n + 1) * Q; ++q) s += row[q];
    return s;
  }
};

inline WienerGrid generate(int d, double T, std::int64_t N, std::int64_t Q,
                           std::uint64_t seed, std::uint64_t path_index = 0) {
  if (d < 1 || N < 1 || Q < 1 || !(T > 0.0))
    throw std::invalid_argument("wiener::generate: non-positive argument");
  WienerGrid g;
  g.d = d;
  g.T = T;
  g.N = N;
  g.Q = Q;
  g.dt = T / static_cast<double>(N * Q);
  g.seed = seed;
  g.path_index = path_index;
  const double sd = std::sqrt(g.dt);
  g.increments.assign(d, std::vector<double>(static_cast<std::size_t>(N * Q)));
  for (int i = 0; i < d; ++i) {
    auto& row = g.increments[i];
    for (std::int64_t k = 0; k < N * Q; ++k)
      row[static_cast<std::size_t>(k)] =
          sd * normal_sample(seed, path_index, static_cast<std::uint64_t>(i + 1),
                             static_cast<std::uint64_t>(k));
  }
  return g;
}

/// Sums `factor` adjacent fine increments. The total lattice length
/// N*Q must be divisible by factor; N is reduced and Q kept when factor
/// divides Q is not assumed — the result treats the coarse lattice as
/// its new finest scale with Q unchanged semantics handled by caller.
inline WienerGrid coarsen(const WienerGrid& g, std::int64_t factor) {
  if (factor < 1 || (g.N * g.Q) % factor != 0)
    throw std::invalid_argument("wiener::coarsen: factor must divide N*Q");
  if (factor == 1) return g;
  WienerGrid out;
  out.d = g.d;
  out.T = g.T;
  out.seed = g.seed;
  out.path_index = g.path_index;
  const std::int64_t fine_total = g.N * g.Q / factor;
  // Keep Q if factor divides into the step structure cleanly, else
  // collapse to Q=1 on the coarse lattice.
  if (g.Q % factor == 0) {
    out.N = g.N;
    out.Q = g.Q / factor;
  } else {
    out.N = fine_total;
    out.Q = 1;
  }
  out.dt = g.T / static_cast<double>(fine_total);
  out.increments.assign(g.d, std::vector<double>(static_cast<std::size_t>(fine_total)));
  for (int i = 0; i < g.d; ++i) {
    const auto& src = g.increments[i];
    auto& dst = out.increments[i];
    for (std::int64_t k = 0; k < fine_total; ++k) {
      double s = 0.0;
      for (std::int64_t m = 0; m < factor; ++m) s += src[k * factor + m];
      dst[k] = s;
    }
  }
  return out;
}

/// Reinterprets the evaluation/quadrature split of the same lattice:
/// N*Q must equal the current total number of fine increments.
inline WienerGrid reshape(WienerGrid g, std::int64_t N, std::int64_t Q) {
  if (N < 1 || Q < 1 || N * Q != g.N * g.Q)
    throw std::invalid_argument("wiener::reshape: N*Q must preserve the lattice size");
  g.N = N;
  g.Q = Q;
  return g;
}

/// Binary serialization: header fields d, T(bits), N, Q, seed as
/// little-endian 64-bit values, then the raw row-major doubles.
inline void dump(const WienerGrid& g, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wiener::dump: cannot open " + path);
  auto put_u64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    f.write(reinterpret_cast<const char*>(b), 8);
  };
  std::uint64_t tbits;
  std::memcpy(&tbits, &g.T, 8);
  put_u64(static_cast<std::uint64_t>(g.d));
  put_u64(tbits);
  put_u64(static_cast<std::uint64_t>(g.N));
  put_u64(static_cast<std::uint64_t>(g.Q));
  put_u64(g.seed);
  for (const auto& row : g.increments)
    for (double v : row) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_u64(bits);
    }
}

inline WienerGrid load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wiener::load: cannot open " + path);
  auto get_u64 = [&]() {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    if (!f) throw std::runtime_error("wiener::load: truncated file");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
  };
  WienerGrid g;
  g.d = static_cast<int>(get_u64());
  const std::uint64_t tbits = get_u64();
  std::memcpy(&g.T, &tbits, 8);
  g.N = static_cast<std::int64_t>(get_u64());
  g.Q = static_cast<std::int64_t>(get_u64());
  g.seed = get_u64();
  if (g.d < 1 || g.N < 1 || g.Q < 1 || !(g.T > 0.0))
    throw std::runtime_error("wiener::load: invalid header");
  g.dt = g.T / static_cast<double>(g.N * g.Q);
  g.increments.assign(g.d, std::vector<double>(static_cast<std::size_t>(g.N * g.Q)));
  for (auto& row : g.increments)
    for (double& v : row) {
      const std::uint64_t bits = get_u64();
      std::memcpy(&v, &bits, 8);
    }
  return g;
}

}  // namespace stochflow
