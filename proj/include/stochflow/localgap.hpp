// Monte Carlo estimate of the one-step local error gap between two
// schemes (Neumann vs Magnus remainder comparison), plus the fixed
// 6x6 comparison matrices of the non-commuting order-1 analysis.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflow/matrix.hpp"
#include "stochflow/schemes.hpp"
#include "stochflow/system.hpp"
#include "stochflow/wiener.hpp"

namespace stochflow {

/// The 6x6 matrix b weighting U_{iij} = (a_j a_i^2, a_i a_j a_i,
/// a_i^2 a_j, a_j^3, a_0 a_j, a_j a_0) in the order-1 local gap; it has
/// one small negative eigenvalue (approximately -0.03897).
inline Matrix gap_matrix_b() {
  Matrix b(6, 6, {31, 10, 1, 18, 12, 24,  //
                  10, 4, 10, 0, 0, 0,     //
                  1, 10, 31, 18, 24, 12,  //
                  18, 0, 18, 60, 36, 36,  //
                  12, 0, 24, 36, 36, 36,  //
                  24, 0, 12, 36, 36, 36});
  return b * (1.0 / 144.0);
}

/// The 6x6 matrix c weighting the distinct-triple products; positive
/// semi-definite with eigenvalues {1/6 x4, 0, 0}.
inline Matrix gap_matrix_c() {
  Matrix c(6, 6, {4, 1, 1, 1, 1, -2,   //
                  1, 4, 1, -2, 1, 1,   //
                  1, 1, 4, 1, -2, 1,   //
                  1, -2, 1, 4, 1, 1,   //
                  1, 1, -2, 1, 4, 1,   //
                  -2, 1, 1, 1, 1, 4});
  return c * (1.0 / 36.0);
}

struct LocalGapResult {
  Matrix mean_gap;      // symmetrized E[R_a^T R_a - R_b^T R_b]
  double lambda_min = 0.0;
  double std_error = 0.0;  // standard error of v^T G v at the minimizer
  int n_samples = 0;
};

/// One-step comparison from identity initial data: both schemes step
/// once with Q subintervals; the reference flow is computed on the same
/// path at 64x finer evaluation resolution. Returns the mean of
/// G = R_a^T R_a - R_b^T R_b with the standard error of its smallest
/// eigenvalue direction.
inline LocalGapResult local_error_gap(const LinearSDESystem& sys, double h,
                                      std::int64_t Q, int n_samples,
                                      const std::string& scheme_a,
                                      const std::string& scheme_b,
                                      std::uint64_t seed = 0) {
  const int p = sys.p;
  CompiledScheme cs_a(parse_scheme(scheme_a), sys);
  CompiledScheme cs_b(parse_scheme(scheme_b), sys);
  CompiledScheme cs_ref(parse_scheme("magnus-15"), sys);

  std::vector<Matrix> gaps;
  gaps.reserve(n_samples);
  Matrix mean(p, p);
  for (int k = 0; k < n_samples; ++k) {
    const WienerGrid fine = generate(sys.d, h, 64, Q, seed, static_cast<std::uint64_t>(k));
    const Matrix S_ref =
        integrate_state(cs_ref, fine, Matrix::identity(p), nullptr,
                        IntegralMode::linear_path);
    const WienerGrid coarse = reshape(coarsen(fine, 64), 1, Q);
    const Matrix S_a = integrate_state(cs_a, coarse, Matrix::identity(p), nullptr,
                                       IntegralMode::linear_path);
    const Matrix S_b = integrate_state(cs_b, coarse, Matrix::identity(p), nullptr,
                                       IntegralMode::linear_path);
    const Matrix Ra = S_ref - S_a;
    const Matrix Rb = S_ref - S_b;
    Matrix G = Ra.transpose() * Ra - Rb.transpose() * Rb;
    mean += G;
    gaps.push_back(std::move(G));
  }
  mean *= 1.0 / static_cast<double>(n_samples);
  Matrix sym = 0.5 * (mean + mean.transpose());

  const SymmetricEigen eig = symmetric_eigen(sym);
  std::vector<double> v(p);
  for (int i = 0; i < p; ++i) v[i] = eig.vectors(i, 0);

  // Per-sample scalar projections along the minimizing direction.
  double s1 = 0.0, s2 = 0.0;
  for (const Matrix& G : gaps) {
    double s = 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) s += v[i] * 0.5 * (G(i, j) + G(j, i)) * v[j];
    s1 += s;
    s2 += s * s;
  }
  const double n = static_cast<double>(n_samples);
  const double var = std::max(0.0, s2 / n - (s1 / n) * (s1 / n));

  LocalGapResult out;
  out.mean_gap = sym;
  out.lambda_min = eig.values[0];
  out.std_error = std::sqrt(var / n);
  out.n_samples = n_samples;
  return out;
}

}  // namespace stochflow
