// Linear Stratonovich SDE systems dy = sum_i a_i y dW^i (W^0 = t),
// compiled-in benchmark fixtures and the Riccati linearization front
// end u = U V^{-1}.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflow/matrix.hpp"

namespace stochflow {

struct LinearSDESystem {
  int p = 0;  // state dimension
  int d = 0;  // driving dimension
  std::vector<Matrix> a;  // (d+1) matrices, index 0 = drift
  bool commuting_diffusion = false;

  const Matrix& drift() const { return a[0]; }
  const Matrix& diffusion(int i) const { return a[i]; }
};

inline LinearSDESystem make_system(std::vector<Matrix> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("make_system: need at least a drift");
  LinearSDESystem s;
  s.p = coeffs[0].rows();
  s.d = static_cast<int>(coeffs.size()) - 1;
  for (const Matrix& m : coeffs)
    if (m.rows() != s.p || m.cols() != s.p)
      throw std::invalid_argument("make_system: all matrices must be p x p");
  s.a = std::move(coeffs);
  s.commuting_diffusion = true;
  for (int i = 1; i <= s.d && s.commuting_diffusion; ++i)
    for (int j = i + 1; j <= s.d; ++j)
      if (commutator(s.a[i], s.a[j]).frobenius_norm() > 1e-13) {
        s.commuting_diffusion = false;
        break;
      }
  return s;
}

/// Riccati problem du = sum_i (u A_i u + B_i u + u C_i + D_i) dW^i,
/// blocks per driving index (index 0 = drift).
struct RiccatiProblem {
  int p = 0;
  int d = 0;
  std::vector<Matrix> A, B, C, D;  // each (d+1) blocks, p x p
  Matrix u0;

  Matrix f(const Matrix& S) const {
    return S * A[0] * S + B[0] * S + S * C[0] + D[0];
  }
};

/// Linearization: y = (U V)^T solves the linear system with
/// a_i = [[B_i, D_i], [-A_i, -C_i]]; then u = U V^{-1}.
inline LinearSDESystem riccati_linearize(const RiccatiProblem& r) {
  std::vector<Matrix> coeffs;
  const int p = r.p;
  for (int i = 0; i <= r.d; ++i) {
    Matrix a(2 * p, 2 * p);
    for (int x = 0; x < p; ++x)
      for (int y = 0; y < p; ++y) {
        a(x, y) = r.B[i](x, y);
        a(x, y + p) = r.D[i](x, y);
        a(x + p, y) = -r.A[i](x, y);
        a(x + p, y + p) = -r.C[i](x, y);
      }
    coeffs.push_back(a);
  }
  return make_system(std::move(coeffs));
}

/// Initial state of the linearized system: U_0 = u_0, V_0 = I, stacked
/// column by column into a 2p x p matrix.
inline Matrix riccati_initial_state(const RiccatiProblem& r) {
  Matrix y0(2 * r.p, r.p);
  for (int x = 0; x < r.p; ++x)
    for (int y = 0; y < r.p; ++y) y0(x, y) = r.u0(x, y);
  for (int x = 0; x < r.p; ++x) y0(x + r.p, x) = 1.0;
  return y0;
}

/// Recovers u = U V^{-1} from the stacked state; diagnoses
/// ill-conditioned V rather than returning garbage.
inline Matrix riccati_extract(const Matrix& y, double time_index = -1.0) {
  const int p = y.rows() / 2;
  if (y.rows() != 2 * p || y.cols() != p)
    throw std::invalid_argument("riccati_extract: state must be 2p x p");
  Matrix U(p, p), V(p, p);
  for (int x = 0; x < p; ++x)
    for (int c = 0; c < p; ++c) {
      U(x, c) = y(x, c);
      V(x, c) = y(x + p, c);
    }
  if (!V.is_finite() || condition_number(V) > 1e12)
    throw std::runtime_error(
        "riccati_extract: V singular or ill-conditioned" +
        (time_index >= 0.0 ? " at step " + std::to_string(static_cast<long long>(time_index))
                           : std::string()));
  return U * lu_solve(V, Matrix::identity(p));
}

// --- Compiled-in fixtures (coefficients of the benchmark problems) ---

inline Matrix fixture_D0() { return Matrix(2, 2, {0.5, 0.5, 0.0, 1.0}); }
inline Matrix fixture_D1() { return Matrix(2, 2, {0.0, 1.0, -0.5, -51.0 / 200.0}); }
inline Matrix fixture_D2() { return Matrix(2, 2, {1.0, 1.0, 1.0, 0.5}); }
inline Matrix fixture_A0() { return Matrix(2, 2, {-1.0, 1.0, -0.5, -1.0}); }
inline Matrix fixture_C0() { return Matrix(2, 2, {-0.5, 0.0, -1.0, -1.0}); }
inline Matrix fixture_a3() {
  return Matrix(2, 2, {0.25, 0.4, 1.0 / 6.0, 1.0 / 7.0});
}

/// Riccati benchmark: two additive Wiener processes, drift blocks A_0,
/// C_0, D_0, noise blocks D_1, D_2, all other blocks zero, u_0 = I.
inline RiccatiProblem riccati_fixture() {
  RiccatiProblem r;
  r.p = 2;
  r.d = 2;
  const Matrix z = Matrix::zeros(2, 2);
  r.A = {fixture_A0(), z, z};
  r.B = {z, z, z};
  r.C = {fixture_C0(), z, z};
  r.D = {fixture_D0(), fixture_D1(), fixture_D2()};
  r.u0 = Matrix::identity(2);
  return r;
}

/// Homogeneous linear benchmark with two Wiener processes: a_i = D_i.
inline LinearSDESystem linear_2w_fixture() {
  return make_system({fixture_D0(), fixture_D1(), fixture_D2()});
}

/// Three-Wiener variant: adds a third non-commuting diffusion matrix.
inline LinearSDESystem linear_3w_fixture() {
  return make_system({fixture_D0(), fixture_D1(), fixture_D2(), fixture_a3()});
}

inline std::vector<double> linear_fixture_y0() { return {0.5, 1.0}; }

inline LinearSDESystem fixture_by_name(const std::string& name) {
  if (name == "linear-2w") return linear_2w_fixture();
  if (name == "linear-3w") return linear_3w_fixture();
  if (name == "riccati-9.1") return riccati_linearize(riccati_fixture());
  throw std::invalid_argument("unknown fixture: " + name);
}

}  // namespace stochflow
