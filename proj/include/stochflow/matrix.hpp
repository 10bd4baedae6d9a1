// Small dense real matrices, commutators, Pade matrix exponential and
// flop accounting for the integrator kernels.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflow {

/// Running flop counter with a per-operation-kind breakdown.
/// count always equals the sum of the breakdown values.
struct FlopTally {
  std::uint64_t count = 0;
  std::map<std::string, std::uint64_t> breakdown;

  void add(const std::string& kind, std::uint64_t n) {
    count += n;
    breakdown[kind] += n;
  }
  void merge(const FlopTally& other) {
    count += other.count;
    for (const auto& [k, v] : other.breakdown) breakdown[k] += v;
  }
};

/// Dense row-major matrix with inline storage. Dimensions are tiny
/// (p <= 8); value semantics throughout.
class Matrix {
 public:
  static constexpr int kMaxDim = 8;

  Matrix() : rows_(0), cols_(0) { e_.fill(0.0); }
  Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1 || rows > kMaxDim || cols > kMaxDim)
      throw std::invalid_argument("Matrix: dimensions out of range");
    e_.fill(0.0);
  }
  Matrix(int rows, int cols, std::initializer_list<double> vals)
      : Matrix(rows, cols) {
    if (static_cast<int>(vals.size()) != rows * cols)
      throw std::invalid_argument("Matrix: initializer size mismatch");
    int k = 0;
    for (double v : vals) e_[k++] = v;
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return e_[i * cols_ + j]; }
  double operator()(int i, int j) const { return e_[i * cols_ + j]; }

  bool is_finite() const {
    for (int k = 0; k < rows_ * cols_; ++k)
      if (!std::isfinite(e_[k])) return false;
    return true;
  }
  bool is_zero(double tol = 0.0) const {
    for (int k = 0; k < rows_ * cols_; ++k)
      if (std::abs(e_[k]) > tol) return false;
    return true;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    for (int k = 0; k < rows_ * cols_; ++k) e_[k] += o.e_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    for (int k = 0; k < rows_ * cols_; ++k) e_[k] -= o.e_[k];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (int k = 0; k < rows_ * cols_; ++k) e_[k] *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_)
      throw std::invalid_argument("Matrix multiply: dimension mismatch");
    Matrix c(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  // y <- A x for a column vector x.
  std::vector<double> apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != cols_)
      throw std::invalid_argument("Matrix apply: dimension mismatch");
    std::vector<double> y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (int k = 0; k < rows_ * cols_; ++k) s += e_[k] * e_[k];
    return std::sqrt(s);
  }
  double one_norm() const {  // max column sum
    double best = 0.0;
    for (int j = 0; j < cols_; ++j) {
      double s = 0.0;
      for (int i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
      best = std::max(best, s);
    }
    return best;
  }
  double max_abs() const {
    double m = 0.0;
    for (int k = 0; k < rows_ * cols_; ++k) m = std::max(m, std::abs(e_[k]));
    return m;
  }

 private:
  void check_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("Matrix: shape mismatch");
  }
  int rows_, cols_;
  std::array<double, kMaxDim * kMaxDim> e_;
};

/// ab - ba for square matrices of equal dimension.
inline Matrix commutator(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("commutator: need square matrices of equal dimension");
  return a * b - b * a;
}

/// Solves A X = B in place via LU with partial pivoting. Returns X.
/// Throws if A is numerically singular.
inline Matrix lu_solve(Matrix a, Matrix b) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n)
    throw std::invalid_argument("lu_solve: dimension mismatch");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw std::runtime_error("lu_solve: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = 0.0;
      if (f == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (int j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    for (int j = 0; j < b.cols(); ++j) {
      double s = b(k, j);
      for (int i = k + 1; i < n; ++i) s -= a(k, i) * b(i, j);
      b(k, j) = s / a(k, k);
    }
  }
  return b;
}

inline Matrix inverse(const Matrix& a) {
  return lu_solve(a, Matrix::identity(a.rows()));
}

/// 1-norm condition number estimate (exact inverse, small matrices).
inline double condition_number(const Matrix& a) {
  return a.one_norm() * inverse(a).one_norm();
}

/// Matrix exponential via (6,6) Pade approximation with scaling and
/// squaring; the input is scaled until its 1-norm is at most 1/2.
/// Records a nominal 6p^3 flops under "expm" plus the additionally
/// counted work under "expm_extra".
inline Matrix expm(const Matrix& a, FlopTally* tally = nullptr) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("expm: matrix not square");
  if (!a.is_finite()) throw std::invalid_argument("expm: non-finite entries");

  // (6,6) Pade coefficients c_k = (12-k)! 6! / (12! k! (6-k)!).
  static constexpr double c[7] = {1.0,        1.0 / 2.0,     5.0 / 44.0,
                                  1.0 / 66.0, 1.0 / 792.0,   1.0 / 15840.0,
                                  1.0 / 665280.0};

  int s = 0;
  double nrm = a.one_norm();
  while (nrm > 0.5 && s < 64) {
    nrm *= 0.5;
    ++s;
  }
  Matrix x = a * std::ldexp(1.0, -s);

  const Matrix x2 = x * x;
  const Matrix x4 = x2 * x2;
  Matrix even = Matrix::identity(n) + c[2] * x2 + c[4] * x4 + c[6] * (x4 * x2);
  Matrix odd = x * (c[1] * Matrix::identity(n) + c[3] * x2 + c[5] * x4);
  Matrix num = even + odd;
  Matrix den = even - odd;
  Matrix r = lu_solve(den, num);
  for (int k = 0; k < s; ++k) r = r * r;

  if (!r.is_finite())
    throw std::runtime_error("expm: overflow during squaring (1-norm " +
                             std::to_string(a.one_norm()) + ", squarings " +
                             std::to_string(s) + ")");
  if (tally) {
    const std::uint64_t n3 = static_cast<std::uint64_t>(n) * n * n;
    tally->add("expm", 6 * n3);
    // Work beyond the nominal 6p^3: Pade products, the solve and squarings.
    tally->add("expm_extra", (5 + s) * 2 * n3 + 2 * n3 / 3);
  }
  return r;
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix via
/// cyclic Jacobi rotations. Eigenvectors are the columns of the second
/// return member.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};

inline SymmetricEigen symmetric_eigen(Matrix a) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("symmetric_eigen: not square");
  Matrix v = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = cs * vkp - sn * vkq;
          v(k, q) = sn * vkp + cs * vkq;
        }
      }
  }
  SymmetricEigen out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = a(i, i);
  // Sort ascending, permuting eigenvector columns alongside.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int x, int y) { return out.values[x] < out.values[y]; });
  SymmetricEigen sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (int c2 = 0; c2 < n; ++c2) {
    sorted.values[c2] = out.values[idx[c2]];
    for (int r2 = 0; r2 < n; ++r2) sorted.vectors(r2, c2) = v(r2, idx[c2]);
  }
  return sorted;
}

}  // namespace stochflow
