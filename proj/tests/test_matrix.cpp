#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stochflow/matrix.hpp"

using namespace stochflow;

TEST_CASE("matrix arithmetic identities") {
  Matrix a(2, 2, {1, 2, 3, 4});
  Matrix b(2, 2, {0, 1, -1, 2});
  REQUIRE(((a + b) - b - a).max_abs() == 0.0);
  REQUIRE(((2.0 * a) - (a + a)).max_abs() == 0.0);
  const Matrix id = Matrix::identity(2);
  REQUIRE((a * id - a).max_abs() == 0.0);
  REQUIRE((id * a - a).max_abs() == 0.0);
  REQUIRE((a.transpose().transpose() - a).max_abs() == 0.0);
  // (ab)^T = b^T a^T
  REQUIRE(((a * b).transpose() - b.transpose() * a.transpose()).max_abs() == 0.0);
}

TEST_CASE("apply matches multiplication") {
  Matrix a(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 10});
  std::vector<double> v{1, -1, 2};
  const auto w = a.apply(v);
  for (int i = 0; i < 3; ++i) {
    double s = 0;
    for (int j = 0; j < 3; ++j) s += a(i, j) * v[j];
    REQUIRE(w[i] == Catch::Approx(s).margin(1e-15));
  }
}

TEST_CASE("commutator is antisymmetric and satisfies Jacobi") {
  Matrix a(2, 2, {1, 2, 0, -1});
  Matrix b(2, 2, {3, 1, 1, 0});
  Matrix c(2, 2, {0, 2, -1, 1});
  REQUIRE((commutator(a, b) + commutator(b, a)).max_abs() < 1e-14);
  const Matrix jac = commutator(a, commutator(b, c)) +
                     commutator(b, commutator(c, a)) +
                     commutator(c, commutator(a, b));
  REQUIRE(jac.max_abs() < 1e-13);
}

TEST_CASE("lu_solve and inverse") {
  Matrix a(3, 3, {4, 2, 1, 2, 5, 3, 1, 3, 6});
  Matrix b(3, 1, {1, 2, 3});
  const Matrix x = lu_solve(a, b);
  REQUIRE((a * x - b).max_abs() < 1e-12);
  const Matrix inv = inverse(a);
  REQUIRE((a * inv - Matrix::identity(3)).max_abs() < 1e-12);
  REQUIRE((inv * a - Matrix::identity(3)).max_abs() < 1e-12);
}

TEST_CASE("lu_solve rejects singular input") {
  Matrix s(2, 2, {1, 2, 2, 4});
  Matrix b(2, 1, {1, 1});
  REQUIRE_THROWS(lu_solve(s, b));
}

TEST_CASE("expm of zero is identity") {
  REQUIRE((expm(Matrix(3, 3)) - Matrix::identity(3)).max_abs() < 1e-15);
}

TEST_CASE("expm of a diagonal matrix") {
  Matrix a(2, 2, {0.7, 0, 0, -1.3});
  const Matrix e = expm(a);
  REQUIRE(e(0, 0) == Catch::Approx(std::exp(0.7)).epsilon(1e-12));
  REQUIRE(e(1, 1) == Catch::Approx(std::exp(-1.3)).epsilon(1e-12));
  REQUIRE(std::abs(e(0, 1)) < 1e-14);
  REQUIRE(std::abs(e(1, 0)) < 1e-14);
}

TEST_CASE("expm of a rotation generator") {
  const double t = 1.234;
  Matrix a(2, 2, {0, -t, t, 0});
  const Matrix e = expm(a);
  REQUIRE(e(0, 0) == Catch::Approx(std::cos(t)).epsilon(1e-12));
  REQUIRE(e(0, 1) == Catch::Approx(-std::sin(t)).epsilon(1e-12));
  REQUIRE(e(1, 0) == Catch::Approx(std::sin(t)).epsilon(1e-12));
  REQUIRE(e(1, 1) == Catch::Approx(std::cos(t)).epsilon(1e-12));
}

TEST_CASE("expm of a nilpotent matrix is the exact polynomial") {
  Matrix n(3, 3);
  n(0, 1) = 2.0;
  n(1, 2) = -3.0;
  const Matrix e = expm(n);
  Matrix expect = Matrix::identity(3) + n + 0.5 * (n * n);
  REQUIRE((e - expect).max_abs() < 1e-13);
}

TEST_CASE("expm inverse property") {
  Matrix a(2, 2, {0.3, -1.1, 0.8, -0.2});
  const Matrix prod = expm(a) * expm(-1.0 * a);
  REQUIRE((prod - Matrix::identity(2)).max_abs() < 1e-12);
}

TEST_CASE("expm handles large norms via scaling and squaring") {
  Matrix a(2, 2, {5.0, 1.0, 0.0, 5.0});
  const Matrix e = expm(a);
  // exp([[5,1],[0,5]]) = e^5 [[1,1],[0,1]]
  REQUIRE(e(0, 0) == Catch::Approx(std::exp(5.0)).epsilon(1e-11));
  REQUIRE(e(0, 1) == Catch::Approx(std::exp(5.0)).epsilon(1e-11));
  REQUIRE(e(1, 1) == Catch::Approx(std::exp(5.0)).epsilon(1e-11));
  REQUIRE(std::abs(e(1, 0)) < 1e-9);
}

TEST_CASE("symmetric eigendecomposition") {
  Matrix s(3, 3, {2, 1, 0, 1, 3, 1, 0, 1, 2});
  const SymmetricEigen eig = symmetric_eigen(s);
  REQUIRE(eig.values.size() == 3);
  REQUIRE(eig.values[0] <= eig.values[1]);
  REQUIRE(eig.values[1] <= eig.values[2]);
  // Reconstruct s = V diag V^T.
  Matrix lam(3, 3);
  for (int i = 0; i < 3; ++i) lam(i, i) = eig.values[i];
  const Matrix rec = eig.vectors * lam * eig.vectors.transpose();
  REQUIRE((rec - s).max_abs() < 1e-10);
  // Known spectrum: 3, 2 +/- sqrt(2) ... actually eigenvalues of this
  // tridiagonal matrix are 2, (5 +/- sqrt(9))/2 = 1, 4.
  REQUIRE(eig.values[0] == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(eig.values[1] == Catch::Approx(2.0).margin(1e-10));
  REQUIRE(eig.values[2] == Catch::Approx(4.0).margin(1e-10));
}

TEST_CASE("condition number of identity is one") {
  REQUIRE(condition_number(Matrix::identity(4)) == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("flop tally accumulates by key") {
  FlopTally t;
  t.add("eval_flops", 10);
  t.add("eval_flops", 5);
  t.add("quad_ops", 3);
  REQUIRE(t.breakdown.at("eval_flops") == 15);
  REQUIRE(t.breakdown.at("quad_ops") == 3);
  REQUIRE(t.count == 18);
}
