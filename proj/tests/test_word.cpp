#include <catch2/catch_amalgamated.hpp>

#include "stochflow/word.hpp"

using namespace stochflow;

TEST_CASE("word string round trip") {
  const Word w{1, 0, 2, 2};
  REQUIRE(word_str(w) == "1022");
  REQUIRE(word_from_string("1022") == w);
  REQUIRE_THROWS(word_from_string("1a2"));
}

TEST_CASE("word stats") {
  SECTION("constant words") {
    REQUIRE(word_stats({1, 1, 1}).constant);
    REQUIRE(word_stats({0, 0}).constant);
    REQUIRE_FALSE(word_stats({1, 2}).constant);
  }
  SECTION("zero count") {
    REQUIRE(word_stats({1, 0, 2, 0}).zeros == 2);
    REQUIRE(word_stats({1, 2}).zeros == 0);
  }
  SECTION("trailing-run split") {
    // j* is the smallest index with all later letters equal.
    const WordStats s = word_stats({1, 2, 2, 2});
    REQUIRE(s.j_star == 1);
    REQUIRE(s.n_star == 0);
    const WordStats t = word_stats({1, 2, 0});
    REQUIRE(t.j_star == 2);
    REQUIRE(t.n_star == 1);
    const WordStats u = word_stats({0, 1, 2});
    REQUIRE(u.j_star == 2);
    REQUIRE(u.n_star == 0);
    const WordStats v = word_stats({1, 0, 2});
    REQUIRE(v.j_star == 2);
    REQUIRE(v.n_star == 1);
  }
}

TEST_CASE("quadrature rates of Lemma-style words") {
  SECTION("Levy area: h / Q^{1/2}") {
    const RatePair r = quadrature_rate({1, 2});
    REQUIRE(r.h_exponent == Catch::Approx(1.0));
    REQUIRE(r.q_exponent == Catch::Approx(0.5));
  }
  SECTION("time cross terms: h^{3/2} / Q") {
    for (Word w : {Word{1, 0}, Word{0, 1}}) {
      const RatePair r = quadrature_rate(w);
      REQUIRE(r.h_exponent == Catch::Approx(1.5));
      REQUIRE(r.q_exponent == Catch::Approx(1.0));
    }
  }
  SECTION("length-3 mixed words") {
    const RatePair r = quadrature_rate({1, 0, 2});
    REQUIRE(r.h_exponent == Catch::Approx(2.0));
    REQUIRE(r.q_exponent == Catch::Approx(1.0));
    const RatePair s = quadrature_rate({0, 1, 2});
    REQUIRE(s.h_exponent == Catch::Approx(2.0));
    REQUIRE(s.q_exponent == Catch::Approx(0.5));
    const RatePair t = quadrature_rate({1, 1, 2});
    REQUIRE(t.h_exponent == Catch::Approx(1.5));
    REQUIRE(t.q_exponent == Catch::Approx(0.5));
  }
  SECTION("constant words have no quadrature error") {
    REQUIRE_THROWS(quadrature_rate({1, 1}));
    REQUIRE_THROWS(quadrature_rate({0}));
  }
}

TEST_CASE("beta effort exponents reproduce the tabulated values") {
  // beta(M, l) = (l-1)(2M+1-l)+1 with effort exponent -M/beta.
  REQUIRE(beta(1.0, 2) == 2);
  REQUIRE(effort_exponent(1.0, 2) == Catch::Approx(-0.5));
  REQUIRE(beta(1.5, 2) == 3);
  REQUIRE(effort_exponent(1.5, 2) == Catch::Approx(-0.5));
  REQUIRE(beta(2.0, 2) == 4);
  REQUIRE(effort_exponent(2.0, 2) == Catch::Approx(-0.5));
  REQUIRE(beta(2.0, 3) == 5);
  REQUIRE(effort_exponent(2.0, 3) == Catch::Approx(-0.4));
  REQUIRE(beta(2.5, 3) == 7);
  REQUIRE(beta(2.5, 4) == 7);
  REQUIRE(effort_exponent(2.5, 3) == Catch::Approx(-2.5 / 7.0));
  REQUIRE(effort_exponent(2.5, 4) == Catch::Approx(-2.5 / 7.0));
  REQUIRE(beta(3.0, 3) == 9);
  REQUIRE(beta(3.0, 4) == 10);
  REQUIRE(effort_exponent(3.0, 4) == Catch::Approx(-0.3));
}

TEST_CASE("beta validates its domain") {
  REQUIRE_THROWS(beta(1.0, 1));
  REQUIRE_THROWS(beta(0.5, 2));  // M < l/2
}

TEST_CASE("critical stepsize follows the homogeneity law") {
  // h_cr = (T(c_M p^2 + c_E))^{-1/(1-beta)}; for M=1, d=2 the power is
  // -1/(1-2) = 1, so doubling the per-step cost doubles h_cr.
  const double h1 = critical_stepsize(1.0, 2, 2, 1.0, 7, 48);
  const double h2 = critical_stepsize(1.0, 2, 2, 2.0, 7, 48);
  REQUIRE(h1 > 0.0);
  REQUIRE(h2 == Catch::Approx(2.0 * h1).epsilon(1e-12));
  REQUIRE(h1 == Catch::Approx(7.0 * 4.0 + 48.0).epsilon(1e-12));
}
