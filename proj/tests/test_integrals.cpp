#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "stochflow/integrals.hpp"
#include "stochflow/wiener.hpp"

using namespace stochflow;

namespace {

double rms_error_vs_Q(const Word& w, double h, std::int64_t Q,
                      std::int64_t q_fine, int n_paths, std::uint64_t seed) {
  const int d = 1 + *std::max_element(w.begin(), w.end());
  double s = 0.0;
  for (int path = 0; path < n_paths; ++path) {
    const WienerGrid fine = generate(std::max(d, 1), h, 1, q_fine, seed, path);
    const double truth =
        conditional_expectation(w, StepSlice::from_grid(fine, 0), IntegralMode::linear_path);
    const WienerGrid coarse = coarsen(fine, q_fine / Q);
    const double approx = conditional_expectation(w, StepSlice::from_grid(coarse, 0),
                                                  IntegralMode::brownian_bridge);
    s += (approx - truth) * (approx - truth);
  }
  return std::sqrt(s / n_paths);
}

}  // namespace

TEST_CASE("exact closed forms for constant words") {
  std::vector<double> dw{0.7, -0.3};
  REQUIRE(*exact_value({0}, 0.5, dw) == Catch::Approx(0.5));
  REQUIRE(*exact_value({0, 0}, 0.5, dw) == Catch::Approx(0.125));
  REQUIRE(*exact_value({1}, 0.5, dw) == Catch::Approx(0.7));
  REQUIRE(*exact_value({1, 1}, 0.5, dw) == Catch::Approx(0.5 * 0.7 * 0.7));
  REQUIRE(*exact_value({2, 2, 2}, 0.5, dw) ==
          Catch::Approx(-0.3 * -0.3 * -0.3 / 6.0));
  REQUIRE_FALSE(exact_value({1, 2}, 0.5, dw).has_value());
}

TEST_CASE("exact unconditional means") {
  const double h = 0.8;
  REQUIRE(exact_mean({1}, h) == 0.0);
  REQUIRE(exact_mean({1, 2}, h) == 0.0);
  REQUIRE(exact_mean({1, 1}, h) == Catch::Approx(h / 2));
  REQUIRE(exact_mean({0, 1, 1}, h) == Catch::Approx(h * h / 4));
  REQUIRE(exact_mean({1, 1, 0}, h) == Catch::Approx(h * h / 4));
  REQUIRE(exact_mean({1, 0, 1}, h) == 0.0);
  REQUIRE(exact_mean({1, 1, 2, 2}, h) == Catch::Approx(h * h / 8));
  REQUIRE(exact_mean({1, 2, 1, 2}, h) == 0.0);
  REQUIRE(exact_mean({1, 2, 2, 1}, h) == 0.0);
  REQUIRE(exact_mean({0, 0}, h) == Catch::Approx(h * h / 2));
  // Shuffle consistency: J_0 J_11 = J_011 + J_101 + J_110 in the mean.
  REQUIRE(exact_mean({0}, h) * exact_mean({1, 1}, h) ==
          Catch::Approx(exact_mean({0, 1, 1}, h) + exact_mean({1, 0, 1}, h) +
                        exact_mean({1, 1, 0}, h)));
}

TEST_CASE("single-subinterval conditional closed forms") {
  const double h = 0.25;
  WienerGrid g = generate(2, h, 1, 1, 3, 0);
  const StepSlice s = StepSlice::from_grid(g, 0);
  const double x1 = g.increments[0][0], x2 = g.increments[1][0];
  REQUIRE(conditional_expectation({1, 2}, s) == Catch::Approx(0.5 * x1 * x2));
  REQUIRE(conditional_expectation({1, 0}, s) == Catch::Approx(0.5 * h * x1));
  REQUIRE(conditional_expectation({0, 2}, s) == Catch::Approx(0.5 * h * x2));
  REQUIRE(conditional_expectation({1, 0, 1}, s) ==
          Catch::Approx(h * (x1 * x1 - h) / 6.0));
  REQUIRE(conditional_expectation({1, 0, 2}, s) ==
          Catch::Approx(h * x1 * x2 / 6.0));
}

TEST_CASE("linear-path mode reproduces the iterated-sum oracle") {
  const WienerGrid g = generate(2, 1.0, 1, 64, 21, 5);
  const StepSlice s = StepSlice::from_grid(g, 0);
  for (const Word& w : {Word{1, 2}, Word{2, 1}, Word{1, 0}, Word{1, 2, 0},
                        Word{1, 0, 2}, Word{1, 1, 2}, Word{1, 2, 2, 1}}) {
    CAPTURE(word_str(w));
    const double mine = conditional_expectation(w, s, IntegralMode::linear_path);
    const double brute = oracle::strat_iterated(w, g);
    REQUIRE(mine == Catch::Approx(brute).margin(1e-11));
  }
}

TEST_CASE("conditioned values are unbiased against the fine oracle") {
  // E[J_w - E(J_w|F_Q)] = 0: estimate with the brute-force fine-grid
  // oracle at resolution delta/64 and require |mean| <= 4 SE.
  const double h = 0.5;
  const int n_paths = 10000;
  for (const Word& w :
       {Word{1, 2}, Word{1, 0}, Word{1, 1, 2}, Word{1, 2, 0}, Word{0, 1, 1},
        Word{1, 0, 2}, Word{1, 1, 2, 2}, Word{1, 2, 1, 2}}) {
    CAPTURE(word_str(w));
    double s1 = 0.0, s2 = 0.0;
    for (int path = 0; path < n_paths; ++path) {
      const WienerGrid lat = generate(2, h, 1, 4, 77, path);
      const WienerGrid fine = oracle::refine(lat, 64, 1000 + path);
      const double jf = oracle::strat_iterated(w, fine);
      const double cond = conditional_expectation(
          w, StepSlice::from_grid(lat, 0), IntegralMode::brownian_bridge);
      const double diff = jf - cond;
      s1 += diff;
      s2 += diff * diff;
    }
    const double mean = s1 / n_paths;
    const double se =
        std::sqrt((s2 / n_paths - mean * mean) / static_cast<double>(n_paths));
    REQUIRE(std::abs(mean) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("tower property across lattice refinement") {
  // Averaging the conditional value over bridge refinements of the
  // lattice reproduces the coarse conditional value.
  const double h = 0.5;
  for (const Word& w : {Word{1, 2}, Word{1, 2, 0}, Word{1, 1, 2}}) {
    CAPTURE(word_str(w));
    const WienerGrid lat = generate(2, h, 1, 2, 55, 1);
    const double coarse = conditional_expectation(
        w, StepSlice::from_grid(lat, 0), IntegralMode::brownian_bridge);
    const int m = 40000;
    double s1 = 0.0, s2 = 0.0;
    for (int r = 0; r < m; ++r) {
      const WienerGrid fine = oracle::refine(lat, 8, 9000 + r);
      const double v = conditional_expectation(
          w, StepSlice::from_grid(fine, 0), IntegralMode::brownian_bridge);
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / m;
    const double se = std::sqrt((s2 / m - mean * mean) / static_cast<double>(m));
    REQUIRE(std::abs(mean - coarse) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("measured Q-rates match the rate law") {
  const double h = 0.5;
  SECTION("Levy area decays like Q^{-1/2}") {
    std::vector<double> qs, es;
    for (std::int64_t Q : {1, 2, 4, 8, 16, 32}) {
      qs.push_back(static_cast<double>(Q));
      es.push_back(rms_error_vs_Q({1, 2}, h, Q, 1024, 400, 5));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const double lx = std::log(qs[k]), ly = std::log(es[k]);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(qs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    REQUIRE(slope == Catch::Approx(-0.5).margin(0.15));
  }
  SECTION("word 102 decays like Q^{-1}") {
    std::vector<double> qs, es;
    for (std::int64_t Q : {1, 2, 4, 8, 16, 32}) {
      qs.push_back(static_cast<double>(Q));
      es.push_back(rms_error_vs_Q({1, 0, 2}, h, Q, 1024, 400, 6));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const double lx = std::log(qs[k]), ly = std::log(es[k]);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(qs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    REQUIRE(slope == Catch::Approx(-1.0).margin(0.2));
  }
  SECTION("error is monotone in Q up to noise") {
    const double e1 = rms_error_vs_Q({1, 2}, h, 1, 256, 600, 9);
    const double e16 = rms_error_vs_Q({1, 2}, h, 16, 256, 600, 9);
    REQUIRE(e16 < e1);
  }
}

TEST_CASE("measured h-rate at fixed Q matches the rate law") {
  // Word (1,0,1): L2 error ~ h^2 at fixed Q (exponent (l+n)/2 = 2).
  std::vector<double> hs, es;
  for (double h : {0.5, 0.25, 0.125, 0.0625}) {
    double s = 0.0;
    const int n_paths = 400;
    for (int path = 0; path < n_paths; ++path) {
      const WienerGrid fine = generate(1, h, 1, 512, 31, path);
      const double truth = conditional_expectation(
          {1, 0, 1}, StepSlice::from_grid(fine, 0), IntegralMode::linear_path);
      const WienerGrid coarse = coarsen(fine, 256);  // Q = 2 fixed
      const double approx = conditional_expectation(
          {1, 0, 1}, StepSlice::from_grid(coarse, 0), IntegralMode::brownian_bridge);
      s += (approx - truth) * (approx - truth);
    }
    hs.push_back(h);
    es.push_back(std::sqrt(s / n_paths));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const double lx = std::log(hs[k]), ly = std::log(es[k]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  const double n = static_cast<double>(hs.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  REQUIRE(slope == Catch::Approx(2.0).margin(0.15));
}

TEST_CASE("q_for_word matches the order calculus") {
  REQUIRE(q_for_word({1, 2}, 1.0 / 64, 1.0) == 64);
  REQUIRE(q_for_word({1, 2}, 1.0 / 64, 0.5) == 1);
  REQUIRE(q_for_word({1, 1}, 1.0 / 64, 3.0) == 1);  // exact word
  // (1,0): error h^{3/2}/Q; order 3/2 needs Q = h^{-1/2} = 8.
  REQUIRE(q_for_word({1, 0}, 1.0 / 64, 1.5) == 8);
  // (1,1,2): error h^{3/2}/Q^{1/2}; order 3/2 needs Q = h^{-1} = 64.
  REQUIRE(q_for_word({1, 1, 2}, 1.0 / 64, 1.5) == 64);
}

TEST_CASE("quadrature cost model") {
  REQUIRE(quad_cost({1, 1}, 32) == 1);
  REQUIRE(quad_cost({1, 2}, 32) == 32);
  REQUIRE(quad_cost({1, 2, 3}, 32) == 32 * 32);
}

TEST_CASE("table builder dedups Levy pairs and tags provenance") {
  const WienerGrid g = generate(2, 0.5, 1, 8, 13, 2);
  TableBuilder builder({Word{1}, Word{1, 2}, Word{2, 1}, Word{1, 1}},
                       {Word{2, 2, 1, 1}}, IntegralMode::brownian_bridge);
  const IntegralTable t = builder.build(StepSlice::from_grid(g, 0));
  const double j1 = g.step_increment(1, 0), j2 = g.step_increment(2, 0);
  REQUIRE(t.at({1, 2}) + t.at({2, 1}) == Catch::Approx(j1 * j2).margin(1e-14));
  REQUIRE(t.provenance.at({1, 1}) == Provenance::exact);
  REQUIRE(t.provenance.at({1, 2}) == Provenance::conditioned);
  REQUIRE(t.provenance.at({2, 2, 1, 1}) == Provenance::expectation_only);
  REQUIRE(t.at({2, 2, 1, 1}) == Catch::Approx(exact_mean({2, 2, 1, 1}, 0.5)));
  REQUIRE_THROWS(t.at({0, 1}));
  REQUIRE(t.has({1}));
}
