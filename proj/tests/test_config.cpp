#include <catch2/catch_amalgamated.hpp>

#include "stochflow/config.hpp"

using namespace stochflow;

TEST_CASE("parse flat key = value text") {
  const Config cfg = Config::parse(
      "# experiment\n"
      "fixture = linear-2w\n"
      "n_paths = 2000\n"
      "T = 1.0\n"
      "h_list = 0.0625, 0.03125\n"
      "\n"
      "schemes = neumann-05, magnus-1  # trailing comment\n");
  REQUIRE(cfg.get_string("fixture", "") == "linear-2w");
  REQUIRE(cfg.get_int("n_paths", 0) == 2000);
  REQUIRE(cfg.get_double("T", 0.0) == Catch::Approx(1.0));
  REQUIRE(cfg.get_doubles("h_list", {}) == std::vector<double>{0.0625, 0.03125});
  REQUIRE(cfg.get_strings("schemes", {}) ==
          std::vector<std::string>{"neumann-05", "magnus-1"});
  REQUIRE(cfg.get_int("missing", 7) == 7);
  REQUIRE_FALSE(cfg.has("missing"));
}

TEST_CASE("parse errors") {
  REQUIRE_THROWS(Config::parse("novalue\n"));
  REQUIRE_THROWS(Config::parse("= 3\n"));
  REQUIRE_THROWS(Config::parse("a = 1\na = 2\n"));
}

TEST_CASE("typed getters validate") {
  const Config cfg = Config::parse("x = abc\n");
  REQUIRE_THROWS(cfg.get_int("x", 0));
  REQUIRE_THROWS(cfg.get_double("x", 0.0));
}

TEST_CASE("unknown keys are rejected") {
  const Config cfg = Config::parse("fixture = linear-2w\ntypo_key = 3\n");
  REQUIRE_THROWS_WITH(cfg.restrict_keys({"fixture", "n_paths"}),
                      Catch::Matchers::ContainsSubstring("typo_key"));
  REQUIRE_NOTHROW(cfg.restrict_keys({"fixture", "typo_key"}));
}

TEST_CASE("render round-trips") {
  const Config cfg = Config::parse("b = 2\na = one two\nc = 3.5\n");
  const std::string text = cfg.render();
  const Config back = Config::parse(text);
  REQUIRE(back.items() == cfg.items());
  // Rendering is canonical: a second round trip is identical text.
  REQUIRE(back.render() == text);
}
