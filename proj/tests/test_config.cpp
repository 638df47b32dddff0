#include <doctest.h>

#include <cmath>
#include <limits>

#include "rydchirp/config.hpp"
#include "rydchirp/errors.hpp"

using namespace rydchirp;

TEST_CASE("key-value parsing with comments and typed getters") {
  const auto cfg = KeyValueConfig::parse("# header\n p1 = 0.5\nq=2\n\nname = full run  \nflag = true\n");
  CHECK(cfg.get_double("p1") == 0.5);
  CHECK(cfg.get_int("q") == 2);
  CHECK(cfg.get_string("name") == "full run");
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_double("absent", 7.0) == 7.0);
  CHECK_NOTHROW(cfg.require_all_consumed());
}

TEST_CASE("malformed or leftover configuration is an error") {
  CHECK_THROWS_AS(KeyValueConfig::parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
  const auto cfg = KeyValueConfig::parse("p1 = 1\np_1 = 2\n");
  CHECK(cfg.get_double("p1") == 1.0);
  CHECK_THROWS_AS(cfg.require_all_consumed(), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("q = 1.5\n").get_int("q"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = 1e\n").get_double("x"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("").get_double("x"), ConfigError);
}

TEST_CASE("canonical text round-trips doubles exactly") {
  KeyValueConfig cfg;
  const double awkward[] = {0.1, 1.0 / 3.0, 2.5805324039197264, 1e-300, 6.02214076e23,
                            std::numeric_limits<double>::denorm_min()};
  int i = 0;
  for (double v : awkward) cfg.set("v" + std::to_string(i++), v);
  const auto back = KeyValueConfig::parse(cfg.to_text());
  i = 0;
  for (double v : awkward) CHECK(back.get_double("v" + std::to_string(i++)) == v);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("hashes are stable and sensitive") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(fnv1a64("p1 = 1") != fnv1a64("p1 = 2"));
}
