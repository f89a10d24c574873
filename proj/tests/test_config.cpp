#include <catch2/catch_amalgamated.hpp>

#include "mvsdde/config.hpp"

using mvsdde::config::Config;
using mvsdde::config::ParseError;

TEST_CASE("config parses scalars, strings, arrays and tables") {
    const auto cfg = Config::parse_string(R"(
# study manifest
seed = 987
threads = 4
out = "artifacts"   # trailing comment

[convergence]
model = "example61"
hurst = 0.8
n_mc = 500
factors = [8, 16, 32, 64, 128]
self_test = false
)");
    CHECK(cfg.get_int("seed", 0) == 987);
    CHECK(cfg.get_int("threads", 0) == 4);
    CHECK(cfg.get_string("out", "") == "artifacts");
    CHECK(cfg.get_string("convergence.model", "") == "example61");
    CHECK(cfg.get_double("convergence.hurst", 0) == 0.8);
    CHECK(cfg.get_int("convergence.n_mc", 0) == 500);
    CHECK(cfg.get_array("convergence.factors", {}) == std::vector<double>{8, 16, 32, 64, 128});
    CHECK(cfg.get_bool("convergence.self_test", true) == false);
    CHECK_FALSE(cfg.has("convergence.missing"));
    CHECK(cfg.get_int("convergence.missing", 42) == 42);
}

TEST_CASE("integers promote to doubles but not the reverse") {
    const auto cfg = Config::parse_string("a = 3\nb = 2.5\n");
    CHECK(cfg.get_double("a", 0) == 3.0);
    CHECK(cfg.get_int("a", 0) == 3);
    CHECK(cfg.get_double("b", 0) == 2.5);
    CHECK_THROWS_AS(cfg.get_int("b", 0), ParseError);
    CHECK_THROWS_AS(cfg.get_string("a", ""), ParseError);
}

TEST_CASE("later keys and programmatic sets win") {
    auto cfg = Config::parse_string("x = 1\nx = 2\n");
    CHECK(cfg.get_int("x", 0) == 2);
    cfg.set<std::int64_t>("x", 7);
    CHECK(cfg.get_int("x", 0) == 7);
}

TEST_CASE("parse errors carry line context") {
    CHECK_THROWS_AS(Config::parse_string("key value\n"), ParseError);
    CHECK_THROWS_AS(Config::parse_string("[unterminated\n"), ParseError);
    CHECK_THROWS_AS(Config::parse_string("k = [1, 2\n"), ParseError);
    CHECK_THROWS_AS(Config::parse_string("k = \"open\n"), ParseError);
    CHECK_THROWS_AS(Config::parse_string("k = 1.2.3\n"), ParseError);
    CHECK_THROWS_AS(Config::parse_file("/nonexistent/config.toml"), ParseError);
}

TEST_CASE("hash inside quoted strings is not a comment") {
    const auto cfg = Config::parse_string("name = \"a#b\"\n");
    CHECK(cfg.get_string("name", "") == "a#b");
}
