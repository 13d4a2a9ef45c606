#include <doctest.h>

#include "boedflows/config.hpp"
#include "boedflows/core.hpp"

using namespace boedflows;

TEST_CASE("key value parsing with comments and overrides") {
    auto cfg = KeyValueConfig::parse("# comment\nlambda = 0.5\nN=20\nlambda = 0.25\nname = pk # trailing\n");
    CHECK(cfg.get_double("lambda", 0) == 0.25);
    CHECK(cfg.get_int("N", 0) == 20);
    CHECK(cfg.get_string("name", "") == "pk");
    cfg.apply_override("N=40");
    CHECK(cfg.get_uint("N", 0) == 40);
    CHECK(cfg.get_uint("n_steps", 7) == 7);
    CHECK(KeyValueConfig::parse("n = 2e4").get_uint("n", 0) == 20000);
    CHECK(cfg.get_doubles("xs", {1.0}) == std::vector<double>{1.0});
    CHECK(KeyValueConfig::parse("xs = 1, 2.5,3").get_doubles("xs", {}) == std::vector<double>{1.0, 2.5, 3.0});
}

TEST_CASE("missing and malformed keys") {
    KeyValueConfig cfg;
    CHECK_THROWS_WITH_AS(cfg.require("model"), "missing required config key: model", ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign here"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("n = abc").get_double("n", 0), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("n = -3").get_uint("n", 0), ConfigError);
}

TEST_CASE("flow config round trip") {
    FlowConfig f;
    f.algorithm = Algorithm::IidRep;
    f.eta = 0.2;
    f.delta_rep = 0.3;
    f.m = 5;
    f.lambda = 0.125;
    f.gamma = 0.0625;
    f.seed = 123456789012345ULL;
    f.gradient_randomness = GradientRandomness::Fresh;
    KeyValueConfig cfg;
    f.write_to(cfg);
    auto g = FlowConfig::from_config(KeyValueConfig::parse(cfg.serialise()));
    CHECK(g.algorithm == f.algorithm);
    CHECK(g.eta == f.eta);
    CHECK(g.delta_rep == f.delta_rep);
    CHECK(g.m == 5);
    CHECK(g.lambda == f.lambda);
    CHECK(g.seed == f.seed);
    CHECK(g.gradient_randomness == GradientRandomness::Fresh);
    CHECK(g.lambda_m() == doctest::Approx(0.025));
}

TEST_CASE("flow config validation") {
    FlowConfig f;
    f.algorithm = Algorithm::IidRep;
    f.eta = 0.0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f.eta = 0.1;
    CHECK_NOTHROW(f.validate());
    f.lambda = 0.0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    CHECK(parse_algorithm("iid_rep") == Algorithm::IidRep);
    CHECK(parse_algorithm("MF-Sub") == Algorithm::MfSub);
    CHECK_THROWS_AS(parse_algorithm("langevin"), ConfigError);
    CHECK(FlowConfig::from_config(KeyValueConfig::parse("eig.n_outer = 7\neig.mode = fresh")).n_outer == 7);
}
