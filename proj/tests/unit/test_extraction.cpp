#include <doctest.h>

#include "boedflows/extraction.hpp"

#include <cmath>

using namespace boedflows;

namespace {

FunctionOracle torus_bump() {
    return FunctionOracle(1, [](const DesignBatch& b) {
        double v = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) v += std::cos(b(j, 0) - 0.5 * static_cast<double>(j));
        return v;
    });
}

CandidateSet explicit_set(std::vector<double> xs) {
    CandidateSet s;
    for (double x : xs) s.candidates.emplace_back(std::vector<double>{x}, 1, ConstraintSpec::torus());
    return s;
}

}  // namespace

TEST_CASE("single candidate is returned unchanged") {
    auto o = torus_bump();
    auto s = explicit_set({0.3});
    auto r = extract_best_of_n(s, o, o, 1);
    CHECK(r.index == 0);
    CHECK(r.design == s.candidates[0]);
    CHECK(r.estimate.value == doctest::Approx(std::cos(0.3)));
}

TEST_CASE("ties resolve to the earliest candidate") {
    FunctionOracle flat(1, [](const DesignBatch&) { return 2.0; });
    auto s = explicit_set({0.1, 0.2, 0.3, 0.4});
    CHECK(extract_best_of_n(s, flat, flat, 2).index == 0);
    CHECK(min_argmax(std::vector<double>{1.0, 3.0, 3.0}) == 1);
    CHECK_THROWS_AS(min_argmax(std::vector<double>{}), ConfigError);
}

TEST_CASE("full shortlist equals the exhaustive argmax") {
    auto o = torus_bump();
    std::vector<double> xs;
    for (int k = 0; k < 37; ++k) xs.push_back(-M_PI + 2 * M_PI * k / 37.0);
    auto s = explicit_set(xs);
    std::size_t best = 0;
    for (std::size_t k = 0; k < xs.size(); ++k)
        if (std::cos(xs[k]) > std::cos(xs[best])) best = k;
    CHECK(extract_best_of_n(s, o, o, xs.size()).index == best);
    // a noisy screen with a full shortlist still lands on the exact argmax
    FunctionOracle noisy(1, [](const DesignBatch& b) { return std::sin(40 * b(0, 0)); });
    CHECK(extract_best_of_n(s, noisy, o, xs.size()).index == best);
}

TEST_CASE("best-of-n is monotone in n") {
    auto o = torus_bump();
    const std::vector<double> pool{2.5, -1.0, 0.4, 1.9, -0.1, 3.0};
    double prev = -1e300;
    for (std::size_t n = 1; n <= pool.size(); ++n) {
        auto s = explicit_set({pool.begin(), pool.begin() + static_cast<long>(n)});
        const double v = extract_best_of_n(s, o, o, n).estimate.value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("shortlist bounds and feasibility") {
    auto o = torus_bump();
    auto s = explicit_set({0.1, 0.2});
    CHECK_THROWS_AS(extract_best_of_n(s, o, o, 0), ConfigError);
    CHECK_THROWS_AS(extract_best_of_n(s, o, o, 3), ConfigError);
    CHECK_THROWS_AS(extract_best_of_n(CandidateSet{}, o, o, 1), ConfigError);
    CandidateSet bad;
    bad.candidates.emplace_back(std::vector<double>{5.0, 1.0}, 1, ConstraintSpec::ordered_min_gap(0.1, 24.0));
    CHECK_THROWS_AS(extract_best_of_n(bad, o, o, 1), ConfigError);
}

TEST_CASE("success probability law") {
    CHECK(bon_success_probability(0.0, 10) == 0.0);
    CHECK(bon_success_probability(1.0, 1) == 1.0);
    CHECK(bon_success_probability(0.1, 10) == doctest::Approx(1.0 - std::pow(0.9, 10)));
    CHECK(bon_success_probability(0.05, 100) > bon_success_probability(0.05, 50));
    CHECK_THROWS_AS(bon_success_probability(1.5, 3), ConfigError);
}

TEST_CASE("flow candidates follow the algorithm's structure") {
    FunctionOracle flat(1, [](const DesignBatch&) { return 0.0; },
                        [](const DesignBatch& b) { return std::vector<double>(b.size(), 0.0); });
    const auto pk = ConstraintSpec::ordered_min_gap(0.25, 24.0);
    for (Algorithm a : {Algorithm::Joint, Algorithm::MF, Algorithm::Iid}) {
        FlowConfig cfg;
        cfg.algorithm = a;
        cfg.m = 6;
        cfg.N = 5;
        cfg.n_steps = 40;
        cfg.seed = 2;
        FlowRunOptions opt;
        opt.tail_capacity = 8;
        auto res = run_flow(cfg, {flat, {}}, init_flow(cfg, 1, pk, {}), opt);
        auto set = candidates_from_flow(res, 12, 3);
        if (a == Algorithm::Joint) {
            // whole snapshots of all 5 chains, at most tail_capacity of them
            CHECK(set.candidates.size() == 5);
        } else {
            CHECK(set.candidates.size() == 12);
        }
        for (const auto& c : set.candidates) {
            CHECK(c.size() == 6);
            CHECK(is_feasible(c));
        }
        CHECK(set.provenance == (a == Algorithm::Joint  ? Provenance::TrajectoryTail
                                 : a == Algorithm::MF ? Provenance::CoordinateSampled
                                                      : Provenance::IidSampled));
        auto again = candidates_from_flow(res, 12, 3);
        CHECK(again.candidates == set.candidates);
        auto r = extract_best_of_n(set, flat, flat, 3);
        CHECK(is_feasible(r.design));
    }
    FlowResult empty;
    CHECK_THROWS_AS(candidates_from_flow(empty, 0, 1), ConfigError);
}
