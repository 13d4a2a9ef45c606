#include <doctest.h>

#include "boedflows/eig.hpp"
#include "boedflows/verify.hpp"

#include <cmath>

using namespace boedflows;

namespace {

DesignBatch angles(std::vector<double> a) { return DesignBatch(std::move(a), 1, ConstraintSpec::torus()); }

DesignBatch random_angles(std::size_t m, Stream& s) {
    DesignBatch b(m, 1, ConstraintSpec::torus());
    for (auto& x : b.coords()) x = uniform(s, -kPi, kPi);
    return b;
}

double max_rel_err(const std::vector<double>& g, const std::vector<double>& fd) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        num = std::max(num, std::abs(g[k] - fd[k]));
        den = std::max(den, std::abs(fd[k]));
    }
    return num / std::max(den, 1e-8);
}

}  // namespace

TEST_CASE("torus closed form at a single design") {
    TorusLinearModel torus;
    const double s = 0.3, w = kPi / 2 / s, v = kPi / s;
    const double a0 = 0.4 + 2.0 + 1.9 * std::exp(-0.5 * w * w) + 1.6 * std::exp(-0.5 * w * w) +
                      1.0 * std::exp(-0.5 * v * v);
    CHECK(torus.sensitivity(0.0) == doctest::Approx(a0).epsilon(1e-14));
    CHECK(eig_exact_torus(torus, angles({0.0})) ==
          doctest::Approx(0.5 * std::log(1.0 + a0 * a0 / (0.35 * 0.35))).epsilon(1e-14));
}

TEST_CASE("torus closed form is zero without sensitivity and permutation invariant") {
    TorusParams p;
    p.amplitudes = {0, 0, 0, 0, 0};
    CHECK(eig_exact_torus(TorusLinearModel(p), angles({0.1, 2.0})) == 0.0);
    TorusLinearModel torus;
    Stream s = rng_substream(1, 0, 0, Purpose::Init);
    for (int k = 0; k < 50; ++k) {
        auto b = random_angles(1 + k % 6, s);
        auto r = b;
        std::reverse(r.coords().begin(), r.coords().end());
        REQUIRE(eig_exact_torus(torus, b) >= 0.0);
        REQUIRE(eig_exact_torus(torus, b) == doctest::Approx(eig_exact_torus(torus, r)).epsilon(1e-13));
    }
}

TEST_CASE("torus analytic gradient matches finite differences") {
    TorusLinearModel torus;
    Stream s = rng_substream(2, 0, 0, Purpose::Init);
    for (int k = 0; k < 50; ++k) {
        auto b = random_angles(1 + k % 5, s);
        auto g = grad_eig_exact_torus(torus, b);
        auto fd = fd_gradient(
            [&](std::span<const double> x) { return eig_exact_torus(torus, angles({x.begin(), x.end()})); },
            b.coords(), 1e-5);
        REQUIRE(max_rel_err(g, fd) <= 1e-6);
    }
}

TEST_CASE("frozen NMC is deterministic and its gradient matches finite differences") {
    std::vector<ModelPtr> models = {std::make_shared<Toy1DModel>(), std::make_shared<TorusLinearModel>(),
                                    std::make_shared<PkModel>(), std::make_shared<Sensor2DModel>()};
    for (const auto& model : models) {
        CAPTURE(model->name());
        const std::size_t m = 3;
        NmcOracle oracle(model, 20, 50, GradientRandomness::Frozen, 11, m);
        Stream s = rng_substream(3, 0, 0, Purpose::Init);
        const auto c = model->constraint();
        for (int k = 0; k < 20; ++k) {
            DesignBatch b(m, model->design_dim(), c);
            const auto pc = c.per_point();
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t q = 0; q < b.dim(); ++q)
                    b(j, q) = pc.kind == ConstraintKind::Box ? uniform(s, pc.lo[q] + 0.1, pc.hi[q] - 0.1)
                                                             : uniform(s, -3.0, 3.0);
            if (model->name() == "sensor2d")  // keep sensors where the utility is not flat
                for (std::size_t j = 0; j < m; ++j) {
                    b(j, 0) = (j % 2 ? -1.5 : 2.2) + uniform(s, -0.6, 0.6);
                    b(j, 1) = uniform(s, -0.6, 0.6);
                }
            if (c.kind == ConstraintKind::OrderedMinGap) b = repair(b);
            REQUIRE(oracle.value(b) == oracle.value(b));
            auto g = oracle.gradient(b);
            auto fd = fd_gradient(
                [&](std::span<const double> x) {
                    DesignBatch t(std::vector<double>(x.begin(), x.end()), b.dim(), ConstraintSpec{});
                    return oracle.value(t);
                },
                b.coords(), 1e-5);
            REQUIRE(max_rel_err(g, fd) <= 1e-5);
            for (std::size_t j = 0; j < m; ++j) {
                auto sg = oracle.slot_gradient(b, j);
                for (std::size_t q = 0; q < b.dim(); ++q) REQUIRE(sg[q] == doctest::Approx(g[j * b.dim() + q]));
            }
        }
    }
}

TEST_CASE("frozen NMC gradient on the fhn interpolant") {
    FhnParams p;
    p.n_param_draws = 256;
    auto fhn = std::make_shared<FhnModel>(p);
    NmcOracle oracle(fhn, 20, 50, GradientRandomness::Frozen, 5, 3);
    Stream s = rng_substream(4, 0, 0, Purpose::Init);
    const double h = fhn->grid_step();
    for (int k = 0; k < 20; ++k) {
        DesignBatch b(3, 1, fhn->constraint());
        for (std::size_t j = 0; j < 3; ++j)
            b(j, 0) = (std::floor(uniform(s, 0.5, 19.5) / h) + uniform(s, 0.25, 0.75)) * h;
        b = repair(b);
        auto g = oracle.gradient(b);
        auto fd = fd_gradient(
            [&](std::span<const double> x) {
                return oracle.value(DesignBatch(std::vector<double>(x.begin(), x.end()), 1));
            },
            b.coords(), 1e-7);
        REQUIRE(max_rel_err(g, fd) <= 1e-5);
    }
}

TEST_CASE("fresh NMC depends on the call but is reproducible") {
    auto torus = std::make_shared<TorusLinearModel>();
    NmcOracle oracle(torus, 50, 50, GradientRandomness::Fresh, 3, 2);
    auto b = angles({0.2, 1.4});
    CHECK(oracle.value(b, {1, 2, 0}) == oracle.value(b, {1, 2, 0}));
    CHECK(oracle.value(b, {1, 2, 0}) != oracle.value(b, {1, 3, 0}));
    CHECK_FALSE(oracle.batch_size().has_value());
    CHECK(NmcOracle(torus, 5, 5, GradientRandomness::Frozen, 3, 2).batch_size() == 2u);
}

TEST_CASE("zero-information model gives zero EIG and zero gradient") {
    auto null = std::make_shared<NullModel>();
    NmcOracle oracle(null, 200, 100, GradientRandomness::Frozen, 1, 2);
    DesignBatch b(std::vector<double>{0.5, -1.0}, 1, null->constraint());
    const auto est = oracle.estimate(b);
    CHECK(std::abs(est.value) < 1e-12);
    for (double g : oracle.gradient(b)) CHECK(std::abs(g) < 1e-12);
    const auto fresh = eig_nmc(null, b, 500, 100, 9, GradientRandomness::Fresh);
    CHECK(std::abs(fresh.value) <= 3 * fresh.std_error + 1e-12);
}

TEST_CASE("NMC agrees with the torus closed form") {
    auto torus = std::make_shared<TorusLinearModel>();
    Stream s = rng_substream(6, 0, 0, Purpose::Init);
    for (int k = 0; k < 3; ++k) {
        auto b = random_angles(3, s);
        const auto est = eig_nmc(torus, b, 2000, 2000, 100 + k);
        REQUIRE(est.std_error > 0.0);
        REQUIRE(std::abs(est.value - eig_exact_torus(*torus, b)) <= 3 * est.std_error + 0.05);
    }
}

TEST_CASE("Gauss-Hermite rule integrates low-order moments") {
    const auto gh = gauss_hermite(20);
    double s0 = 0, s2 = 0, s4 = 0;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
        s0 += gh.weights[k];
        s2 += gh.weights[k] * gh.nodes[k] * gh.nodes[k];
        s4 += gh.weights[k] * std::pow(gh.nodes[k], 4);
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("toy quadrature landscape") {
    Toy1DModel toy;
    const auto rule200 = gauss_hermite(200), rule400 = gauss_hermite(400);
    double peak = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double xi = -3.5 + 7.0 * k / 999.0;
        const double v = eig_quadrature_1d(toy, xi, rule200);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= std::log(2.0));
        REQUIRE(v == doctest::Approx(eig_quadrature_1d(toy, xi, rule400)).epsilon(1e-9));
        peak = std::max(peak, v);
    }
    // the largest bump beats the region between bumps
    CHECK(eig_quadrature_1d(toy, toy.centres()[2]) > eig_quadrature_1d(toy, 0.5 * (toy.centres()[0] + toy.centres()[1])));
    Toy1DParams flat;
    flat.amplitudes = {0, 0, 0, 0, 0};
    CHECK(eig_quadrature_1d(Toy1DModel(flat), 0.3) == doctest::Approx(0.0).epsilon(1e-15).scale(1.0));
    CHECK_THROWS_AS(eig_quadrature_1d(toy, 0.0, 8), ConfigError);
}

TEST_CASE("toy NMC agrees with quadrature") {
    auto toy = std::make_shared<Toy1DModel>();
    for (int k = 0; k < 20; ++k) {
        const double xi = -3.5 + 7.0 * k / 19.0;
        const auto est = eig_nmc(toy, DesignBatch(std::vector<double>{xi}, 1, toy->constraint()), 2000, 200, 50 + k);
        REQUIRE(std::abs(est.value - eig_quadrature_1d(*toy, xi)) <= 3 * est.std_error + 0.05);
    }
}

TEST_CASE("landscape oracle interpolates the quadrature curve") {
    auto toy = std::make_shared<Toy1DModel>();
    Toy1DLandscapeOracle land(toy);
    CHECK(land.eig_at(0.123) == doctest::Approx(eig_quadrature_1d(*toy, 0.123)).epsilon(1e-4));
    const double x = land.argmax();
    CHECK(std::abs(land.grad_at(x)) < 0.05);
    CHECK_THROWS_AS(land.value(DesignBatch(std::vector<double>{0.0, 1.0}, 1, toy->constraint())), ConfigError);
}

TEST_CASE("estimator errors") {
    auto torus = std::make_shared<TorusLinearModel>();
    CHECK_THROWS_AS(NmcOracle(torus, 0, 5, GradientRandomness::Frozen, 1, 2), ConfigError);
    NmcOracle frozen(torus, 5, 5, GradientRandomness::Frozen, 1, 2);
    CHECK_THROWS_AS(frozen.value(angles({0.1, 0.2, 0.3})), ConfigError);
    const auto rep = eig_nmc_replicated(torus, angles({0.1, 0.2}), 50, 50, 3, 4);
    CHECK(rep.std_error > 0.0);
}
