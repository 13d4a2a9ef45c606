#include <doctest.h>

#include "boedflows/verify.hpp"

#include <cmath>

using namespace boedflows;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
    return g;
}

double tv(const GridDensity& p, const GridDensity& q) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.prob.size(); ++k) s += std::abs(p.prob[k] - q.prob[k]);
    return 0.5 * s;
}

}  // namespace

TEST_CASE("Gibbs density on a grid") {
    const auto grid = linspace(-4.0, 4.0, 801);
    std::vector<double> rho, flat(grid.size(), 1.3), u;
    for (double x : grid) {
        rho.push_back(std::exp(-0.5 * x * x));
        u.push_back(std::sin(2 * x));
    }
    const auto ref = gibbs_density_1d(grid, flat, rho, 0.1);
    SUBCASE("constant utility gives the reference") {
        CHECK(ref.mean() == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(ref.cdf(-1e-9) <= 0.5);
        CHECK(ref.cdf(0.0) >= 0.5);
    }
    SUBCASE("large temperature approaches the reference") {
        CHECK(tv(gibbs_density_1d(grid, u, rho, 1e6), ref) <= 1e-3);
    }
    SUBCASE("shifting the utility changes nothing") {
        std::vector<double> shifted;
        for (double v : u) shifted.push_back(v + 100.0);
        const auto a = gibbs_density_1d(grid, u, rho, 0.3), b = gibbs_density_1d(grid, shifted, rho, 0.3);
        CHECK(tv(a, b) <= 1e-12);
    }
    SUBCASE("two points give a softmax") {
        const std::vector<double> g2{0.0, 1.0}, u2{0.0, 0.7}, r2{1.0, 1.0};
        const auto p = gibbs_density_1d(g2, u2, r2, 0.5);
        CHECK(p.prob[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.4))));
    }
    CHECK_THROWS(GridDensity::from_log_weights({1.0, 0.0}, {0.0, 0.0}));
}

TEST_CASE("Wasserstein-1 in one dimension") {
    SUBCASE("identical samples") {
        const std::vector<double> a{0.3, -1.0, 2.0};
        CHECK(wasserstein1_1d(a, a) == 0.0);
    }
    SUBCASE("single sample against a law is the mean absolute deviation") {
        const std::vector<double> g{0.0, 1.0, 2.0};
        const auto p = GridDensity::from_log_weights(g, {std::log(0.2), std::log(0.5), std::log(0.3)});
        const std::vector<double> one{0.5};
        CHECK(wasserstein1_1d(one, p) == doctest::Approx(0.2 * 0.5 + 0.5 * 0.5 + 0.3 * 1.5));
    }
    SUBCASE("samples from a three-atom law converge") {
        const std::vector<double> g{-1.0, 0.5, 2.0};
        const auto p = GridDensity::from_log_weights(g, {std::log(0.2), std::log(0.5), std::log(0.3)});
        Stream s(11);
        std::vector<double> xs(100000);
        for (auto& x : xs) x = p.sample(s);
        CHECK(wasserstein1_1d(xs, p) <= 0.02);
    }
    SUBCASE("triangle inequality") {
        Stream s(5);
        std::vector<double> a(200), b(300), c(250);
        for (auto& x : a) x = standard_normal(s);
        for (auto& x : b) x = 1.0 + 2.0 * standard_normal(s);
        for (auto& x : c) x = uniform(s, -3.0, 3.0);
        CHECK(wasserstein1_1d(a, c) <= wasserstein1_1d(a, b) + wasserstein1_1d(b, c) + 1e-12);
        CHECK(wasserstein1_1d(a, b) == doctest::Approx(wasserstein1_1d(b, a)));
    }
    SUBCASE("shift") {
        const std::vector<double> a{0.0, 1.0, 5.0}, b{2.0, 3.0, 7.0};
        CHECK(wasserstein1_1d(a, b) == doctest::Approx(2.0));
    }
}

TEST_CASE("finite-difference gradients") {
    const ScalarField quad = [](std::span<const double> x) { return x[0] * x[0] + 3 * x[0] * x[1]; };
    const auto g = fd_gradient(quad, std::vector<double>{1.0, 2.0}, 1e-5);
    CHECK(g[0] == doctest::Approx(8.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-8));
    const ScalarField lin = [](std::span<const double> x) { return 2.0 - 0.5 * x[0]; };
    CHECK(fd_gradient(lin, std::vector<double>{7.0}, 1e-3)[0] == doctest::Approx(-0.5).epsilon(1e-10));
    const ScalarField bad = [](std::span<const double> x) { return x[0] > 1.0 ? std::nan("") : 0.0; };
    CHECK_THROWS_AS(fd_gradient(bad, std::vector<double>{1.0}, 1e-3), EstimatorError);
}

TEST_CASE("KDE free energy prefers the Gibbs law") {
    const auto grid = linspace(-4.0, 4.0, 401);
    std::vector<double> rho, u;
    for (double x : grid) {
        rho.push_back(std::exp(-0.5 * x * x));
        u.push_back(-(x - 1.0) * (x - 1.0));
    }
    // the Gibbs law for lambda = 1 is N(2/3, 1/3)
    Stream s(2);
    std::vector<double> good(4000), off(4000);
    for (auto& x : good) x = 2.0 / 3.0 + std::sqrt(1.0 / 3.0) * standard_normal(s);
    for (auto& x : off) x = -1.0 + 0.5 * standard_normal(s);
    CHECK(kde_free_energy(good, grid, u, rho, 1.0, 0.1) < kde_free_energy(off, grid, u, rho, 1.0, 0.1));
}
