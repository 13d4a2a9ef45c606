#include "boedflows/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace boedflows {

std::vector<double> trapezoid_weights(std::span<const double> grid) {
    const std::size_t n = grid.size();
    if (n == 0) throw ConfigError("trapezoid_weights: empty grid");
    std::vector<double> w(n, 0.0);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = grid[k + 1] - grid[k];
        if (!(h > 0.0)) throw ConfigError("grid must be strictly increasing");
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    return w;
}

GridDensity GridDensity::from_log_weights(std::vector<double> grid, std::vector<double> log_weights) {
    if (grid.empty() || grid.size() != log_weights.size())
        throw ConfigError("GridDensity: grid and weights must be aligned and non-empty");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw ConfigError("GridDensity: grid must be strictly increasing");
    GridDensity g;
    const double mx = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(mx)) throw ConfigError("GridDensity: no finite weight");
    g.prob.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) g.prob[k] = std::exp(log_weights[k] - mx);
    const double total = std::accumulate(g.prob.begin(), g.prob.end(), 0.0);
    for (auto& p : g.prob) p /= total;
    g.grid = std::move(grid);
    g.log_weights = std::move(log_weights);
    return g;
}

double GridDensity::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) m += prob[k] * grid[k];
    return m;
}

double GridDensity::cdf(double x) const {
    double c = 0.0;
    for (std::size_t k = 0; k < grid.size() && grid[k] <= x; ++k) c += prob[k];
    return std::min(c, 1.0);
}

double GridDensity::sample(Stream& s) const {
    std::discrete_distribution<std::size_t> pick(prob.begin(), prob.end());
    return grid[pick(s)];
}

GridDensity gibbs_density_1d(std::span<const double> grid, std::span<const double> utility,
                             std::span<const double> ref_density, double lambda) {
    if (grid.size() != utility.size() || grid.size() != ref_density.size())
        throw ConfigError("gibbs_density_1d: grids not aligned");
    if (!(lambda > 0.0)) throw ConfigError("gibbs_density_1d: lambda must be > 0");
    const auto w = trapezoid_weights(grid);
    // the maximum of u cancels in the normalisation; subtracting it keeps exp in range
    const double umax = *std::max_element(utility.begin(), utility.end());
    std::vector<double> lw(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double r = ref_density[k];
        if (r < 0.0) throw ConfigError("gibbs_density_1d: negative reference density");
        lw[k] = (utility[k] - umax) / lambda + (r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity()) +
                std::log(w[k]);
    }
    return GridDensity::from_log_weights({grid.begin(), grid.end()}, std::move(lw));
}

namespace {

/// Integral of |F - G| for two step CDFs given as sorted atoms with masses.
double w1_atoms(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
    std::vector<std::pair<double, double>> all;  // (location, signed mass)
    all.reserve(a.size() + b.size());
    for (auto& [x, p] : a) all.emplace_back(x, p);
    for (auto& [x, p] : b) all.emplace_back(x, -p);
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    double diff = 0.0, dist = 0.0;
    for (std::size_t k = 0; k + 1 < all.size(); ++k) {
        diff += all[k].second;
        dist += std::abs(diff) * (all[k + 1].first - all[k].first);
    }
    return dist;
}

std::vector<std::pair<double, double>> empirical(std::span<const double> s) {
    if (s.empty()) throw ConfigError("wasserstein1_1d: empty sample");
    std::vector<std::pair<double, double>> out;
    out.reserve(s.size());
    const double p = 1.0 / static_cast<double>(s.size());
    for (double x : s) {
        if (!std::isfinite(x)) throw ConfigError("wasserstein1_1d: non-finite sample");
        out.emplace_back(x, p);
    }
    return out;
}

}  // namespace

double wasserstein1_1d(std::span<const double> samples, const GridDensity& density) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(density.grid.size());
    for (std::size_t k = 0; k < density.grid.size(); ++k) atoms.emplace_back(density.grid[k], density.prob[k]);
    return w1_atoms(empirical(samples), std::move(atoms));
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
    return w1_atoms(empirical(a), empirical(b));
}

std::vector<double> fd_gradient(const ScalarField& f, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw ConfigError("fd_gradient: h must be > 0");
    std::vector<double> xp(x.begin(), x.end()), g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        xp[k] = x[k] + h;
        const double fp = f(xp);
        xp[k] = x[k] - h;
        const double fm = f(xp);
        xp[k] = x[k];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw EstimatorError("fd_gradient: non-finite evaluation at coordinate " + std::to_string(k));
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double kde_free_energy(std::span<const double> samples, std::span<const double> grid,
                       std::span<const double> utility, std::span<const double> ref_density, double lambda,
                       double bandwidth) {
    if (samples.empty() || grid.size() != utility.size() || grid.size() != ref_density.size())
        throw ConfigError("kde_free_energy: empty sample or misaligned grids");
    if (!(bandwidth > 0.0) || !(lambda > 0.0)) throw ConfigError("kde_free_energy: bandwidth and lambda must be > 0");
    const auto w = trapezoid_weights(grid);
    std::vector<double> dens(grid.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * kPi));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        for (double x : samples) {
            const double z = (grid[k] - x) / bandwidth;
            dens[k] += std::exp(-0.5 * z * z);
        }
        dens[k] *= norm;
    }
    double mass = 0.0, ref_mass = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        mass += w[k] * dens[k];
        ref_mass += w[k] * ref_density[k];
    }
    double eu = 0.0, kl = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double p = dens[k] / mass;
        if (p <= 0.0) continue;
        const double r = ref_density[k] / ref_mass;
        eu += w[k] * p * utility[k];
        kl += w[k] * p * (r > 0.0 ? std::log(p / r) : 700.0);
    }
    return -eu + lambda * kl;
}

namespace {

std::size_t checked_tuple_count(const std::vector<std::size_t>& sizes) {
    std::size_t total = 1;
    for (std::size_t s : sizes) {
        if (s == 0) throw ConfigError("enumerate drift: empty ensemble");
        if (total > kMaxEnumeratedTuples / s)
            throw ConfigError("enumerate drift: more than 1e5 tuples, refusing");
        total *= s;
    }
    return total;
}

/// Visits the product of index ranges in lexicographic order.
template <class Visit>
void for_each_tuple(const std::vector<std::size_t>& sizes, Visit visit) {
    std::vector<std::size_t> idx(sizes.size(), 0);
    const std::size_t total = checked_tuple_count(sizes);
    for (std::size_t t = 0; t < total; ++t) {
        visit(idx);
        for (std::size_t k = idx.size(); k-- > 0;) {
            if (++idx[k] < sizes[k]) break;
            idx[k] = 0;
        }
    }
}

}  // namespace

std::vector<double> enumerate_iid_drift(const ParticleEnsemble& ens, std::size_t i, std::size_t m,
                                        const UtilityOracle& oracle) {
    if (m == 0 || i >= ens.size()) throw ConfigError("enumerate_iid_drift: bad m or particle index");
    const std::size_t d = ens.dim();
    std::vector<std::size_t> sizes(m - 1, ens.size());
    DesignBatch batch(m, d, ens.constraint());
    std::copy_n(ens.particle(i).begin(), d, batch.point(0).begin());
    std::vector<double> acc(d, 0.0);
    std::size_t count = 0;
    for_each_tuple(sizes, [&](const std::vector<std::size_t>& idx) {
        for (std::size_t j = 1; j < m; ++j) std::copy_n(ens.particle(idx[j - 1]).begin(), d, batch.point(j).begin());
        auto g = oracle.slot_gradient(batch, 0, {0, i, count});
        for (std::size_t c = 0; c < d; ++c) acc[c] += g[c];
        ++count;
    });
    for (auto& v : acc) v /= static_cast<double>(count);
    return acc;
}

std::vector<double> enumerate_mf_drift(const std::vector<ParticleEnsemble>& marginals, std::size_t b,
                                       std::size_t i, const UtilityOracle& oracle) {
    const std::size_t m = marginals.size();
    if (b >= m || i >= marginals[b].size()) throw ConfigError("enumerate_mf_drift: bad slot or particle index");
    const std::size_t d = marginals[b].dim();
    std::vector<std::size_t> sizes, slots;
    for (std::size_t c = 0; c < m; ++c)
        if (c != b) {
            sizes.push_back(marginals[c].size());
            slots.push_back(c);
        }
    DesignBatch batch(m, d, marginals[b].constraint());
    std::copy_n(marginals[b].particle(i).begin(), d, batch.point(b).begin());
    std::vector<double> acc(d, 0.0);
    std::size_t count = 0;
    for_each_tuple(sizes, [&](const std::vector<std::size_t>& idx) {
        for (std::size_t k = 0; k < slots.size(); ++k)
            std::copy_n(marginals[slots[k]].particle(idx[k]).begin(), d, batch.point(slots[k]).begin());
        auto g = oracle.slot_gradient(batch, b, {0, i, count});
        for (std::size_t c = 0; c < d; ++c) acc[c] += g[c];
        ++count;
    });
    for (auto& v : acc) v /= static_cast<double>(count);
    return acc;
}

}  // namespace boedflows
