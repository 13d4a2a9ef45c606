#pragma once

#include "boedflows/eig.hpp"

#include <functional>
#include <span>
#include <vector>

namespace boedflows {

/// Discrete measure on a strictly increasing 1D grid. `prob` sums to one;
/// each atom carries its trapezoidal cell mass.
struct GridDensity {
    std::vector<double> grid;
    std::vector<double> log_weights;  // unnormalised, including quadrature weights
    std::vector<double> prob;

    static GridDensity from_log_weights(std::vector<double> grid, std::vector<double> log_weights);
    double mean() const;
    double cdf(double x) const;
    double sample(Stream& s) const;
};

/// Trapezoidal weights for a strictly increasing grid.
std::vector<double> trapezoid_weights(std::span<const double> grid);

/// p_k proportional to exp(u_k / lambda) rho_k, normalised by trapezoidal quadrature.
GridDensity gibbs_density_1d(std::span<const double> grid, std::span<const double> utility,
                             std::span<const double> ref_density, double lambda);

/// W1 between the empirical measure of `samples` and `density`.
double wasserstein1_1d(std::span<const double> samples, const GridDensity& density);
/// W1 between two empirical measures.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

using ScalarField = std::function<double(std::span<const double>)>;

/// Central differences, one coordinate at a time.
std::vector<double> fd_gradient(const ScalarField& f, std::span<const double> x, double h);

/// Exact average of the slot-0 gradient over all (m-1)-tuples of partners
/// drawn with replacement from the ensemble, with particle i in slot 0.
std::vector<double> enumerate_iid_drift(const ParticleEnsemble& ens, std::size_t i, std::size_t m,
                                        const UtilityOracle& oracle);

/// Same for the mean-field drift of coordinate b: partners range over the
/// product of the other coordinates' ensembles.
std::vector<double> enumerate_mf_drift(const std::vector<ParticleEnsemble>& marginals, std::size_t b,
                                       std::size_t i, const UtilityOracle& oracle);

/// Free energy -E[u] + lambda KL(mu | rho) of a 1D sample, with mu
/// replaced by a Gaussian KDE evaluated on the grid. Coarse; used to check
/// descent along a flow, not to report values.
double kde_free_energy(std::span<const double> samples, std::span<const double> grid,
                       std::span<const double> utility, std::span<const double> ref_density, double lambda,
                       double bandwidth);

/// Largest number of tuples the enumerators will visit.
inline constexpr std::size_t kMaxEnumeratedTuples = 100000;

}  // namespace boedflows
