#pragma once

#include "boedflows/config.hpp"
#include "boedflows/eig.hpp"

#include <string>
#include <vector>

namespace boedflows {

struct GpConfig {
    std::size_t n_starts = 2;
    std::size_t r_train = 20;
    double lengthscale = 2.0;
    std::size_t grid = 200;
    double jitter = 1e-6;
};

struct SmcConfig {
    std::size_t n_particles = 20;
    std::size_t n_temps = 20;
    double ess_threshold = 0.7;
    double scale = 0.5;
};

struct AdamConfig {
    double gamma = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t n_restarts = 1;
};

struct BaselineConfig {
    std::string method = "uniform";
    /// n_random (DRS), n_sweeps (CE), n_steps (SGA) or n_mcmc (SMC).
    std::size_t budget = 0;
    double r_max = 2.5;
    std::size_t grid_size = 500;
    GpConfig gp;
    SmcConfig smc;
    AdamConfig adam;
    double lambda = 0.05;  // SMC ladder end point is m / lambda
    std::size_t keep_candidates = 500;

    /// Default budget per method when `budget` is 0.
    std::size_t effective_budget() const;
    static BaselineConfig from_config(const KeyValueConfig& cfg, const std::string& method);
};

struct BaselineResult {
    DesignBatch design;
    std::vector<DesignBatch> candidates;  // for best-of-n extraction
    std::vector<double> scores;           // low-fidelity scores in evaluation order
    std::vector<double> accepted_scores;  // CE / GP-G: score after each accepted move
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::vector<double> final_weights;    // SMC: normalised weights of `candidates`
    std::size_t resample_events = 0;      // SMC
    std::size_t jitter_events = 0;        // CE-GP
};

/// t_j = j T / (m + 1) for ordered designs; evenly spaced on other domains.
DesignBatch design_uniform(std::size_t m, const ConstraintSpec& c);

double sigmoid(double z);
/// t_j = t0 r^j for j = 0..m-1, then repaired.
DesignBatch geometric_schedule(std::size_t m, const ConstraintSpec& c, double t0, double r);
/// t_j = T F^{-1}(j / (m + 1); a1, a2), then repaired.
DesignBatch beta_schedule(std::size_t m, const ConstraintSpec& c, double a1, double a2);

BaselineResult design_geometric_drs(std::size_t m, const ConstraintSpec& c, std::size_t n_random,
                                    const UtilityOracle& oracle, std::uint64_t seed, double r_max = 2.5);
BaselineResult design_beta_drs(std::size_t m, const ConstraintSpec& c, std::size_t n_random,
                               const UtilityOracle& oracle, std::uint64_t seed);

/// Coordinate exchange over a feasible grid, starting from `init`.
BaselineResult design_ce_grid(const DesignBatch& init, const UtilityOracle& oracle,
                              std::size_t n_sweeps, std::size_t grid_size);

/// Squared-exponential GP regression in one dimension.
class Gp1d {
public:
    Gp1d(std::vector<double> x, std::vector<double> y, double lengthscale, double signal_var,
         double noise_var, double jitter = 1e-6);
    double mean(double x) const;
    bool jittered() const { return jittered_; }

private:
    std::vector<double> x_, alpha_;
    double ls_, sv_, y_mean_;
    bool jittered_ = false;
};

BaselineResult design_ce_gp(const DesignBatch& init, const UtilityOracle& oracle, std::size_t n_sweeps,
                            const GpConfig& gp, bool greedy, std::uint64_t seed);

BaselineResult design_sga_adam(const DesignBatch& init, const UtilityOracle& oracle, std::size_t n_steps,
                               const AdamConfig& adam, std::uint64_t seed,
                               std::size_t keep_candidates = 500);

double effective_sample_size(std::span<const double> weights);

BaselineResult design_annealed_smc(std::size_t m, const ConstraintSpec& c, std::size_t d,
                                   const UtilityOracle& oracle, std::size_t n_mcmc,
                                   const SmcConfig& smc, double lambda, std::uint64_t seed);

/// Plain gradient ascent with projection; used as the pointwise comparator.
DesignBatch gradient_ascent(DesignBatch init, const UtilityOracle& oracle, std::size_t n_steps,
                            double step_size);

/// Best single design on a uniform grid over the per-point domain, repeated m times.
DesignBatch repeat_best_single(const UtilityOracle& single_oracle, std::size_t m,
                               const ConstraintSpec& c, std::size_t grid = 4000);

/// A feasible random batch (uniform per point, repaired when ordered).
DesignBatch random_feasible_batch(std::size_t m, std::size_t d, const ConstraintSpec& c, Stream& s);

/// Dispatch by method name. CE, GP and SGA start from a random feasible batch.
BaselineResult run_baseline(const BaselineConfig& cfg, std::size_t m, std::size_t d,
                            const ConstraintSpec& c, const UtilityOracle& oracle, std::uint64_t seed);

}  // namespace boedflows
