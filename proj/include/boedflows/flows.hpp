#pragma once

#include "boedflows/config.hpp"
#include "boedflows/eig.hpp"

#include <string>
#include <vector>

namespace boedflows {

/// Reference measure rho. Uniform contributes no drift; Gaussian has score
/// -(xi - mean) / sigma^2.
struct ReferenceMeasure {
    enum class Kind { Uniform, Gaussian };
    Kind kind = Kind::Uniform;
    std::vector<double> mean;  // length d (a single entry is broadcast)
    double sigma = 1.0;

    static ReferenceMeasure uniform() { return {}; }
    static ReferenceMeasure gaussian(std::vector<double> mean, double sigma);

    /// Adds scale * grad log rho(x) to out.
    void add_score(std::span<const double> x, std::span<double> out, double scale = 1.0) const;
    double log_density(std::span<const double> x) const;  // unnormalised
};

/// Inverse quadratic repulsion r(z) = 1 / (|z|^2 + delta^2), with z taken as
/// the wrapped difference on the torus.
struct RepulsionSpec {
    double eta = 0.0;
    double delta = 1.0;
    double potential(std::span<const double> z) const;
    void gradient(std::span<const double> z, std::span<double> out) const;
};

/// Initial law of the particles or chains.
struct InitSpec {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    std::vector<double> lo, hi;  // Uniform: empty means the constraint's bounds
    std::vector<double> mean;    // Normal
    double sd = 1.0;

    static InitSpec uniform_on_constraint() { return {}; }
    static InitSpec uniform_box(std::vector<double> lo, std::vector<double> hi);
    static InitSpec normal(std::vector<double> mean, double sd);
};

struct FlowState {
    Algorithm algorithm = Algorithm::Iid;
    std::size_t m = 1;
    std::size_t d = 1;
    std::size_t step = 0;
    ConstraintSpec constraint;               // batch constraint
    std::vector<DesignBatch> chains;         // Joint: R chains in Xi^m
    std::vector<ParticleEnsemble> marginals; // MF / MfSub: m ensembles
    ParticleEnsemble ensemble;               // Iid / IidRep

    bool operator==(const FlowState&) const = default;
};

/// Draws the initial state. Joint gets N chains, MF gets N particles per
/// coordinate, Iid gets N particles. Constraints are applied at the end.
FlowState init_flow(const FlowConfig& cfg, std::size_t d, const ConstraintSpec& constraint,
                    const InitSpec& init);

/// Utility plus reference measure shared by all steppers.
struct FlowProblem {
    const UtilityOracle& oracle;
    ReferenceMeasure ref;
};

/// Tuple-subsampled estimate of grad Phi_m at particle i (not multiplied by
/// m): the mean of slot-0 gradients over K tuples drawn from Unif([N]^{m-1}).
std::vector<double> iid_drift(const ParticleEnsemble& ens, std::size_t i, const FlowConfig& cfg,
                              const UtilityOracle& oracle, std::size_t step);

/// Coordinate-b drift for WGF(MF): partners are one uniform particle from
/// each other coordinate's ensemble; returns the mean slot-b gradient.
std::vector<double> mf_drift(const std::vector<ParticleEnsemble>& marginals, std::size_t b,
                             std::size_t i, const FlowConfig& cfg, const UtilityOracle& oracle,
                             std::size_t step);

/// Repulsion drift estimate: mean of grad r(xi_i - xi_J) over K_rep indices.
std::vector<double> repulsion_drift(const ParticleEnsemble& ens, std::size_t i,
                                    const FlowConfig& cfg, std::size_t step);

void step_joint(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem);
/// `subsample` is the fraction of coordinates updated (1 for plain MF).
void step_mf(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem, double subsample);
/// `eta` = 0 gives WGF(MF-IID); eta > 0 adds the repulsive drift.
void step_iid(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem, double eta);
/// Dispatches on cfg.algorithm.
void step_flow(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem);

struct TrajectoryRow {
    std::size_t step = 0;
    std::string algorithm;
    double probe_eig = 0.0;
    std::vector<double> mean_coords;
    double wallclock_ms = 0.0;
};

struct FlowRunOptions {
    /// Fraction of the run discarded before Joint tail snapshots are kept.
    double burn_fraction = 0.8;
    /// Upper bound on the number of stored Joint tail snapshots.
    std::size_t tail_capacity = 2000;
    /// Oracle used for probe logging; defaults to the flow's own oracle.
    const UtilityOracle* probe_oracle = nullptr;
    bool log = true;  // record trajectory rows
};

struct FlowResult {
    FlowState state;
    std::vector<TrajectoryRow> trajectory;
    std::vector<DesignBatch> tail;  // Joint only
};

/// Runs cfg.n_steps steps from `initial`. Deterministic in cfg.seed.
/// Step failures are rethrown as FlowError carrying the step index.
FlowResult run_flow(const FlowConfig& cfg, const FlowProblem& problem, FlowState initial,
                    const FlowRunOptions& options = {});

/// Probe batch following the extraction conventions: best chain for Joint,
/// one particle per coordinate for MF, m iid particles for Iid.
DesignBatch probe_batch(const FlowState& state, const UtilityOracle& oracle, Stream& s);

/// Mean coordinates logged in the trajectory (marginal means for MF and Joint).
std::vector<double> state_mean(const FlowState& state);

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);

}  // namespace boedflows
