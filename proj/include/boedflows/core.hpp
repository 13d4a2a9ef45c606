#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace boedflows {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

/// 64-bit mixer used for stream keys.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based generator: the state is a 64-bit key advanced by the golden
/// ratio increment and finalised with mix64 (splitmix64). Constructing one is
/// free, so every (particle, step, purpose) gets its own stream. Satisfies
/// UniformRandomBitGenerator, so the <random> distributions apply.
class Stream {
public:
    using result_type = std::uint64_t;
    Stream() = default;
    explicit Stream(std::uint64_t key) : state_(key) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    void discard(std::uint64_t n) { state_ += n * 0x9e3779b97f4a7c15ULL; }
    bool operator==(const Stream&) const = default;

private:
    std::uint64_t state_ = 0;
};

/// Stream purposes. Two purposes never share a stream even for identical ids.
enum class Purpose : std::uint64_t {
    Init = 1,
    Noise,
    Tuples,
    Repulsion,
    Subsample,
    Oracle,
    FrozenOracle,
    Prior,
    Extraction,
    Baseline,
    Scoring,
    Verification,
};

/// Counter-based stream derivation: the engine is seeded from a hash of
/// (seed, particle, step, purpose, index), so any particle update can be
/// reproduced without replaying the others.
Stream rng_substream(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                     Purpose purpose, std::uint64_t index = 0);

inline double uniform(Stream& s, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(s);
}

inline double standard_normal(Stream& s) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(s);
}

inline std::size_t uniform_index(Stream& s, std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(s);
}

// ---------------------------------------------------------------------------
// Designs and constraints
// ---------------------------------------------------------------------------

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using DesignPoint = std::vector<double>;

enum class ConstraintKind { Unconstrained, Box, Torus, OrderedMinGap };

struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::Unconstrained;
    std::vector<double> lo;  // Box only
    std::vector<double> hi;  // Box only
    double min_gap = 0.0;    // OrderedMinGap only
    double t_max = 0.0;      // OrderedMinGap only

    static ConstraintSpec unconstrained() { return {}; }
    static ConstraintSpec box(std::vector<double> lo, std::vector<double> hi);
    static ConstraintSpec torus() { return {ConstraintKind::Torus, {}, {}, 0.0, 0.0}; }
    static ConstraintSpec ordered_min_gap(double min_gap, double t_max);

    /// Throws ConfigError on malformed parameters (lo >= hi, non-positive gap).
    void validate() const;
    /// Throws ConfigError if m points cannot satisfy the min-gap rule.
    void validate_batch_size(std::size_t m) const;

    /// Constraint each individual particle obeys. OrderedMinGap becomes the
    /// interval [0, t_max]; the ordering only binds whole batches.
    ConstraintSpec per_point() const;

    bool operator==(const ConstraintSpec&) const = default;
};

std::string to_string(ConstraintKind kind);

/// An ordered tuple of m design points in R^d, stored row-major.
class DesignBatch {
public:
    DesignBatch() = default;
    DesignBatch(std::size_t m, std::size_t d, ConstraintSpec constraint = {});
    DesignBatch(std::vector<double> coords, std::size_t d, ConstraintSpec constraint = {});

    std::size_t size() const { return d_ == 0 ? 0 : coords_.size() / d_; }
    std::size_t dim() const { return d_; }

    std::span<const double> point(std::size_t j) const { return {coords_.data() + j * d_, d_}; }
    std::span<double> point(std::size_t j) { return {coords_.data() + j * d_, d_}; }
    double& operator()(std::size_t j, std::size_t k) { return coords_[j * d_ + k]; }
    double operator()(std::size_t j, std::size_t k) const { return coords_[j * d_ + k]; }

    const std::vector<double>& coords() const { return coords_; }
    std::vector<double>& coords() { return coords_; }
    const ConstraintSpec& constraint() const { return constraint_; }
    void set_constraint(ConstraintSpec c) { constraint_ = std::move(c); }

    bool operator==(const DesignBatch&) const = default;

private:
    std::vector<double> coords_;
    std::size_t d_ = 0;
    ConstraintSpec constraint_;
};

/// N equally weighted particles in R^d; the empirical measure is exactly
/// this multiset.
class ParticleEnsemble {
public:
    ParticleEnsemble() = default;
    ParticleEnsemble(std::size_t n, std::size_t d, ConstraintSpec constraint = {});

    std::size_t size() const { return d_ == 0 ? 0 : coords_.size() / d_; }
    std::size_t dim() const { return d_; }
    std::span<const double> particle(std::size_t i) const { return {coords_.data() + i * d_, d_}; }
    std::span<double> particle(std::size_t i) { return {coords_.data() + i * d_, d_}; }

    const std::vector<double>& coords() const { return coords_; }
    std::vector<double>& coords() { return coords_; }
    const ConstraintSpec& constraint() const { return constraint_; }

    /// Mean position, length d (circular mean on the torus).
    std::vector<double> mean() const;

    bool operator==(const ParticleEnsemble&) const = default;

private:
    std::vector<double> coords_;
    std::size_t d_ = 0;
    ConstraintSpec constraint_;
};

/// Maps z to its representative in [-pi, pi).
double wrap_torus(double z);

/// Clip to [0, t_max], sort ascending, enforce the minimum gap with a forward
/// pass, and pull back from t_max with a backward pass when needed.
/// Feasible input is returned unchanged.
DesignBatch repair(const DesignBatch& batch);
void repair_times(std::span<double> times, double min_gap, double t_max);

/// Feasibility check used by repair; allows 1e-9 slack for rounding.
bool is_feasible(const DesignBatch& batch);
bool point_feasible(std::span<const double> x, const ConstraintSpec& c);

/// Projects a single point onto a per-point constraint (clip or wrap).
void project_point(std::span<double> x, const ConstraintSpec& c);

/// Applies the batch constraint: clip for Box, wrap for Torus, repair for
/// OrderedMinGap.
void apply_constraint(DesignBatch& batch);

/// Shortest signed difference a - b under the constraint's metric.
double coordinate_difference(double a, double b, const ConstraintSpec& c);

}  // namespace boedflows
