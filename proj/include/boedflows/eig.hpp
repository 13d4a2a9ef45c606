#pragma once

#include "boedflows/config.hpp"
#include "boedflows/models.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <optional>

namespace boedflows {

enum class EstimateKind { Nmc, Exact, Quadrature };

struct EigEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_outer = 0;
    std::size_t n_inner = 0;
    EstimateKind kind = EstimateKind::Nmc;
    GradientRandomness mode = GradientRandomness::Frozen;
};

/// Identifies one oracle call inside a run; Fresh oracles derive their draws
/// from it, exact and frozen oracles ignore it.
struct OracleCall {
    std::uint64_t step = 0;
    std::uint64_t particle = 0;
    std::uint64_t draw = 0;
};

/// Utility G(xi_{1:m}) and its design gradient.
class UtilityOracle {
public:
    virtual ~UtilityOracle() = default;

    virtual std::size_t design_dim() const = 0;
    /// Batch size the oracle is bound to, if any (Frozen NMC fixes m).
    virtual std::optional<std::size_t> batch_size() const { return std::nullopt; }

    virtual EigEstimate estimate(const DesignBatch& batch, OracleCall call = {}) const = 0;
    double value(const DesignBatch& batch, OracleCall call = {}) const {
        return estimate(batch, call).value;
    }
    /// Full gradient, length m*d, row-major like DesignBatch::coords().
    virtual std::vector<double> gradient(const DesignBatch& batch, OracleCall call = {}) const = 0;
    /// Gradient with respect to the point in `slot` only, length d.
    virtual std::vector<double> slot_gradient(const DesignBatch& batch, std::size_t slot,
                                              OracleCall call = {}) const;
};

using OraclePtr = std::shared_ptr<const UtilityOracle>;

// ---------------------------------------------------------------------------

/// Nested Monte Carlo EIG with gradients taken through the estimator:
/// observations are reparameterised y = mean + sqrt(var) * eps and the inner
/// log-mean-exp contributes softmax-weighted likelihood gradients.
class NmcOracle final : public UtilityOracle {
public:
    /// Frozen mode draws every sample once here and needs the batch size m.
    NmcOracle(ModelPtr model, std::size_t n_outer, std::size_t n_inner, GradientRandomness mode,
              std::uint64_t seed, std::size_t m);

    std::size_t design_dim() const override { return model_->design_dim(); }
    std::optional<std::size_t> batch_size() const override;
    EigEstimate estimate(const DesignBatch& batch, OracleCall call = {}) const override;
    std::vector<double> gradient(const DesignBatch& batch, OracleCall call = {}) const override;
    std::vector<double> slot_gradient(const DesignBatch& batch, std::size_t slot,
                                      OracleCall call = {}) const override;

    const Model& model() const { return *model_; }
    /// Number of inner terms dropped because their log-likelihood was -inf.
    std::size_t dropped_inner_terms() const { return dropped_.load(); }

private:
    struct Draws {
        std::vector<double> theta_outer;  // O x p
        std::vector<double> eps;          // O x m
        std::vector<double> theta_inner;  // I x p
    };
    Draws make_draws(Stream& s, std::size_t m) const;
    const Draws& draws_for(const DesignBatch& batch, OracleCall call, Draws& scratch) const;
    /// Evaluates the estimator and, when grad is non-null, its gradient with
    /// respect to the points listed in `slots`.
    EigEstimate evaluate(const DesignBatch& batch, const Draws& dr,
                         std::span<const std::size_t> slots, std::vector<double>* grad) const;

    ModelPtr model_;
    std::size_t n_outer_, n_inner_;
    GradientRandomness mode_;
    std::uint64_t seed_;
    std::size_t m_;
    Draws frozen_;
    mutable std::atomic<std::size_t> dropped_{0};
};

/// Closed-form EIG of the torus linear-Gaussian model.
class TorusExactOracle final : public UtilityOracle {
public:
    explicit TorusExactOracle(std::shared_ptr<const TorusLinearModel> model);
    std::size_t design_dim() const override { return 1; }
    EigEstimate estimate(const DesignBatch& batch, OracleCall call = {}) const override;
    std::vector<double> gradient(const DesignBatch& batch, OracleCall call = {}) const override;
    std::vector<double> slot_gradient(const DesignBatch& batch, std::size_t slot,
                                      OracleCall call = {}) const override;

private:
    std::shared_ptr<const TorusLinearModel> model_;
};

/// Quadrature EIG landscape of the m = 1 toy model on a uniform grid, with a
/// finite-difference gradient on the same grid; both linearly interpolated.
class Toy1DLandscapeOracle final : public UtilityOracle {
public:
    Toy1DLandscapeOracle(std::shared_ptr<const Toy1DModel> model, std::size_t grid_points = 2001,
                         std::size_t n_nodes = 200);
    std::size_t design_dim() const override { return 1; }
    std::optional<std::size_t> batch_size() const override { return 1; }
    EigEstimate estimate(const DesignBatch& batch, OracleCall call = {}) const override;
    std::vector<double> gradient(const DesignBatch& batch, OracleCall call = {}) const override;

    double eig_at(double xi) const;
    double grad_at(double xi) const;
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    /// Grid point with the largest EIG (lowest index on ties).
    double argmax() const;

private:
    double interpolate(const std::vector<double>& v, double xi) const;
    std::vector<double> grid_, values_, grads_;
    double lo_, hi_, h_;
};

/// Wraps arbitrary callables, used for surrogate utilities in tests.
class FunctionOracle final : public UtilityOracle {
public:
    using ValueFn = std::function<double(const DesignBatch&)>;
    using GradFn = std::function<std::vector<double>(const DesignBatch&)>;
    FunctionOracle(std::size_t d, ValueFn value, GradFn grad = {});
    std::size_t design_dim() const override { return d_; }
    EigEstimate estimate(const DesignBatch& batch, OracleCall call = {}) const override;
    std::vector<double> gradient(const DesignBatch& batch, OracleCall call = {}) const override;

private:
    std::size_t d_;
    ValueFn value_;
    GradFn grad_;
};

// ---------------------------------------------------------------------------

double eig_exact_torus(const TorusLinearModel& model, const DesignBatch& batch);
std::vector<double> grad_eig_exact_torus(const TorusLinearModel& model, const DesignBatch& batch);

/// One-shot NMC estimate; draws are derived from `seed` in either mode.
EigEstimate eig_nmc(ModelPtr model, const DesignBatch& batch, std::size_t n_outer,
                    std::size_t n_inner, std::uint64_t seed,
                    GradientRandomness mode = GradientRandomness::Frozen);

/// Mean of `replications` independent NMC estimates; the standard error is
/// the spread of the replicate values divided by sqrt(replications).
EigEstimate eig_nmc_replicated(ModelPtr model, const DesignBatch& batch, std::size_t n_outer,
                               std::size_t n_inner, std::uint64_t seed, std::size_t replications);

/// Probabilists' Gauss-Hermite rule (weight exp(-z^2/2)), weights sum to 1.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermite gauss_hermite(std::size_t n_nodes);

/// EIG of the binary-theta toy model at a single design by Gauss-Hermite
/// quadrature over y.
double eig_quadrature_1d(const Toy1DModel& model, double xi, std::size_t n_nodes = 200);
double eig_quadrature_1d(const Toy1DModel& model, double xi, const GaussHermite& rule);

/// Picks an oracle for a model: exact for the torus when `exact` is set,
/// quadrature landscape for the m = 1 toy when `exact` is set, NMC otherwise.
OraclePtr make_oracle(ModelPtr model, std::size_t m, std::size_t n_outer, std::size_t n_inner,
                      GradientRandomness mode, std::uint64_t seed, bool exact);

}  // namespace boedflows
