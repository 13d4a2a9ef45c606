#pragma once

#include "boedflows/config.hpp"
#include "boedflows/core.hpp"

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace boedflows {

inline constexpr std::size_t kMaxDesignDim = 2;

/// Mean and variance of a scalar Gaussian observation, with their
/// derivatives in the design coordinates.
struct ObsMoments {
    double mean = 0.0;
    double var = 1.0;
    std::array<double, kMaxDesignDim> dmean{};
    std::array<double, kMaxDesignDim> dvar{};
};

/// Bayesian model with scalar, conditionally Gaussian observations
/// y | theta, xi ~ N(mean(theta, xi), var(theta, xi)).
class Model {
public:
    virtual ~Model() = default;

    virtual std::string name() const = 0;
    virtual std::size_t design_dim() const = 0;
    virtual std::size_t param_dim() const = 0;
    std::size_t obs_dim() const { return 1; }
    virtual ConstraintSpec constraint() const = 0;

    virtual void sample_prior(Stream& s, std::span<double> theta) const = 0;
    virtual ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const = 0;

    std::vector<double> sample_prior(Stream& s) const;
    double sample_obs(std::span<const double> theta, std::span<const double> xi, Stream& s) const;
    double loglik(double y, std::span<const double> theta, std::span<const double> xi) const;
    /// d loglik / d xi with y held fixed.
    std::vector<double> grad_loglik_xi(double y, std::span<const double> theta,
                                       std::span<const double> xi) const;
};

using ModelPtr = std::shared_ptr<const Model>;

inline double gaussian_logpdf(double y, double mean, double var) {
    const double r = y - mean;
    return -0.5 * (std::log(2.0 * kPi * var) + r * r / var);
}

// ---------------------------------------------------------------------------

struct Toy1DParams {
    std::array<double, 5> amplitudes{0.2, 0.4, 0.8, 1.4, 0.9};
    double sigma_y = 1.5;
    double width = 0.4;  // denominator inside the bump exponent
    double lo = -3.5;
    double hi = 3.5;
};

/// Binary theta in {-1, +1}; y ~ N(theta a(xi), sigma_y^2).
class Toy1DModel final : public Model {
public:
    explicit Toy1DModel(Toy1DParams p = {});
    std::string name() const override { return "toy1d"; }
    std::size_t design_dim() const override { return 1; }
    std::size_t param_dim() const override { return 1; }
    ConstraintSpec constraint() const override;
    using Model::sample_prior;
    void sample_prior(Stream& s, std::span<double> theta) const override;
    ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const override;

    double sensitivity(double xi) const;
    double sensitivity_derivative(double xi) const;
    const Toy1DParams& params() const { return p_; }
    std::array<double, 4> centres() const { return c_; }

private:
    Toy1DParams p_;
    std::array<double, 4> c_{};
};

struct Sensor2DParams {
    double ell = 0.5;
    double sigma_y = 0.1;
    double w = 0.6;
    std::array<double, 2> mu_major{2.2, 0.0};
    std::array<double, 2> mu_minor{-1.5, 0.0};
    double sigma_major = 0.2;
    double sigma_minor = 0.5;
    double box = 5.0;
};

class Sensor2DModel final : public Model {
public:
    explicit Sensor2DModel(Sensor2DParams p = {});
    std::string name() const override { return "sensor2d"; }
    std::size_t design_dim() const override { return 2; }
    std::size_t param_dim() const override { return 2; }
    ConstraintSpec constraint() const override;
    using Model::sample_prior;
    void sample_prior(Stream& s, std::span<double> theta) const override;
    ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const override;
    const Sensor2DParams& params() const { return p_; }

private:
    Sensor2DParams p_;
};

struct TorusParams {
    std::array<double, 4> centres{0.0, kPi / 2.0, -kPi / 2.0, kPi};
    std::array<double, 5> amplitudes{0.4, 2.0, 1.9, 1.6, 1.0};
    double ell0 = 0.3;
    double sigma_y = 0.35;
};

/// Linear Gaussian model on the circle: y_j ~ N(h(xi_j)^T theta, sigma_y^2),
/// theta ~ N(0, I_2).
class TorusLinearModel final : public Model {
public:
    explicit TorusLinearModel(TorusParams p = {});
    std::string name() const override { return "torus"; }
    std::size_t design_dim() const override { return 1; }
    std::size_t param_dim() const override { return 2; }
    ConstraintSpec constraint() const override { return ConstraintSpec::torus(); }
    using Model::sample_prior;
    void sample_prior(Stream& s, std::span<double> theta) const override;
    ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const override;

    double sensitivity(double xi) const;
    double sensitivity_derivative(double xi) const;
    std::array<double, 2> h(double xi) const;
    std::array<double, 2> h_derivative(double xi) const;
    const TorusParams& params() const { return p_; }

private:
    TorusParams p_;
};

struct PkParams {
    double sigma2 = 0.1;
    std::array<double, 3> mu_log{-2.302585092994046, 0.0, 2.995732273553991};
    double sigma2_log = 0.05;
    double t_max = 24.0;
    double min_gap = 0.25;
};

class PkModel final : public Model {
public:
    explicit PkModel(PkParams p = {});
    std::string name() const override { return "pk"; }
    std::size_t design_dim() const override { return 1; }
    std::size_t param_dim() const override { return 3; }
    ConstraintSpec constraint() const override;
    using Model::sample_prior;
    void sample_prior(Stream& s, std::span<double> theta) const override;
    ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const override;

    static double scale(std::span<const double> theta);
    const PkParams& params() const { return p_; }

private:
    PkParams p_;
};

struct FhnParams {
    double t_max = 20.0;
    double min_gap = 0.25;
    double grid_step = 0.01;
    std::size_t n_param_draws = 2048;
    std::uint64_t cache_seed = 0;
    double rk4_tolerance = 1e-6;  // allowed max |u1(h) - u1(h/2)| on the grid
};

/// Dense RK4 trajectory of u1 on [0, t_max] with n_steps uniform steps.
std::vector<double> fhn_rk4_trajectory(double theta1, double theta2, double theta3, double t_max,
                                       std::size_t n_steps);

/// FitzHugh-Nagumo voltage observations. theta = (theta1, theta2, theta3,
/// sigma, slot) where slot indexes the pre-built trajectory cache; the prior
/// is realised as the cached pool of parameter draws.
class FhnModel final : public Model {
public:
    explicit FhnModel(FhnParams p = {});
    std::string name() const override { return "fhn"; }
    std::size_t design_dim() const override { return 1; }
    std::size_t param_dim() const override { return 5; }
    ConstraintSpec constraint() const override;
    using Model::sample_prior;
    void sample_prior(Stream& s, std::span<double> theta) const override;
    ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const override;

    std::size_t cache_size() const { return params_.size() / 4; }
    std::size_t grid_nodes() const { return n_nodes_; }
    double grid_step() const { return h_; }
    /// Parameter draw stored in cache slot k, with the slot appended.
    std::vector<double> cached_theta(std::size_t k) const;
    /// Linear interpolant of u1 and its slope (right-segment at nodes).
    std::pair<double, double> voltage(std::size_t slot, double t) const;
    const FhnParams& params() const { return p_; }

private:
    FhnParams p_;
    double h_ = 0.0;
    std::size_t n_nodes_ = 0;
    std::vector<double> params_;  // 4 per draw
    std::vector<double> u1_;      // n_nodes_ per draw
};

/// Likelihood that ignores theta; the EIG is exactly zero.
class NullModel final : public Model {
public:
    std::string name() const override { return "null"; }
    std::size_t design_dim() const override { return 1; }
    std::size_t param_dim() const override { return 1; }
    ConstraintSpec constraint() const override { return ConstraintSpec::box({-3.0}, {3.0}); }
    using Model::sample_prior;
    void sample_prior(Stream& s, std::span<double> theta) const override;
    ObsMoments moments(std::span<const double> theta, std::span<const double> xi) const override;
};

// ---------------------------------------------------------------------------

struct JointDraw {
    std::vector<double> theta;
    std::vector<double> y;
};

JointDraw simulate_joint(const Model& model, const DesignBatch& batch, Stream& s);

/// Sum of per-point log-likelihoods. Throws ModelError naming the offending
/// point if any term is not finite.
double batch_loglik(const Model& model, std::span<const double> y, std::span<const double> theta,
                    const DesignBatch& batch);

/// Builds a model by name, applying `<name>.<key>` overrides from the config.
ModelPtr make_model(const std::string& name, const KeyValueConfig& cfg = {});

}  // namespace boedflows
