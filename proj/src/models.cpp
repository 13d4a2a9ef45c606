#include "boedflows/models.hpp"

#include <algorithm>
#include <sstream>

namespace boedflows {

std::vector<double> Model::sample_prior(Stream& s) const {
    std::vector<double> theta(param_dim());
    sample_prior(s, theta);
    return theta;
}

double Model::sample_obs(std::span<const double> theta, std::span<const double> xi,
                         Stream& s) const {
    auto mo = moments(theta, xi);
    return mo.mean + std::sqrt(mo.var) * standard_normal(s);
}

double Model::loglik(double y, std::span<const double> theta, std::span<const double> xi) const {
    auto mo = moments(theta, xi);
    return gaussian_logpdf(y, mo.mean, mo.var);
}

std::vector<double> Model::grad_loglik_xi(double y, std::span<const double> theta,
                                          std::span<const double> xi) const {
    auto mo = moments(theta, xi);
    const double r = y - mo.mean;
    const double iv = 1.0 / mo.var;
    std::vector<double> g(design_dim());
    for (std::size_t k = 0; k < g.size(); ++k)
        g[k] = r * iv * mo.dmean[k] + 0.5 * (r * r * iv * iv - iv) * mo.dvar[k];
    return g;
}

// ---------------------------------------------------------------------------
// Toy 1D

Toy1DModel::Toy1DModel(Toy1DParams p) : p_(p) {
    if (!(p_.sigma_y > 0.0)) throw ConfigError("toy1d.sigma_y must be > 0");
    if (!(p_.width > 0.0)) throw ConfigError("toy1d.width must be > 0");
    if (!(p_.lo < p_.hi)) throw ConfigError("toy1d: lo must be < hi");
    for (std::size_t i = 0; i < 4; ++i)
        c_[i] = p_.lo + (p_.hi - p_.lo) * static_cast<double>(i) / 3.0;
}

ConstraintSpec Toy1DModel::constraint() const { return ConstraintSpec::box({p_.lo}, {p_.hi}); }

void Toy1DModel::sample_prior(Stream& s, std::span<double> theta) const {
    theta[0] = (s() >> 63) ? 1.0 : -1.0;
}

double Toy1DModel::sensitivity(double xi) const {
    double a = p_.amplitudes[0];
    for (std::size_t i = 0; i < 4; ++i) {
        const double z = xi - c_[i];
        a += p_.amplitudes[i + 1] * std::exp(-z * z / p_.width);
    }
    return a;
}

double Toy1DModel::sensitivity_derivative(double xi) const {
    double da = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double z = xi - c_[i];
        da += p_.amplitudes[i + 1] * std::exp(-z * z / p_.width) * (-2.0 * z / p_.width);
    }
    return da;
}

ObsMoments Toy1DModel::moments(std::span<const double> theta, std::span<const double> xi) const {
    ObsMoments mo;
    mo.mean = theta[0] * sensitivity(xi[0]);
    mo.var = p_.sigma_y * p_.sigma_y;
    mo.dmean[0] = theta[0] * sensitivity_derivative(xi[0]);
    return mo;
}

// ---------------------------------------------------------------------------
// Sensor 2D

Sensor2DModel::Sensor2DModel(Sensor2DParams p) : p_(p) {
    if (!(p_.ell > 0.0) || !(p_.sigma_y > 0.0)) throw ConfigError("sensor2d: ell, sigma_y must be > 0");
    if (!(p_.w >= 0.0 && p_.w <= 1.0)) throw ConfigError("sensor2d.w must lie in [0, 1]");
}

ConstraintSpec Sensor2DModel::constraint() const {
    return ConstraintSpec::box({-p_.box, -p_.box}, {p_.box, p_.box});
}

void Sensor2DModel::sample_prior(Stream& s, std::span<double> theta) const {
    const bool major = uniform(s) < p_.w;
    const auto& mu = major ? p_.mu_major : p_.mu_minor;
    const double sd = major ? p_.sigma_major : p_.sigma_minor;
    theta[0] = mu[0] + sd * standard_normal(s);
    theta[1] = mu[1] + sd * standard_normal(s);
}

ObsMoments Sensor2DModel::moments(std::span<const double> theta, std::span<const double> xi) const {
    const double dx = theta[0] - xi[0], dy = theta[1] - xi[1];
    const double l2 = p_.ell * p_.ell;
    const double f = std::exp(-(dx * dx + dy * dy) / (2.0 * l2));
    ObsMoments mo;
    mo.mean = f;
    mo.var = p_.sigma_y * p_.sigma_y;
    mo.dmean[0] = f * dx / l2;
    mo.dmean[1] = f * dy / l2;
    return mo;
}

// ---------------------------------------------------------------------------
// Torus

TorusLinearModel::TorusLinearModel(TorusParams p) : p_(p) {
    if (!(p_.ell0 > 0.0) || !(p_.sigma_y > 0.0)) throw ConfigError("torus: ell0, sigma_y must be > 0");
}

void TorusLinearModel::sample_prior(Stream& s, std::span<double> theta) const {
    theta[0] = standard_normal(s);
    theta[1] = standard_normal(s);
}

double TorusLinearModel::sensitivity(double xi) const {
    double a = p_.amplitudes[0];
    for (std::size_t k = 0; k < 4; ++k) {
        const double z = wrap_torus(xi - p_.centres[k]) / p_.ell0;
        a += p_.amplitudes[k + 1] * std::exp(-0.5 * z * z);
    }
    return a;
}

double TorusLinearModel::sensitivity_derivative(double xi) const {
    double da = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double z = wrap_torus(xi - p_.centres[k]);
        const double l2 = p_.ell0 * p_.ell0;
        da += p_.amplitudes[k + 1] * std::exp(-0.5 * z * z / l2) * (-z / l2);
    }
    return da;
}

std::array<double, 2> TorusLinearModel::h(double xi) const {
    const double a = sensitivity(xi);
    return {a * std::cos(xi), a * std::sin(xi)};
}

std::array<double, 2> TorusLinearModel::h_derivative(double xi) const {
    const double a = sensitivity(xi), da = sensitivity_derivative(xi);
    const double c = std::cos(xi), s = std::sin(xi);
    return {da * c - a * s, da * s + a * c};
}

ObsMoments TorusLinearModel::moments(std::span<const double> theta,
                                     std::span<const double> xi) const {
    const auto hv = h(xi[0]);
    const auto dh = h_derivative(xi[0]);
    ObsMoments mo;
    mo.mean = hv[0] * theta[0] + hv[1] * theta[1];
    mo.var = p_.sigma_y * p_.sigma_y;
    mo.dmean[0] = dh[0] * theta[0] + dh[1] * theta[1];
    return mo;
}

// ---------------------------------------------------------------------------
// PK

PkModel::PkModel(PkParams p) : p_(p) {
    if (!(p_.sigma2 > 0.0) || !(p_.sigma2_log > 0.0)) throw ConfigError("pk: variances must be > 0");
    ConstraintSpec::ordered_min_gap(p_.min_gap, p_.t_max);
}

ConstraintSpec PkModel::constraint() const {
    return ConstraintSpec::ordered_min_gap(p_.min_gap, p_.t_max);
}

void PkModel::sample_prior(Stream& s, std::span<double> theta) const {
    const double sd = std::sqrt(p_.sigma2_log);
    do {
        for (std::size_t k = 0; k < 3; ++k) theta[k] = std::exp(p_.mu_log[k] + sd * standard_normal(s));
    } while (std::abs(theta[1] - theta[0]) < 1e-12);
}

double PkModel::scale(std::span<const double> theta) {
    return 400.0 * theta[1] / (theta[2] * (theta[1] - theta[0]));
}

ObsMoments PkModel::moments(std::span<const double> theta, std::span<const double> xi) const {
    const double t = xi[0];
    const double e1 = std::exp(-theta[0] * t), e2 = std::exp(-theta[1] * t);
    const double g = e1 - e2;
    const double dg = -theta[0] * e1 + theta[1] * e2;
    const double a = scale(theta);
    ObsMoments mo;
    mo.mean = a * g;
    mo.dmean[0] = a * dg;
    const double c = a * a / 10.0;
    mo.var = p_.sigma2 * (1.0 + c * g * g);
    mo.dvar[0] = p_.sigma2 * c * 2.0 * g * dg;
    return mo;
}

// ---------------------------------------------------------------------------
// FitzHugh-Nagumo

namespace {

struct FhnRhs {
    double th1, th2, th3;
    void operator()(double u1, double u2, double& d1, double& d2) const {
        d1 = th3 * (u1 - u1 * u1 * u1 / 3.0 + u2);
        d2 = -(u1 - th1 + th2 * u2) / th3;
    }
};

}  // namespace

std::vector<double> fhn_rk4_trajectory(double theta1, double theta2, double theta3, double t_max,
                                       std::size_t n_steps) {
    if (n_steps == 0) throw ConfigError("fhn: grid needs at least one step");
    const FhnRhs f{theta1, theta2, theta3};
    const double h = t_max / static_cast<double>(n_steps);
    std::vector<double> out(n_steps + 1);
    double u1 = -1.0, u2 = 1.0;
    out[0] = u1;
    for (std::size_t n = 0; n < n_steps; ++n) {
        double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
        f(u1, u2, k1a, k1b);
        f(u1 + 0.5 * h * k1a, u2 + 0.5 * h * k1b, k2a, k2b);
        f(u1 + 0.5 * h * k2a, u2 + 0.5 * h * k2b, k3a, k3b);
        f(u1 + h * k3a, u2 + h * k3b, k4a, k4b);
        u1 += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        u2 += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        out[n + 1] = u1;
    }
    return out;
}

FhnModel::FhnModel(FhnParams p) : p_(p) {
    if (!(p_.grid_step > 0.0)) throw ConfigError("fhn.grid_step must be > 0");
    if (p_.n_param_draws == 0) throw ConfigError("fhn.n_param_draws must be >= 1");
    const auto n_steps = static_cast<std::size_t>(std::llround(p_.t_max / p_.grid_step));
    if (n_steps == 0) throw ConfigError("fhn: grid_step larger than t_max");
    h_ = p_.t_max / static_cast<double>(n_steps);
    n_nodes_ = n_steps + 1;
    params_.resize(4 * p_.n_param_draws);
    u1_.resize(n_nodes_ * p_.n_param_draws);
    for (std::size_t k = 0; k < p_.n_param_draws; ++k) {
        Stream s = rng_substream(p_.cache_seed, k, 0, Purpose::Prior);
        double* th = &params_[4 * k];
        th[0] = uniform(s, 0.0, 1.0);
        th[1] = uniform(s, 0.0, 1.0);
        th[2] = uniform(s, 1.0, 5.0);
        th[3] = uniform(s, 0.5, 1.0);
        auto traj = fhn_rk4_trajectory(th[0], th[1], th[2], p_.t_max, n_steps);
        for (double v : traj)
            if (!std::isfinite(v)) throw ModelError("fhn: non-finite trajectory in cache slot " + std::to_string(k));
        std::copy(traj.begin(), traj.end(), u1_.begin() + static_cast<std::ptrdiff_t>(k * n_nodes_));
        // halving check on a subset of draws; the stiffest case is theta3 near 5
        if (k < 16) {
            auto fine = fhn_rk4_trajectory(th[0], th[1], th[2], p_.t_max, 2 * n_steps);
            double err = 0.0;
            for (std::size_t n = 0; n < n_nodes_; ++n) err = std::max(err, std::abs(fine[2 * n] - traj[n]));
            if (err > p_.rk4_tolerance) {
                std::ostringstream os;
                os << "fhn: grid_step " << p_.grid_step << " too coarse (RK4 halving difference " << err << ")";
                throw ConfigError(os.str());
            }
        }
    }
}

ConstraintSpec FhnModel::constraint() const {
    return ConstraintSpec::ordered_min_gap(p_.min_gap, p_.t_max);
}

void FhnModel::sample_prior(Stream& s, std::span<double> theta) const {
    const std::size_t k = uniform_index(s, cache_size());
    for (std::size_t j = 0; j < 4; ++j) theta[j] = params_[4 * k + j];
    theta[4] = static_cast<double>(k);
}

std::vector<double> FhnModel::cached_theta(std::size_t k) const {
    if (k >= cache_size()) throw ModelError("fhn: cache slot out of range");
    return {params_[4 * k], params_[4 * k + 1], params_[4 * k + 2], params_[4 * k + 3],
            static_cast<double>(k)};
}

std::pair<double, double> FhnModel::voltage(std::size_t slot, double t) const {
    const double* u = &u1_[slot * n_nodes_];
    double pos = t / h_;
    auto k = static_cast<std::ptrdiff_t>(std::floor(pos));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n_nodes_) - 2);
    const double slope = (u[k + 1] - u[k]) / h_;
    const double tk = static_cast<double>(k) * h_;
    return {u[k] + slope * (t - tk), slope};
}

ObsMoments FhnModel::moments(std::span<const double> theta, std::span<const double> xi) const {
    const double slot_d = theta[4];
    const auto slot = static_cast<std::size_t>(slot_d);
    if (slot_d < 0.0 || static_cast<double>(slot) != slot_d || slot >= cache_size())
        throw ModelError("fhn: trajectory cache miss (slot " + std::to_string(slot_d) + ")");
    const double* th = &params_[4 * slot];
    if (th[0] != theta[0] || th[1] != theta[1] || th[2] != theta[2])
        throw ModelError("fhn: trajectory cache miss (parameters do not match slot " +
                         std::to_string(slot) + ")");
    auto [u, du] = voltage(slot, xi[0]);
    ObsMoments mo;
    mo.mean = u;
    mo.dmean[0] = du;
    mo.var = theta[3] * theta[3];
    return mo;
}

// ---------------------------------------------------------------------------

void NullModel::sample_prior(Stream& s, std::span<double> theta) const {
    theta[0] = standard_normal(s);
}

ObsMoments NullModel::moments(std::span<const double>, std::span<const double> xi) const {
    ObsMoments mo;
    mo.mean = std::sin(xi[0]);
    mo.dmean[0] = std::cos(xi[0]);
    mo.var = 1.0;
    return mo;
}

// ---------------------------------------------------------------------------

JointDraw simulate_joint(const Model& model, const DesignBatch& batch, Stream& s) {
    if (batch.dim() != model.design_dim())
        throw ConfigError("simulate_joint: batch dimension does not match the model");
    JointDraw out;
    out.theta = model.sample_prior(s);
    out.y.resize(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) out.y[j] = model.sample_obs(out.theta, batch.point(j), s);
    return out;
}

double batch_loglik(const Model& model, std::span<const double> y, std::span<const double> theta,
                    const DesignBatch& batch) {
    if (y.size() != batch.size()) throw ConfigError("batch_loglik: y and batch sizes differ");
    if (theta.size() != model.param_dim()) throw ConfigError("batch_loglik: wrong theta length");
    double total = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const double l = model.loglik(y[j], theta, batch.point(j));
        if (!std::isfinite(l)) {
            std::ostringstream os;
            os << "batch_loglik: non-finite log-likelihood at point " << j << " (xi = " << batch(j, 0)
               << ", y = " << y[j] << ")";
            throw ModelError(os.str());
        }
        total += l;
    }
    return total;
}

ModelPtr make_model(const std::string& name, const KeyValueConfig& cfg) {
    auto key = [&](const char* k) { return name + "." + k; };
    if (name == "toy1d") {
        Toy1DParams p;
        p.sigma_y = cfg.get_double(key("sigma_y"), p.sigma_y);
        if (cfg.has(key("amplitudes"))) {
            auto a = cfg.get_doubles(key("amplitudes"), {});
            if (a.size() != 5) throw ConfigError("toy1d.amplitudes needs 5 values");
            std::copy(a.begin(), a.end(), p.amplitudes.begin());
        }
        return std::make_shared<Toy1DModel>(p);
    }
    if (name == "sensor2d") {
        Sensor2DParams p;
        p.ell = cfg.get_double(key("ell"), p.ell);
        p.sigma_y = cfg.get_double(key("sigma_y"), p.sigma_y);
        p.w = cfg.get_double(key("w"), p.w);
        return std::make_shared<Sensor2DModel>(p);
    }
    if (name == "torus") {
        TorusParams p;
        p.sigma_y = cfg.get_double(key("sigma_y"), p.sigma_y);
        p.ell0 = cfg.get_double(key("ell0"), p.ell0);
        return std::make_shared<TorusLinearModel>(p);
    }
    if (name == "pk") {
        PkParams p;
        p.sigma2 = cfg.get_double(key("sigma2"), p.sigma2);
        p.t_max = cfg.get_double(key("t_max"), p.t_max);
        p.min_gap = cfg.get_double(key("min_gap"), p.min_gap);
        return std::make_shared<PkModel>(p);
    }
    if (name == "fhn") {
        FhnParams p;
        p.grid_step = cfg.get_double(key("grid_step"), p.grid_step);
        p.n_param_draws = cfg.get_uint(key("n_param_draws"), p.n_param_draws);
        p.cache_seed = cfg.get_uint(key("cache_seed"), p.cache_seed);
        p.t_max = cfg.get_double(key("t_max"), p.t_max);
        p.min_gap = cfg.get_double(key("min_gap"), p.min_gap);
        return std::make_shared<FhnModel>(p);
    }
    if (name == "null") return std::make_shared<NullModel>();
    throw ConfigError("unknown model: " + name);
}

}  // namespace boedflows
