#include "boedflows/eig.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace boedflows {

std::vector<double> UtilityOracle::slot_gradient(const DesignBatch& batch, std::size_t slot,
                                                 OracleCall call) const {
    auto g = gradient(batch, call);
    const std::size_t d = batch.dim();
    return {g.begin() + static_cast<std::ptrdiff_t>(slot * d),
            g.begin() + static_cast<std::ptrdiff_t>((slot + 1) * d)};
}

namespace {

std::string echo(const DesignBatch& b) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < b.coords().size(); ++i) os << (i ? ", " : "") << b.coords()[i];
    os << "]";
    return os.str();
}

constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace

// ---------------------------------------------------------------------------
// NMC

NmcOracle::NmcOracle(ModelPtr model, std::size_t n_outer, std::size_t n_inner,
                     GradientRandomness mode, std::uint64_t seed, std::size_t m)
    : model_(std::move(model)), n_outer_(n_outer), n_inner_(n_inner), mode_(mode), seed_(seed), m_(m) {
    if (!model_) throw ConfigError("NmcOracle: null model");
    if (n_outer_ == 0 || n_inner_ == 0) throw ConfigError("NmcOracle: n_outer and n_inner must be >= 1");
    if (mode_ == GradientRandomness::Frozen) {
        if (m_ == 0) throw ConfigError("NmcOracle: frozen mode needs the batch size");
        Stream s = rng_substream(seed_, 0, 0, Purpose::FrozenOracle);
        frozen_ = make_draws(s, m_);
    }
}

std::optional<std::size_t> NmcOracle::batch_size() const {
    if (mode_ == GradientRandomness::Frozen) return m_;
    return std::nullopt;
}

NmcOracle::Draws NmcOracle::make_draws(Stream& s, std::size_t m) const {
    const std::size_t p = model_->param_dim();
    Draws dr;
    dr.theta_outer.resize(n_outer_ * p);
    dr.eps.resize(n_outer_ * m);
    dr.theta_inner.resize(n_inner_ * p);
    for (std::size_t o = 0; o < n_outer_; ++o)
        model_->sample_prior(s, std::span<double>(dr.theta_outer.data() + o * p, p));
    for (auto& e : dr.eps) e = standard_normal(s);
    for (std::size_t i = 0; i < n_inner_; ++i)
        model_->sample_prior(s, std::span<double>(dr.theta_inner.data() + i * p, p));
    return dr;
}

const NmcOracle::Draws& NmcOracle::draws_for(const DesignBatch& batch, OracleCall call,
                                             Draws& scratch) const {
    if (batch.dim() != model_->design_dim())
        throw ConfigError("NmcOracle: batch dimension does not match the model");
    if (batch.size() == 0) throw ConfigError("NmcOracle: empty batch");
    if (mode_ == GradientRandomness::Frozen) {
        if (batch.size() != m_)
            throw ConfigError("NmcOracle: frozen oracle built for m = " + std::to_string(m_) +
                              " but called with m = " + std::to_string(batch.size()));
        return frozen_;
    }
    Stream s = rng_substream(seed_, call.particle, call.step, Purpose::Oracle, call.draw);
    scratch = make_draws(s, batch.size());
    return scratch;
}

EigEstimate NmcOracle::evaluate(const DesignBatch& batch, const Draws& dr,
                                std::span<const std::size_t> slots,
                                std::vector<double>* grad) const {
    const std::size_t m = batch.size(), d = batch.dim(), p = model_->param_dim();
    const std::size_t O = n_outer_, I = n_inner_;

    std::vector<ObsMoments> mo_out(O * m), mo_in(I * m);
    std::vector<double> y(O * m), logv_in(I * m), inv_in(I * m);
    std::vector<double> outer_ll(O, 0.0);
    for (std::size_t o = 0; o < O; ++o) {
        std::span<const double> th(dr.theta_outer.data() + o * p, p);
        for (std::size_t j = 0; j < m; ++j) {
            auto& mo = mo_out[o * m + j];
            mo = model_->moments(th, batch.point(j));
            const double e = dr.eps[o * m + j];
            y[o * m + j] = mo.mean + std::sqrt(mo.var) * e;
            outer_ll[o] += -0.5 * (kLog2Pi + std::log(mo.var) + e * e);
        }
        if (!std::isfinite(outer_ll[o]))
            throw EstimatorError("NMC: non-finite outer log-likelihood at batch " + echo(batch));
    }
    for (std::size_t i = 0; i < I; ++i) {
        std::span<const double> th(dr.theta_inner.data() + i * p, p);
        for (std::size_t j = 0; j < m; ++j) {
            auto& mo = mo_in[i * m + j];
            mo = model_->moments(th, batch.point(j));
            logv_in[i * m + j] = std::log(mo.var);
            inv_in[i * m + j] = 1.0 / mo.var;
        }
    }

    if (grad) grad->assign(slots.size() * d, 0.0);
    std::vector<double> inner_ll(I), w(I);
    double sum = 0.0, sumsq = 0.0;
    const double log_i = std::log(static_cast<double>(I));
    std::size_t dropped = 0;

    for (std::size_t o = 0; o < O; ++o) {
        const double* yo = &y[o * m];
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < I; ++i) {
            double l = 0.0;
            const ObsMoments* mi = &mo_in[i * m];
            for (std::size_t j = 0; j < m; ++j) {
                const double r = yo[j] - mi[j].mean;
                l -= 0.5 * (kLog2Pi + logv_in[i * m + j] + r * r * inv_in[i * m + j]);
            }
            if (std::isnan(l)) l = -std::numeric_limits<double>::infinity();
            inner_ll[i] = l;
            mx = std::max(mx, l);
        }
        if (mx == -std::numeric_limits<double>::infinity())
            throw EstimatorError("NMC: all inner log-likelihoods are -inf at batch " + echo(batch));
        double s = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
            if (inner_ll[i] == -std::numeric_limits<double>::infinity()) {
                ++dropped;
                w[i] = 0.0;
                continue;
            }
            w[i] = std::exp(inner_ll[i] - mx);
            s += w[i];
        }
        const double log_marg = mx + std::log(s) - log_i;
        const double term = outer_ll[o] - log_marg;
        sum += term;
        sumsq += term * term;

        if (!grad) continue;
        for (std::size_t i = 0; i < I; ++i) w[i] /= s;
        for (std::size_t si = 0; si < slots.size(); ++si) {
            const std::size_t b = slots[si];
            const ObsMoments& mob = mo_out[o * m + b];
            const double sv = std::sqrt(mob.var);
            const double e = dr.eps[o * m + b];
            for (std::size_t k = 0; k < d; ++k) {
                const double dy = mob.dmean[k] + e * mob.dvar[k] / (2.0 * sv);
                double inner = 0.0;
                for (std::size_t i = 0; i < I; ++i) {
                    if (w[i] == 0.0) continue;
                    const ObsMoments& mi = mo_in[i * m + b];
                    const double iv = inv_in[i * m + b];
                    const double r = yo[b] - mi.mean;
                    const double dxi = r * iv * mi.dmean[k] + 0.5 * (r * r * iv * iv - iv) * mi.dvar[k];
                    inner += w[i] * (dxi - r * iv * dy);
                }
                (*grad)[si * d + k] += -0.5 * mob.dvar[k] / mob.var - inner;
            }
        }
    }
    if (dropped) dropped_ += dropped;

    EigEstimate est;
    est.value = sum / static_cast<double>(O);
    const double var = O > 1 ? std::max(0.0, (sumsq - sum * sum / static_cast<double>(O)) /
                                                 static_cast<double>(O - 1))
                             : 0.0;
    est.std_error = std::sqrt(var / static_cast<double>(O));
    est.n_outer = O;
    est.n_inner = I;
    est.kind = EstimateKind::Nmc;
    est.mode = mode_;
    if (grad)
        for (auto& g : *grad) g /= static_cast<double>(O);
    return est;
}

EigEstimate NmcOracle::estimate(const DesignBatch& batch, OracleCall call) const {
    Draws scratch;
    const Draws& dr = draws_for(batch, call, scratch);
    return evaluate(batch, dr, {}, nullptr);
}

std::vector<double> NmcOracle::gradient(const DesignBatch& batch, OracleCall call) const {
    Draws scratch;
    const Draws& dr = draws_for(batch, call, scratch);
    std::vector<std::size_t> slots(batch.size());
    std::iota(slots.begin(), slots.end(), 0);
    std::vector<double> g;
    evaluate(batch, dr, slots, &g);
    return g;
}

std::vector<double> NmcOracle::slot_gradient(const DesignBatch& batch, std::size_t slot,
                                             OracleCall call) const {
    if (slot >= batch.size()) throw ConfigError("NmcOracle: slot out of range");
    Draws scratch;
    const Draws& dr = draws_for(batch, call, scratch);
    const std::size_t slots[1] = {slot};
    std::vector<double> g;
    evaluate(batch, dr, slots, &g);
    return g;
}

// ---------------------------------------------------------------------------
// Torus closed form

namespace {

struct TorusSystem {
    double a00 = 1.0, a01 = 0.0, a11 = 1.0;  // I + sigma^-2 H^T H
    double det() const { return a00 * a11 - a01 * a01; }
};

TorusSystem torus_system(const TorusLinearModel& model, const DesignBatch& batch) {
    const double is2 = 1.0 / (model.params().sigma_y * model.params().sigma_y);
    TorusSystem A;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        auto h = model.h(batch(j, 0));
        A.a00 += is2 * h[0] * h[0];
        A.a01 += is2 * h[0] * h[1];
        A.a11 += is2 * h[1] * h[1];
    }
    return A;
}

}  // namespace

double eig_exact_torus(const TorusLinearModel& model, const DesignBatch& batch) {
    if (batch.dim() != 1) throw ConfigError("eig_exact_torus: designs are scalar angles");
    return 0.5 * std::log(torus_system(model, batch).det());
}

std::vector<double> grad_eig_exact_torus(const TorusLinearModel& model, const DesignBatch& batch) {
    if (batch.dim() != 1) throw ConfigError("eig_exact_torus: designs are scalar angles");
    const auto A = torus_system(model, batch);
    const double det = A.det();
    // A^{-1} = [a11 -a01; -a01 a00] / det
    const double i00 = A.a11 / det, i01 = -A.a01 / det, i11 = A.a00 / det;
    const double is2 = 1.0 / (model.params().sigma_y * model.params().sigma_y);
    std::vector<double> g(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        auto h = model.h(batch(j, 0));
        auto dh = model.h_derivative(batch(j, 0));
        const double u0 = i00 * dh[0] + i01 * dh[1];
        const double u1 = i01 * dh[0] + i11 * dh[1];
        g[j] = is2 * (h[0] * u0 + h[1] * u1);
    }
    return g;
}

TorusExactOracle::TorusExactOracle(std::shared_ptr<const TorusLinearModel> model)
    : model_(std::move(model)) {
    if (!model_) throw ConfigError("TorusExactOracle: null model");
}

EigEstimate TorusExactOracle::estimate(const DesignBatch& batch, OracleCall) const {
    EigEstimate e;
    e.value = eig_exact_torus(*model_, batch);
    e.kind = EstimateKind::Exact;
    return e;
}

std::vector<double> TorusExactOracle::gradient(const DesignBatch& batch, OracleCall) const {
    return grad_eig_exact_torus(*model_, batch);
}

std::vector<double> TorusExactOracle::slot_gradient(const DesignBatch& batch, std::size_t slot,
                                                    OracleCall) const {
    if (slot >= batch.size()) throw ConfigError("TorusExactOracle: slot out of range");
    return {grad_eig_exact_torus(*model_, batch)[slot]};
}

// ---------------------------------------------------------------------------
// Quadrature

GaussHermite gauss_hermite(std::size_t n) {
    if (n == 0) throw ConfigError("gauss_hermite: need at least one node");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
    for (Eigen::Index k = 0; k < sub.size(); ++k) sub[k] = std::sqrt(static_cast<double>(k + 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    GaussHermite rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        rule.nodes[k] = es.eigenvalues()[static_cast<Eigen::Index>(k)];
        const double v = es.eigenvectors()(0, static_cast<Eigen::Index>(k));
        rule.weights[k] = v * v;
        total += v * v;
    }
    for (auto& w : rule.weights) w /= total;
    return rule;
}

double eig_quadrature_1d(const Toy1DModel& model, double xi, const GaussHermite& rule) {
    // By symmetry condition on theta = +1, y = a + sigma z:
    // EIG = log 2 - E[softplus(-2 a y / sigma^2)]
    const double a = model.sensitivity(xi);
    const double s = model.params().sigma_y;
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = -2.0 * a * (a + s * rule.nodes[k]) / (s * s);
        const double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        acc += rule.weights[k] * sp;
    }
    return std::clamp(std::log(2.0) - acc, 0.0, std::log(2.0));
}

double eig_quadrature_1d(const Toy1DModel& model, double xi, std::size_t n_nodes) {
    if (n_nodes < 16) throw ConfigError("eig_quadrature_1d: need at least 16 nodes");
    return eig_quadrature_1d(model, xi, gauss_hermite(n_nodes));
}

Toy1DLandscapeOracle::Toy1DLandscapeOracle(std::shared_ptr<const Toy1DModel> model,
                                           std::size_t grid_points, std::size_t n_nodes) {
    if (!model) throw ConfigError("Toy1DLandscapeOracle: null model");
    if (grid_points < 3) throw ConfigError("Toy1DLandscapeOracle: need at least 3 grid points");
    lo_ = model->params().lo;
    hi_ = model->params().hi;
    h_ = (hi_ - lo_) / static_cast<double>(grid_points - 1);
    const auto rule = gauss_hermite(n_nodes);
    grid_.resize(grid_points);
    values_.resize(grid_points);
    grads_.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
        grid_[i] = lo_ + h_ * static_cast<double>(i);
        values_[i] = eig_quadrature_1d(*model, grid_[i], rule);
    }
    const std::size_t n = grid_points;
    grads_[0] = (values_[1] - values_[0]) / h_;
    grads_[n - 1] = (values_[n - 1] - values_[n - 2]) / h_;
    for (std::size_t i = 1; i + 1 < n; ++i) grads_[i] = (values_[i + 1] - values_[i - 1]) / (2.0 * h_);
}

double Toy1DLandscapeOracle::interpolate(const std::vector<double>& v, double xi) const {
    const double pos = std::clamp((xi - lo_) / h_, 0.0, static_cast<double>(v.size() - 1));
    auto k = static_cast<std::size_t>(pos);
    if (k >= v.size() - 1) return v.back();
    const double t = pos - static_cast<double>(k);
    return (1.0 - t) * v[k] + t * v[k + 1];
}

double Toy1DLandscapeOracle::eig_at(double xi) const { return interpolate(values_, xi); }
double Toy1DLandscapeOracle::grad_at(double xi) const { return interpolate(grads_, xi); }

double Toy1DLandscapeOracle::argmax() const {
    auto it = std::max_element(values_.begin(), values_.end());
    return grid_[static_cast<std::size_t>(it - values_.begin())];
}

EigEstimate Toy1DLandscapeOracle::estimate(const DesignBatch& batch, OracleCall) const {
    if (batch.size() != 1 || batch.dim() != 1)
        throw ConfigError("toy landscape oracle supports single scalar designs only");
    EigEstimate e;
    e.value = eig_at(batch(0, 0));
    e.kind = EstimateKind::Quadrature;
    return e;
}

std::vector<double> Toy1DLandscapeOracle::gradient(const DesignBatch& batch, OracleCall) const {
    if (batch.size() != 1 || batch.dim() != 1)
        throw ConfigError("toy landscape oracle supports single scalar designs only");
    return {grad_at(batch(0, 0))};
}

// ---------------------------------------------------------------------------

FunctionOracle::FunctionOracle(std::size_t d, ValueFn value, GradFn grad)
    : d_(d), value_(std::move(value)), grad_(std::move(grad)) {}

EigEstimate FunctionOracle::estimate(const DesignBatch& batch, OracleCall) const {
    EigEstimate e;
    e.value = value_(batch);
    e.kind = EstimateKind::Exact;
    return e;
}

std::vector<double> FunctionOracle::gradient(const DesignBatch& batch, OracleCall) const {
    if (grad_) return grad_(batch);
    return std::vector<double>(batch.coords().size(), 0.0);
}

// ---------------------------------------------------------------------------

EigEstimate eig_nmc(ModelPtr model, const DesignBatch& batch, std::size_t n_outer,
                    std::size_t n_inner, std::uint64_t seed, GradientRandomness mode) {
    NmcOracle oracle(std::move(model), n_outer, n_inner, mode, seed, batch.size());
    return oracle.estimate(batch, {});
}

EigEstimate eig_nmc_replicated(ModelPtr model, const DesignBatch& batch, std::size_t n_outer,
                               std::size_t n_inner, std::uint64_t seed, std::size_t replications) {
    if (replications == 0) throw ConfigError("eig_nmc_replicated: need at least one replication");
    std::vector<EigEstimate> reps;
    reps.reserve(replications);
    for (std::size_t r = 0; r < replications; ++r)
        reps.push_back(eig_nmc(model, batch, n_outer, n_inner, mix64(seed) ^ mix64(r + 1),
                               GradientRandomness::Frozen));
    EigEstimate out = reps.front();
    if (replications == 1) return out;
    double sum = 0.0, sumsq = 0.0;
    for (const auto& e : reps) {
        sum += e.value;
        sumsq += e.value * e.value;
    }
    const double n = static_cast<double>(replications);
    out.value = sum / n;
    out.std_error = std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)) / n);
    out.n_outer = n_outer * replications;
    return out;
}

OraclePtr make_oracle(ModelPtr model, std::size_t m, std::size_t n_outer, std::size_t n_inner,
                      GradientRandomness mode, std::uint64_t seed, bool exact) {
    if (exact) {
        if (auto torus = std::dynamic_pointer_cast<const TorusLinearModel>(model))
            return std::make_shared<TorusExactOracle>(torus);
        if (auto toy = std::dynamic_pointer_cast<const Toy1DModel>(model)) {
            if (m != 1) throw ConfigError("exact toy1d utility exists only for m = 1");
            return std::make_shared<Toy1DLandscapeOracle>(toy);
        }
        throw ConfigError("no exact utility for model " + model->name());
    }
    return std::make_shared<NmcOracle>(std::move(model), n_outer, n_inner, mode, seed, m);
}

}  // namespace boedflows
