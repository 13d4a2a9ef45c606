#include "boedflows/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

namespace boedflows {

std::size_t BaselineConfig::effective_budget() const {
    if (budget > 0) return budget;
    if (method == "geometric_drs" || method == "beta_drs") return 200;
    if (method == "ce_grid" || method == "ce_gp" || method == "ce_gp_g") return 2;
    if (method == "sga_adam") return 1000;
    if (method == "smc") return 5;
    return 0;
}

BaselineConfig BaselineConfig::from_config(const KeyValueConfig& cfg, const std::string& method) {
    BaselineConfig b;
    b.method = method;
    b.budget = cfg.get_uint(method + ".budget", 0);
    b.r_max = cfg.get_double("geometric_drs.r_max", b.r_max);
    b.grid_size = cfg.get_uint("ce_grid.grid_size", b.grid_size);
    b.gp.n_starts = cfg.get_uint("ce_gp.n_starts", b.gp.n_starts);
    b.gp.r_train = cfg.get_uint("ce_gp.r_train", b.gp.r_train);
    b.gp.lengthscale = cfg.get_double("ce_gp.lengthscale", b.gp.lengthscale);
    b.gp.grid = cfg.get_uint("ce_gp.grid", b.gp.grid);
    b.smc.n_particles = cfg.get_uint("smc.n_particles", b.smc.n_particles);
    b.smc.n_temps = cfg.get_uint("smc.n_temps", b.smc.n_temps);
    b.smc.ess_threshold = cfg.get_double("smc.ess", b.smc.ess_threshold);
    b.smc.scale = cfg.get_double("smc.scale", b.smc.scale);
    b.adam.gamma = cfg.get_double("sga_adam.gamma", b.adam.gamma);
    b.adam.n_restarts = cfg.get_uint("sga_adam.n_restarts", b.adam.n_restarts);
    b.lambda = cfg.get_double("lambda", b.lambda);
    b.keep_candidates = cfg.get_uint("extract.n_eval", b.keep_candidates);
    if (!(b.r_max > 1.0)) throw ConfigError("geometric_drs.r_max must be > 1");
    if (b.grid_size == 0 || b.gp.r_train < 2 || b.gp.grid == 0 || b.gp.n_starts == 0)
        throw ConfigError("baseline grid and training sizes must be positive");
    if (!(b.gp.lengthscale > 0.0) || !(b.smc.scale > 0.0) || !(b.adam.gamma > 0.0) || !(b.lambda > 0.0))
        throw ConfigError("baseline scale parameters must be > 0");
    if (b.smc.n_particles == 0 || b.smc.n_temps < 2) throw ConfigError("smc needs particles and >= 2 temperatures");
    return b;
}

namespace {

void require_ordered(const ConstraintSpec& c, const char* who) {
    if (c.kind != ConstraintKind::OrderedMinGap)
        throw ConfigError(std::string(who) + " needs an ordered min-gap constraint");
}

/// Reflects x into [lo, hi].
double reflect(double x, double lo, double hi) {
    const double L = hi - lo;
    double z = std::fmod(x - lo, 2.0 * L);
    if (z < 0.0) z += 2.0 * L;
    return lo + (z <= L ? z : 2.0 * L - z);
}

/// Feasible interval for coordinate i of an ordered design.
std::pair<double, double> coordinate_interval(const DesignBatch& b, std::size_t i) {
    const auto& c = b.constraint();
    const double lo = i == 0 ? 0.0 : b(i - 1, 0) + c.min_gap;
    const double hi = i + 1 == b.size() ? c.t_max : b(i + 1, 0) - c.min_gap;
    return {lo, hi};
}

std::vector<double> grid_in(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = 0.5 * (lo + hi);
        return g;
    }
    for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return g;
}

}  // namespace

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

DesignBatch random_feasible_batch(std::size_t m, std::size_t d, const ConstraintSpec& c, Stream& s) {
    DesignBatch b(m, d, c);
    const ConstraintSpec pc = c.per_point();
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < d; ++k) {
            if (pc.kind == ConstraintKind::Box) b(j, k) = uniform(s, pc.lo[k], pc.hi[k]);
            else if (pc.kind == ConstraintKind::Torus) b(j, k) = uniform(s, -kPi, kPi);
            else throw ConfigError("random batch needs a bounded domain");
        }
    apply_constraint(b);
    return b;
}

DesignBatch design_uniform(std::size_t m, const ConstraintSpec& c) {
    if (m == 0) throw ConfigError("design_uniform: m must be >= 1");
    c.validate_batch_size(m);
    const double mm = static_cast<double>(m);
    switch (c.kind) {
        case ConstraintKind::OrderedMinGap: {
            DesignBatch b(m, 1, c);
            for (std::size_t j = 0; j < m; ++j) b(j, 0) = static_cast<double>(j + 1) * c.t_max / (mm + 1.0);
            apply_constraint(b);
            return b;
        }
        case ConstraintKind::Torus: {
            DesignBatch b(m, 1, c);
            for (std::size_t j = 0; j < m; ++j) b(j, 0) = -kPi + kTwoPi * static_cast<double>(j) / mm;
            return b;
        }
        case ConstraintKind::Box: {
            const std::size_t d = c.lo.size();
            DesignBatch b(m, d, c);
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t k = 0; k < d; ++k)
                    b(j, k) = c.lo[k] + (c.hi[k] - c.lo[k]) * static_cast<double>(j + 1) / (mm + 1.0);
            return b;
        }
        default:
            throw ConfigError("design_uniform: unbounded domain");
    }
}

DesignBatch geometric_schedule(std::size_t m, const ConstraintSpec& c, double t0, double r) {
    require_ordered(c, "geometric schedule");
    DesignBatch b(m, 1, c);
    double t = t0;
    for (std::size_t j = 0; j < m; ++j) {
        b(j, 0) = std::min(t, 1e6 * c.t_max);
        t *= r;
    }
    return repair(b);
}

DesignBatch beta_schedule(std::size_t m, const ConstraintSpec& c, double a1, double a2) {
    require_ordered(c, "beta schedule");
    DesignBatch b(m, 1, c);
    for (std::size_t j = 0; j < m; ++j) {
        const double q = static_cast<double>(j + 1) / static_cast<double>(m + 1);
        b(j, 0) = c.t_max * boost::math::ibeta_inv(a1, a2, q);
    }
    return repair(b);
}

namespace {

template <class Propose>
BaselineResult random_search(std::size_t n_random, const UtilityOracle& oracle, std::uint64_t seed,
                             Propose propose) {
    if (n_random == 0) throw ConfigError("random search needs n_random >= 1");
    BaselineResult res;
    Stream s = rng_substream(seed, 0, 0, Purpose::Baseline);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_random; ++k) {
        DesignBatch b = propose(s);
        const double v = oracle.value(b, {k, 0, 0});
        res.scores.push_back(v);
        res.candidates.push_back(b);
        if (v > best) {
            best = v;
            res.design = b;
        }
    }
    res.iterations = n_random;
    res.evaluations = n_random;
    return res;
}

}  // namespace

BaselineResult design_geometric_drs(std::size_t m, const ConstraintSpec& c, std::size_t n_random,
                                    const UtilityOracle& oracle, std::uint64_t seed, double r_max) {
    require_ordered(c, "GeometricDRS");
    c.validate_batch_size(m);
    return random_search(n_random, oracle, seed, [&](Stream& s) {
        const double z1 = uniform(s, -4.0, 4.0), z2 = uniform(s, -4.0, 4.0);
        return geometric_schedule(m, c, c.t_max * sigmoid(z1), 1.0 + (r_max - 1.0) * sigmoid(z2));
    });
}

BaselineResult design_beta_drs(std::size_t m, const ConstraintSpec& c, std::size_t n_random,
                               const UtilityOracle& oracle, std::uint64_t seed) {
    require_ordered(c, "BetaDRS");
    c.validate_batch_size(m);
    const double lo = std::log(0.1), hi = std::log(10.0);
    return random_search(n_random, oracle, seed, [&](Stream& s) {
        const double a1 = std::exp(uniform(s, lo, hi)), a2 = std::exp(uniform(s, lo, hi));
        return beta_schedule(m, c, a1, a2);
    });
}

BaselineResult design_ce_grid(const DesignBatch& init, const UtilityOracle& oracle,
                              std::size_t n_sweeps, std::size_t grid_size) {
    require_ordered(init.constraint(), "CE (grid)");
    if (grid_size == 0) throw ConfigError("CE (grid): grid_size must be >= 1");
    BaselineResult res;
    DesignBatch cur = repair(init);
    std::size_t calls = 0;
    double cur_v = oracle.value(cur, {calls++, 0, 0});
    res.scores.push_back(cur_v);
    res.accepted_scores.push_back(cur_v);
    res.candidates.push_back(cur);
    const std::size_t m = cur.size();
    for (std::size_t sweep = 0; sweep < n_sweeps; ++sweep) {
        for (std::size_t i = 0; i < m; ++i) {
            auto [lo, hi] = coordinate_interval(cur, i);
            if (lo > hi + 1e-12) continue;  // empty feasible interval
            std::vector<double> cand{cur(i, 0)};  // incumbent first
            for (double t : grid_in(lo, std::max(lo, hi), grid_size)) cand.push_back(t);
            std::vector<double> vals(cand.size());
            vals[0] = cur_v;
            DesignBatch trial = cur;
            for (std::size_t k = 1; k < cand.size(); ++k) {
                trial(i, 0) = cand[k];
                vals[k] = oracle.value(trial, {calls++, k, 0});
                res.scores.push_back(vals[k]);
                ++res.evaluations;
            }
            std::size_t best = 0;
            for (std::size_t k = 1; k < vals.size(); ++k)
                if (vals[k] > vals[best]) best = k;
            cur(i, 0) = cand[best];
            cur_v = vals[best];
            res.accepted_scores.push_back(cur_v);
            res.candidates.push_back(cur);
        }
        ++res.iterations;
    }
    res.design = cur;
    return res;
}

// ---------------------------------------------------------------------------

Gp1d::Gp1d(std::vector<double> x, std::vector<double> y, double lengthscale, double signal_var,
           double noise_var, double jitter)
    : x_(std::move(x)), ls_(lengthscale), sv_(signal_var) {
    const auto n = static_cast<Eigen::Index>(x_.size());
    if (n == 0 || y.size() != x_.size()) throw ConfigError("Gp1d: need matching non-empty x and y");
    y_mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = (x_[i] - x_[j]) / ls_;
            K(i, j) = sv_ * std::exp(-0.5 * r * r);
        }
    K.diagonal().array() += noise_var;
    Eigen::VectorXd yc(n);
    for (Eigen::Index i = 0; i < n; ++i) yc[i] = y[static_cast<std::size_t>(i)] - y_mean_;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    double add = jitter * std::max(sv_, 1e-300);
    while (llt.info() != Eigen::Success) {
        jittered_ = true;
        K.diagonal().array() += add;
        add *= 10.0;
        llt.compute(K);
        if (add > 1e6 * std::max(sv_, 1.0)) throw EstimatorError("Gp1d: Gram matrix not positive definite");
    }
    Eigen::VectorXd a = llt.solve(yc);
    alpha_.assign(a.data(), a.data() + n);
}

double Gp1d::mean(double x) const {
    double acc = y_mean_;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double r = (x - x_[i]) / ls_;
        acc += sv_ * std::exp(-0.5 * r * r) * alpha_[i];
    }
    return acc;
}

BaselineResult design_ce_gp(const DesignBatch& init, const UtilityOracle& oracle, std::size_t n_sweeps,
                            const GpConfig& gp, bool greedy, std::uint64_t seed) {
    require_ordered(init.constraint(), greedy ? "CE (GP-G)" : "CE (GP)");
    BaselineResult best_res;
    double best_final = -std::numeric_limits<double>::infinity();
    std::size_t calls = 0;
    for (std::size_t start = 0; start < gp.n_starts; ++start) {
        BaselineResult res;
        Stream s = rng_substream(seed, start, 0, Purpose::Baseline);
        DesignBatch cur = start == 0 ? repair(init) : random_feasible_batch(init.size(), 1, init.constraint(), s);
        double cur_v = oracle.value(cur, {calls++, 0, 0});
        res.scores.push_back(cur_v);
        res.accepted_scores.push_back(cur_v);
        res.candidates.push_back(cur);
        const std::size_t m = cur.size();
        for (std::size_t sweep = 0; sweep < n_sweeps; ++sweep) {
            // replicate noise estimate: 3 anchors x 3 calls
            double noise = 0.0;
            {
                Stream ns = rng_substream(seed, start, sweep + 1, Purpose::Baseline, 1);
                double pooled = 0.0;
                for (std::size_t a = 0; a < 3; ++a) {
                    DesignBatch anchor = cur;
                    const std::size_t i = uniform_index(ns, m);
                    auto [lo, hi] = coordinate_interval(cur, i);
                    if (hi > lo) anchor(i, 0) = uniform(ns, lo, hi);
                    double v[3], mean = 0.0;
                    for (std::size_t r = 0; r < 3; ++r) {
                        v[r] = oracle.value(anchor, {calls++, a, r});
                        mean += v[r] / 3.0;
                    }
                    for (double x : v) pooled += (x - mean) * (x - mean) / 2.0;
                    res.evaluations += 3;
                }
                noise = pooled / 3.0;
            }
            for (std::size_t i = 0; i < m; ++i) {
                auto [lo, hi] = coordinate_interval(cur, i);
                if (lo > hi + 1e-12) continue;
                hi = std::max(lo, hi);
                Stream ts = rng_substream(seed, start, sweep * m + i + 1, Purpose::Baseline, 2);
                std::vector<double> xs(gp.r_train), ys(gp.r_train);
                DesignBatch trial = cur;
                for (std::size_t r = 0; r < gp.r_train; ++r) {
                    xs[r] = hi > lo ? uniform(ts, lo, hi) : lo;
                    trial(i, 0) = xs[r];
                    ys[r] = oracle.value(trial, {calls++, r, 0});
                    res.scores.push_back(ys[r]);
                    ++res.evaluations;
                }
                const double ym = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
                double sv = 0.0;
                for (double y : ys) sv += (y - ym) * (y - ym);
                sv /= static_cast<double>(ys.size() - 1);
                if (!(sv > 0.0)) sv = 1e-12;
                Gp1d model(xs, ys, gp.lengthscale, sv, std::max(noise, gp.jitter * sv), gp.jitter);
                if (model.jittered()) ++res.jitter_events;
                double best_x = cur(i, 0), best_mu = -std::numeric_limits<double>::infinity();
                for (double x : grid_in(lo, hi, gp.grid)) {
                    const double mu = model.mean(x);
                    if (mu > best_mu) {
                        best_mu = mu;
                        best_x = x;
                    }
                }
                trial = cur;
                trial(i, 0) = best_x;
                const double v = oracle.value(trial, {calls++, 0, 0});
                res.scores.push_back(v);
                ++res.evaluations;
                if (!greedy || v > cur_v) {
                    cur = trial;
                    cur_v = v;
                }
                res.accepted_scores.push_back(cur_v);
                res.candidates.push_back(cur);
            }
            ++res.iterations;
        }
        res.design = cur;
        if (cur_v > best_final) {
            best_final = cur_v;
            best_res.design = res.design;
            best_res.accepted_scores = res.accepted_scores;
        }
        best_res.scores.insert(best_res.scores.end(), res.scores.begin(), res.scores.end());
        best_res.candidates.insert(best_res.candidates.end(), res.candidates.begin(), res.candidates.end());
        best_res.iterations += res.iterations;
        best_res.evaluations += res.evaluations;
        best_res.jitter_events += res.jitter_events;
    }
    return best_res;
}

// ---------------------------------------------------------------------------

BaselineResult design_sga_adam(const DesignBatch& init, const UtilityOracle& oracle, std::size_t n_steps,
                               const AdamConfig& adam, std::uint64_t seed, std::size_t keep_candidates) {
    if (!is_feasible(init) && init.constraint().kind == ConstraintKind::OrderedMinGap)
        throw ConfigError("SGA (Adam): infeasible initial design");
    BaselineResult out;
    double best_final = -std::numeric_limits<double>::infinity();
    const std::size_t restarts = std::max<std::size_t>(1, adam.n_restarts);
    for (std::size_t rs = 0; rs < restarts; ++rs) {
        Stream s = rng_substream(seed, rs, 0, Purpose::Baseline);
        DesignBatch x = rs == 0 ? init : random_feasible_batch(init.size(), init.dim(), init.constraint(), s);
        apply_constraint(x);
        const std::size_t n = x.coords().size();
        std::vector<double> mom(n, 0.0), vel(n, 0.0);
        std::vector<DesignBatch> trail;
        for (std::size_t t = 1; t <= n_steps; ++t) {
            auto g = oracle.gradient(x, {t, rs, 0});
            for (std::size_t k = 0; k < n; ++k) {
                if (!std::isfinite(g[k]))
                    throw FlowError("SGA (Adam): non-finite gradient at step " + std::to_string(t));
                mom[k] = adam.beta1 * mom[k] + (1.0 - adam.beta1) * g[k];
                vel[k] = adam.beta2 * vel[k] + (1.0 - adam.beta2) * g[k] * g[k];
                const double mh = mom[k] / (1.0 - std::pow(adam.beta1, static_cast<double>(t)));
                const double vh = vel[k] / (1.0 - std::pow(adam.beta2, static_cast<double>(t)));
                x.coords()[k] += adam.gamma * mh / (std::sqrt(vh) + adam.eps);
            }
            apply_constraint(x);
            trail.push_back(x);
            if (trail.size() > keep_candidates && keep_candidates > 0) trail.erase(trail.begin());
        }
        const double v = oracle.value(x, {n_steps + 1, rs, 0});
        out.scores.push_back(v);
        out.evaluations += n_steps + 1;
        out.iterations += n_steps;
        if (v > best_final) {
            best_final = v;
            out.design = x;
        }
        if (trail.empty()) trail.push_back(x);
        out.candidates.insert(out.candidates.end(), trail.begin(), trail.end());
    }
    if (keep_candidates > 0 && out.candidates.size() > keep_candidates) {
        std::vector<DesignBatch> thin;
        const std::size_t n = out.candidates.size();
        for (std::size_t k = 0; k < keep_candidates; ++k) thin.push_back(out.candidates[n - 1 - (k * n) / keep_candidates]);
        out.candidates = std::move(thin);
    }
    return out;
}

// ---------------------------------------------------------------------------

double effective_sample_size(std::span<const double> w) {
    double s = 0.0, s2 = 0.0;
    for (double x : w) {
        s += x;
        s2 += x * x;
    }
    if (!(s > 0.0)) return 0.0;
    return s * s / s2;
}

namespace {

void smc_propose(DesignBatch& b, double scale, Stream& s) {
    const auto& c = b.constraint();
    for (auto& x : b.coords()) x += scale * standard_normal(s);
    if (c.kind == ConstraintKind::Box) {
        for (std::size_t j = 0; j < b.size(); ++j)
            for (std::size_t k = 0; k < b.dim(); ++k) b(j, k) = reflect(b(j, k), c.lo[k], c.hi[k]);
    } else {
        apply_constraint(b);
    }
}

}  // namespace

BaselineResult design_annealed_smc(std::size_t m, const ConstraintSpec& c, std::size_t d,
                                   const UtilityOracle& oracle, std::size_t n_mcmc,
                                   const SmcConfig& smc, double lambda, std::uint64_t seed) {
    if (smc.n_particles == 0 || smc.n_temps == 0) throw ConfigError("SMC: need particles and temperatures");
    if (!(lambda > 0.0)) throw ConfigError("SMC: lambda must be > 0");
    c.validate_batch_size(m);
    BaselineResult res;
    const std::size_t P = smc.n_particles;
    std::vector<DesignBatch> parts;
    std::vector<double> score(P), logw(P, 0.0);
    std::size_t calls = 0;
    double best = -std::numeric_limits<double>::infinity();
    auto consider = [&](const DesignBatch& b, double v) {
        res.scores.push_back(v);
        ++res.evaluations;
        if (v > best) {
            best = v;
            res.design = b;
        }
    };
    for (std::size_t p = 0; p < P; ++p) {
        Stream s = rng_substream(seed, p, 0, Purpose::Init);
        parts.push_back(random_feasible_batch(m, d, c, s));
        score[p] = oracle.value(parts[p], {calls++, p, 0});
        consider(parts[p], score[p]);
    }
    const double beta_max = static_cast<double>(m) / lambda;
    auto beta_at = [&](std::size_t k) {
        return smc.n_temps == 1 ? 0.0 : beta_max * static_cast<double>(k) / static_cast<double>(smc.n_temps - 1);
    };
    std::vector<double> w(P);
    auto normalise = [&]() {
        double mx = -std::numeric_limits<double>::infinity();
        for (double lw : logw) mx = std::max(mx, lw);
        if (!std::isfinite(mx)) throw EstimatorError("SMC: all importance weights are zero");
        double s = 0.0;
        for (std::size_t p = 0; p < P; ++p) s += (w[p] = std::exp(logw[p] - mx));
        for (auto& x : w) x /= s;
    };
    for (std::size_t k = 1; k < smc.n_temps; ++k) {
        const double beta = beta_at(k), dbeta = beta - beta_at(k - 1);
        for (std::size_t p = 0; p < P; ++p) logw[p] += dbeta * score[p];
        normalise();
        if (effective_sample_size(w) / static_cast<double>(P) < smc.ess_threshold) {
            Stream rs = rng_substream(seed, 0, k, Purpose::Baseline);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            std::vector<DesignBatch> np;
            std::vector<double> ns;
            for (std::size_t p = 0; p < P; ++p) {
                const std::size_t a = pick(rs);
                np.push_back(parts[a]);
                ns.push_back(score[a]);
            }
            parts = std::move(np);
            score = std::move(ns);
            std::fill(logw.begin(), logw.end(), 0.0);
            ++res.resample_events;
        }
        for (std::size_t p = 0; p < P; ++p) {
            Stream ms = rng_substream(seed, p, k, Purpose::Baseline, 1);
            for (std::size_t t = 0; t < n_mcmc; ++t) {
                DesignBatch prop = parts[p];
                smc_propose(prop, smc.scale, ms);
                const double v = oracle.value(prop, {calls++, p, t});
                consider(prop, v);
                const double log_a = beta * (v - score[p]);
                if (log_a >= 0.0 || std::log(uniform(ms)) < log_a) {
                    parts[p] = std::move(prop);
                    score[p] = v;
                }
            }
        }
        ++res.iterations;
    }
    normalise();
    res.candidates = parts;
    res.final_weights = w;
    return res;
}

// ---------------------------------------------------------------------------

DesignBatch gradient_ascent(DesignBatch x, const UtilityOracle& oracle, std::size_t n_steps,
                            double step_size) {
    apply_constraint(x);
    for (std::size_t t = 0; t < n_steps; ++t) {
        auto g = oracle.gradient(x, {t, 0, 0});
        for (std::size_t k = 0; k < g.size(); ++k) x.coords()[k] += step_size * g[k];
        apply_constraint(x);
    }
    return x;
}

DesignBatch repeat_best_single(const UtilityOracle& single_oracle, std::size_t m,
                               const ConstraintSpec& c, std::size_t grid) {
    const ConstraintSpec pc = c.per_point();
    double lo, hi;
    bool closed = true;
    if (pc.kind == ConstraintKind::Torus) {
        lo = -kPi;
        hi = kPi;
        closed = false;
    } else if (pc.kind == ConstraintKind::Box && pc.lo.size() == 1) {
        lo = pc.lo[0];
        hi = pc.hi[0];
    } else {
        throw ConfigError("repeat_best_single supports scalar bounded designs");
    }
    double best_x = lo, best_v = -std::numeric_limits<double>::infinity();
    DesignBatch one(1, 1, c.kind == ConstraintKind::OrderedMinGap ? pc : c);
    for (std::size_t k = 0; k < grid; ++k) {
        const double den = closed ? static_cast<double>(grid - 1) : static_cast<double>(grid);
        one(0, 0) = lo + (hi - lo) * static_cast<double>(k) / std::max(den, 1.0);
        const double v = single_oracle.value(one, {k, 0, 0});
        if (v > best_v) {
            best_v = v;
            best_x = one(0, 0);
        }
    }
    DesignBatch out(std::vector<double>(m, best_x), 1, c);
    apply_constraint(out);
    return out;
}

BaselineResult run_baseline(const BaselineConfig& cfg, std::size_t m, std::size_t d,
                            const ConstraintSpec& c, const UtilityOracle& oracle, std::uint64_t seed) {
    const std::size_t budget = cfg.effective_budget();
    if (cfg.method == "uniform") {
        BaselineResult r;
        r.design = design_uniform(m, c);
        r.candidates = {r.design};
        return r;
    }
    if (cfg.method == "geometric_drs") return design_geometric_drs(m, c, budget, oracle, seed, cfg.r_max);
    if (cfg.method == "beta_drs") return design_beta_drs(m, c, budget, oracle, seed);
    Stream s = rng_substream(seed, 0, 0, Purpose::Init);
    const DesignBatch init = random_feasible_batch(m, d, c, s);
    if (cfg.method == "ce_grid") return design_ce_grid(init, oracle, budget, cfg.grid_size);
    if (cfg.method == "ce_gp") return design_ce_gp(init, oracle, budget, cfg.gp, false, seed);
    if (cfg.method == "ce_gp_g") return design_ce_gp(init, oracle, budget, cfg.gp, true, seed);
    if (cfg.method == "sga_adam") return design_sga_adam(init, oracle, budget, cfg.adam, seed, cfg.keep_candidates);
    if (cfg.method == "smc") return design_annealed_smc(m, c, d, oracle, budget, cfg.smc, cfg.lambda, seed);
    throw ConfigError("unknown baseline method: " + cfg.method);
}

}  // namespace boedflows
