#include "boedflows/flows.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace boedflows {

ReferenceMeasure ReferenceMeasure::gaussian(std::vector<double> mean, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian reference: sigma must be > 0");
    if (mean.empty()) throw ConfigError("gaussian reference: empty mean");
    ReferenceMeasure r;
    r.kind = Kind::Gaussian;
    r.mean = std::move(mean);
    r.sigma = sigma;
    return r;
}

void ReferenceMeasure::add_score(std::span<const double> x, std::span<double> out,
                                 double scale) const {
    if (kind == Kind::Uniform) return;
    const double is2 = 1.0 / (sigma * sigma);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double mu = mean.size() == 1 ? mean[0] : mean[k];
        out[k] += scale * (-(x[k] - mu) * is2);
    }
}

double ReferenceMeasure::log_density(std::span<const double> x) const {
    if (kind == Kind::Uniform) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double mu = mean.size() == 1 ? mean[0] : mean[k];
        acc -= 0.5 * (x[k] - mu) * (x[k] - mu) / (sigma * sigma);
    }
    return acc;
}

double RepulsionSpec::potential(std::span<const double> z) const {
    double n2 = 0.0;
    for (double v : z) n2 += v * v;
    return 1.0 / (n2 + delta * delta);
}

void RepulsionSpec::gradient(std::span<const double> z, std::span<double> out) const {
    double n2 = 0.0;
    for (double v : z) n2 += v * v;
    const double den = n2 + delta * delta;
    const double c = -2.0 / (den * den);
    for (std::size_t k = 0; k < z.size(); ++k) out[k] = c * z[k];
}

InitSpec InitSpec::uniform_box(std::vector<double> lo, std::vector<double> hi) {
    InitSpec s;
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
}

InitSpec InitSpec::normal(std::vector<double> mean, double sd) {
    InitSpec s;
    s.kind = Kind::Normal;
    s.mean = std::move(mean);
    s.sd = sd;
    return s;
}

namespace {

void draw_point(const InitSpec& init, const ConstraintSpec& pc, std::size_t d, Stream& s,
                std::span<double> x) {
    for (std::size_t k = 0; k < d; ++k) {
        if (init.kind == InitSpec::Kind::Normal) {
            const double mu = init.mean.size() == 1 ? init.mean[0] : init.mean.at(k);
            x[k] = mu + init.sd * standard_normal(s);
            continue;
        }
        double lo, hi;
        if (!init.lo.empty()) {
            lo = init.lo.size() == 1 ? init.lo[0] : init.lo.at(k);
            hi = init.hi.size() == 1 ? init.hi[0] : init.hi.at(k);
        } else if (pc.kind == ConstraintKind::Box) {
            lo = pc.lo[k];
            hi = pc.hi[k];
        } else if (pc.kind == ConstraintKind::Torus) {
            lo = -kPi;
            hi = kPi;
        } else {
            throw ConfigError("uniform initialisation needs explicit bounds on an unconstrained domain");
        }
        x[k] = uniform(s, lo, hi);
    }
    project_point(x, pc);
}

/// Repairs the i-th particle across all coordinate ensembles as one batch.
void repair_rows(std::vector<ParticleEnsemble>& marginals, const ConstraintSpec& c) {
    const std::size_t m = marginals.size();
    const std::size_t n = marginals.front().size();
    std::vector<double> row(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < m; ++b) row[b] = marginals[b].particle(i)[0];
        repair_times(row, c.min_gap, c.t_max);
        for (std::size_t b = 0; b < m; ++b) marginals[b].particle(i)[0] = row[b];
    }
}

void check_finite(std::span<const double> v, const char* what, std::size_t step, std::size_t who) {
    for (double x : v)
        if (!std::isfinite(x)) {
            std::ostringstream os;
            os << "non-finite " << what << " at step " << step << " (particle/chain " << who << ")";
            throw FlowError(os.str());
        }
}

/// x <- x + gamma * (drift + temp * score) + sqrt(2 temp gamma) Z
void langevin_move(std::span<double> x, std::span<double> drift, const ReferenceMeasure& ref,
                   double temp, double gamma, Stream& noise) {
    ref.add_score(x, drift, temp);
    const double sd = std::sqrt(2.0 * temp * gamma);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += gamma * drift[k] + sd * standard_normal(noise);
}

}  // namespace

FlowState init_flow(const FlowConfig& cfg, std::size_t d, const ConstraintSpec& constraint,
                    const InitSpec& init) {
    cfg.validate();
    constraint.validate_batch_size(cfg.m);
    if (d == 0 || d > kMaxDesignDim) throw ConfigError("design dimension must be 1 or 2");
    if (constraint.kind == ConstraintKind::OrderedMinGap && d != 1)
        throw ConfigError("ordered min-gap designs are scalar");
    FlowState st;
    st.algorithm = cfg.algorithm;
    st.m = cfg.m;
    st.d = d;
    st.constraint = constraint;
    const ConstraintSpec pc = constraint.per_point();
    switch (cfg.algorithm) {
        case Algorithm::Joint:
            for (std::size_t r = 0; r < cfg.N; ++r) {
                DesignBatch chain(cfg.m, d, constraint);
                Stream s = rng_substream(cfg.seed, r, 0, Purpose::Init);
                for (std::size_t j = 0; j < cfg.m; ++j) draw_point(init, pc, d, s, chain.point(j));
                apply_constraint(chain);
                st.chains.push_back(std::move(chain));
            }
            break;
        case Algorithm::MF:
        case Algorithm::MfSub:
            for (std::size_t b = 0; b < cfg.m; ++b) {
                ParticleEnsemble ens(cfg.N, d, pc);
                for (std::size_t i = 0; i < cfg.N; ++i) {
                    Stream s = rng_substream(cfg.seed, b * cfg.N + i, 0, Purpose::Init);
                    draw_point(init, pc, d, s, ens.particle(i));
                }
                st.marginals.push_back(std::move(ens));
            }
            if (constraint.kind == ConstraintKind::OrderedMinGap) repair_rows(st.marginals, constraint);
            break;
        case Algorithm::Iid:
        case Algorithm::IidRep: {
            ParticleEnsemble ens(cfg.N, d, pc);
            for (std::size_t i = 0; i < cfg.N; ++i) {
                Stream s = rng_substream(cfg.seed, i, 0, Purpose::Init);
                draw_point(init, pc, d, s, ens.particle(i));
            }
            st.ensemble = std::move(ens);
            break;
        }
    }
    return st;
}

// ---------------------------------------------------------------------------

std::vector<double> iid_drift(const ParticleEnsemble& ens, std::size_t i, const FlowConfig& cfg,
                              const UtilityOracle& oracle, std::size_t step) {
    const std::size_t d = ens.dim(), n = ens.size(), m = cfg.m;
    Stream tuples = rng_substream(cfg.seed, i, step, Purpose::Tuples);
    std::vector<double> acc(d, 0.0);
    DesignBatch batch(m, d, ens.constraint());
    std::copy_n(ens.particle(i).begin(), d, batch.point(0).begin());
    for (std::size_t k = 0; k < cfg.K; ++k) {
        for (std::size_t j = 1; j < m; ++j) {
            const std::size_t J = uniform_index(tuples, n);
            std::copy_n(ens.particle(J).begin(), d, batch.point(j).begin());
        }
        auto g = oracle.slot_gradient(batch, 0, {step, i, k});
        for (std::size_t c = 0; c < d; ++c) acc[c] += g[c];
    }
    for (auto& v : acc) v /= static_cast<double>(cfg.K);
    return acc;
}

std::vector<double> mf_drift(const std::vector<ParticleEnsemble>& marginals, std::size_t b,
                             std::size_t i, const FlowConfig& cfg, const UtilityOracle& oracle,
                             std::size_t step) {
    const std::size_t m = marginals.size(), d = marginals[b].dim();
    const std::size_t pid = b * marginals[b].size() + i;
    Stream tuples = rng_substream(cfg.seed, pid, step, Purpose::Tuples);
    std::vector<double> acc(d, 0.0);
    DesignBatch batch(m, d, marginals[b].constraint());
    std::copy_n(marginals[b].particle(i).begin(), d, batch.point(b).begin());
    for (std::size_t k = 0; k < cfg.K; ++k) {
        for (std::size_t c = 0; c < m; ++c) {
            if (c == b) continue;
            const std::size_t J = uniform_index(tuples, marginals[c].size());
            std::copy_n(marginals[c].particle(J).begin(), d, batch.point(c).begin());
        }
        auto g = oracle.slot_gradient(batch, b, {step, pid, k});
        for (std::size_t c = 0; c < d; ++c) acc[c] += g[c];
    }
    for (auto& v : acc) v /= static_cast<double>(cfg.K);
    return acc;
}

std::vector<double> repulsion_drift(const ParticleEnsemble& ens, std::size_t i,
                                    const FlowConfig& cfg, std::size_t step) {
    const std::size_t d = ens.dim();
    Stream s = rng_substream(cfg.seed, i, step, Purpose::Repulsion);
    RepulsionSpec rep{cfg.eta, cfg.delta_rep};
    std::vector<double> acc(d, 0.0), z(d), g(d);
    for (std::size_t l = 0; l < cfg.K_rep; ++l) {
        const std::size_t J = uniform_index(s, ens.size());
        for (std::size_t k = 0; k < d; ++k)
            z[k] = coordinate_difference(ens.particle(i)[k], ens.particle(J)[k], ens.constraint());
        rep.gradient(z, g);
        for (std::size_t k = 0; k < d; ++k) acc[k] += g[k];
    }
    for (auto& v : acc) v /= static_cast<double>(cfg.K_rep);
    return acc;
}

// ---------------------------------------------------------------------------

void step_joint(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem) {
    const double gamma = cfg.step_size(state.step);
    const double temp = cfg.lambda_m();
    std::vector<DesignBatch> next = state.chains;
    for (std::size_t r = 0; r < state.chains.size(); ++r) {
        auto g = problem.oracle.gradient(state.chains[r], {state.step, r, 0});
        check_finite(g, "joint drift", state.step, r);
        Stream noise = rng_substream(cfg.seed, r, state.step, Purpose::Noise);
        langevin_move(next[r].coords(), g, problem.ref, temp, gamma, noise);
        apply_constraint(next[r]);
    }
    state.chains = std::move(next);
    ++state.step;
}

void step_mf(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem, double subsample) {
    const std::size_t m = state.marginals.size();
    const double gamma = cfg.step_size(state.step);
    const double temp = cfg.lambda_m();
    std::vector<std::size_t> coords(m);
    std::iota(coords.begin(), coords.end(), 0);
    if (subsample < 1.0) {
        Stream s = rng_substream(cfg.seed, 0, state.step, Purpose::Subsample);
        std::shuffle(coords.begin(), coords.end(), s);
        const auto k = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(subsample * static_cast<double>(m))));
        coords.resize(std::min(k, m));
        std::sort(coords.begin(), coords.end());
    }
    std::vector<ParticleEnsemble> next = state.marginals;
    for (std::size_t b : coords) {
        const std::size_t n = state.marginals[b].size();
        for (std::size_t i = 0; i < n; ++i) {
            auto g = mf_drift(state.marginals, b, i, cfg, problem.oracle, state.step);
            check_finite(g, "mean-field drift", state.step, b * n + i);
            Stream noise = rng_substream(cfg.seed, b * n + i, state.step, Purpose::Noise);
            auto x = next[b].particle(i);
            langevin_move(x, g, problem.ref, temp, gamma, noise);
            if (state.constraint.kind != ConstraintKind::OrderedMinGap)
                project_point(x, next[b].constraint());
        }
    }
    if (state.constraint.kind == ConstraintKind::OrderedMinGap) repair_rows(next, state.constraint);
    state.marginals = std::move(next);
    ++state.step;
}

void step_iid(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem, double eta) {
    const double gamma = cfg.step_size(state.step);
    const double temp = cfg.lambda;
    const double mm = static_cast<double>(cfg.m);
    const ParticleEnsemble& cur = state.ensemble;
    ParticleEnsemble next = cur;
    for (std::size_t i = 0; i < cur.size(); ++i) {
        auto g = iid_drift(cur, i, cfg, problem.oracle, state.step);
        for (auto& v : g) v *= mm;
        if (eta > 0.0) {
            auto rep = repulsion_drift(cur, i, cfg, state.step);
            for (std::size_t k = 0; k < g.size(); ++k) g[k] -= eta * rep[k];
        }
        check_finite(g, "iid drift", state.step, i);
        Stream noise = rng_substream(cfg.seed, i, state.step, Purpose::Noise);
        auto x = next.particle(i);
        langevin_move(x, g, problem.ref, temp, gamma, noise);
        project_point(x, next.constraint());
    }
    state.ensemble = std::move(next);
    ++state.step;
}

void step_flow(FlowState& state, const FlowConfig& cfg, const FlowProblem& problem) {
    switch (cfg.algorithm) {
        case Algorithm::Joint: step_joint(state, cfg, problem); break;
        case Algorithm::MF: step_mf(state, cfg, problem, 1.0); break;
        case Algorithm::MfSub: step_mf(state, cfg, problem, cfg.mf_subsample); break;
        case Algorithm::Iid: step_iid(state, cfg, problem, 0.0); break;
        case Algorithm::IidRep: step_iid(state, cfg, problem, cfg.eta); break;
    }
}

// ---------------------------------------------------------------------------

DesignBatch probe_batch(const FlowState& state, const UtilityOracle& oracle, Stream& s) {
    switch (state.algorithm) {
        case Algorithm::Joint: {
            std::size_t best = 0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < state.chains.size(); ++r) {
                const double v = oracle.value(state.chains[r], {state.step, ~std::uint64_t{0}, r});
                if (v > best_v) {
                    best_v = v;
                    best = r;
                }
            }
            return state.chains[best];
        }
        case Algorithm::MF:
        case Algorithm::MfSub: {
            DesignBatch b(state.m, state.d, state.constraint);
            for (std::size_t c = 0; c < state.m; ++c) {
                const auto& ens = state.marginals[c];
                std::copy_n(ens.particle(uniform_index(s, ens.size())).begin(), state.d,
                            b.point(c).begin());
            }
            if (state.constraint.kind == ConstraintKind::OrderedMinGap) apply_constraint(b);
            return b;
        }
        default: {
            DesignBatch b(state.m, state.d, state.constraint);
            for (std::size_t c = 0; c < state.m; ++c)
                std::copy_n(state.ensemble.particle(uniform_index(s, state.ensemble.size())).begin(),
                            state.d, b.point(c).begin());
            if (state.constraint.kind == ConstraintKind::OrderedMinGap) apply_constraint(b);
            return b;
        }
    }
}

std::vector<double> state_mean(const FlowState& state) {
    switch (state.algorithm) {
        case Algorithm::Joint: {
            ParticleEnsemble flat(state.chains.size(), state.m * state.d,
                                  state.constraint.kind == ConstraintKind::Torus ? ConstraintSpec::torus()
                                                                                 : ConstraintSpec{});
            for (std::size_t r = 0; r < state.chains.size(); ++r)
                std::copy(state.chains[r].coords().begin(), state.chains[r].coords().end(),
                          flat.particle(r).begin());
            return flat.mean();
        }
        case Algorithm::MF:
        case Algorithm::MfSub: {
            std::vector<double> out;
            for (const auto& e : state.marginals) {
                auto mu = e.mean();
                out.insert(out.end(), mu.begin(), mu.end());
            }
            return out;
        }
        default:
            return state.ensemble.mean();
    }
}

FlowResult run_flow(const FlowConfig& cfg, const FlowProblem& problem, FlowState initial,
                    const FlowRunOptions& options) {
    cfg.validate();
    if (initial.algorithm != cfg.algorithm)
        throw ConfigError("run_flow: initial state was built for a different algorithm");
    if (auto mb = problem.oracle.batch_size(); mb && *mb != cfg.m)
        throw ConfigError("run_flow: oracle is bound to a different batch size");
    FlowResult res;
    res.state = std::move(initial);
    const UtilityOracle& probe = options.probe_oracle ? *options.probe_oracle : problem.oracle;
    const std::size_t log_every = cfg.log_every ? cfg.log_every : std::max<std::size_t>(1, cfg.n_steps / 100);
    const auto t0 = std::chrono::steady_clock::now();

    auto log_row = [&]() {
        if (!options.log) return;
        Stream s = rng_substream(cfg.seed, 0, res.state.step, Purpose::Extraction, 1);
        auto b = probe_batch(res.state, probe, s);
        TrajectoryRow row;
        row.step = res.state.step;
        row.algorithm = to_string(cfg.algorithm);
        row.probe_eig = probe.value(b, {res.state.step, ~std::uint64_t{0}, 0});
        row.mean_coords = state_mean(res.state);
        row.wallclock_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        res.trajectory.push_back(std::move(row));
    };

    const std::size_t start = res.state.step;
    const std::size_t end = start + cfg.n_steps;
    const auto burn = start + static_cast<std::size_t>(std::floor(options.burn_fraction *
                                                                  static_cast<double>(cfg.n_steps)));
    std::size_t stride = 1;
    if (cfg.algorithm == Algorithm::Joint && options.tail_capacity > 0 && end > burn) {
        const std::size_t per = std::max<std::size_t>(1, res.state.chains.size());
        const std::size_t want = std::max<std::size_t>(1, options.tail_capacity / per);
        stride = std::max<std::size_t>(1, (end - burn + want - 1) / want);
    }

    log_row();
    while (res.state.step < end) {
        try {
            step_flow(res.state, cfg, problem);
        } catch (const FlowError&) {
            throw;
        } catch (const std::exception& e) {
            throw FlowError("step " + std::to_string(res.state.step) + ": " + e.what());
        }
        const std::size_t n = res.state.step;
        if (cfg.algorithm == Algorithm::Joint && n > burn && (n - burn) % stride == 0)
            for (const auto& c : res.state.chains) res.tail.push_back(c);
        if ((n - start) % log_every == 0 || n == end) log_row();
    }
    if (res.tail.size() > options.tail_capacity && options.tail_capacity > 0)
        res.tail.erase(res.tail.begin(),
                       res.tail.begin() + static_cast<std::ptrdiff_t>(res.tail.size() - options.tail_capacity));
    return res;
}

// ---------------------------------------------------------------------------

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    const std::size_t k = rows.empty() ? 0 : rows.front().mean_coords.size();
    out << "step,algorithm,probe_eig";
    for (std::size_t c = 0; c < k; ++c) out << ",mean_" << c;
    out << ",wallclock_ms\n";
    out << std::setprecision(17);
    for (const auto& r : rows) {
        out << r.step << "," << r.algorithm << "," << r.probe_eig;
        for (double v : r.mean_coords) out << "," << v;
        out << "," << r.wallclock_ms << "\n";
    }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::string line;
    std::getline(in, line);
    std::vector<TrajectoryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 4) throw ConfigError("malformed trajectory row: " + line);
        TrajectoryRow r;
        r.step = std::stoull(cells[0]);
        r.algorithm = cells[1];
        r.probe_eig = std::stod(cells[2]);
        for (std::size_t c = 3; c + 1 < cells.size(); ++c) r.mean_coords.push_back(std::stod(cells[c]));
        r.wallclock_ms = std::stod(cells.back());
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace boedflows
