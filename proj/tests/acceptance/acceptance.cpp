// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures. An optional argument restricts the run to a
// comma-separated list of criterion numbers.

#include "boedflows/experiment.hpp"
#include "boedflows/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>

using namespace boedflows;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_rel_err(const std::vector<double>& g, const std::vector<double>& fd) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        num = std::max(num, std::abs(g[k] - fd[k]));
        den = std::max(den, std::abs(fd[k]));
    }
    return num / std::max(den, 1e-8);
}

DesignBatch random_angles(std::size_t m, Stream& s) {
    DesignBatch b(m, 1, ConstraintSpec::torus());
    for (auto& x : b.coords()) x = uniform(s, -kPi, kPi);
    return b;
}

// 1 ---------------------------------------------------------------------------

Outcome gradients() {
    TorusLinearModel torus;
    Stream s = rng_substream(101, 0, 0, Purpose::Init);
    double worst_exact = 0.0;
    for (int k = 0; k < 50; ++k) {
        auto b = random_angles(1 + k % 5, s);
        auto fd = fd_gradient(
            [&](std::span<const double> x) {
                return eig_exact_torus(torus, DesignBatch({x.begin(), x.end()}, 1, ConstraintSpec::torus()));
            },
            b.coords(), 1e-5);
        worst_exact = std::max(worst_exact, max_rel_err(grad_eig_exact_torus(torus, b), fd));
    }
    FhnParams fp;
    fp.n_param_draws = 256;
    auto fhn = std::make_shared<FhnModel>(fp);
    std::vector<ModelPtr> models = {std::make_shared<Toy1DModel>(), std::make_shared<TorusLinearModel>(),
                                    std::make_shared<Sensor2DModel>(), std::make_shared<PkModel>(), fhn};
    double worst_nmc = 0.0;
    std::string worst_name;
    for (const auto& model : models) {
        const std::size_t m = 3;
        NmcOracle oracle(model, 20, 50, GradientRandomness::Frozen, 17, m);
        const auto c = model->constraint(), pc = c.per_point();
        double h = 1e-5;
        for (int k = 0; k < 20; ++k) {
            DesignBatch b(m, model->design_dim(), c);
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t q = 0; q < b.dim(); ++q)
                    b(j, q) = pc.kind == ConstraintKind::Box ? uniform(s, pc.lo[q] + 0.1, pc.hi[q] - 0.1)
                                                             : uniform(s, -3.0, 3.0);
            if (model->name() == "sensor2d") {
                // sensors far from both prior modes have gradients below finite-difference roundoff
                for (std::size_t j = 0; j < m; ++j) {
                    b(j, 0) = (j % 2 ? -1.5 : 2.2) + uniform(s, -0.6, 0.6);
                    b(j, 1) = uniform(s, -0.6, 0.6);
                }
            }
            if (model->name() == "fhn") {
                // the interpolated trajectory is piecewise linear; stay inside segments
                const double g = fhn->grid_step();
                for (std::size_t j = 0; j < m; ++j)
                    b(j, 0) = (std::floor(uniform(s, 0.5, 19.5) / g) + uniform(s, 0.25, 0.75)) * g;
                h = 1e-7;
            }
            if (c.kind == ConstraintKind::OrderedMinGap) b = repair(b);
            auto fd = fd_gradient(
                [&](std::span<const double> x) {
                    return oracle.value(DesignBatch({x.begin(), x.end()}, b.dim(), ConstraintSpec{}));
                },
                b.coords(), h);
            const double e = max_rel_err(oracle.gradient(b), fd);
            if (e > worst_nmc) {
                worst_nmc = e;
                worst_name = model->name();
            }
        }
    }
    return {worst_exact <= 1e-6 && worst_nmc <= 1e-5,
            fmt("closed form max rel err %.2e (tol 1e-6); frozen NMC max rel err %.2e on %s (tol 1e-5)",
                worst_exact, worst_nmc, worst_name.c_str())};
}

// 2 ---------------------------------------------------------------------------

Outcome consistency() {
    auto torus = std::make_shared<TorusLinearModel>();
    Stream s = rng_substream(202, 0, 0, Purpose::Init);
    int bad = 0;
    double worst = -1e300;
    for (int k = 0; k < 20; ++k) {
        auto b = random_angles(3, s);
        const auto e = eig_nmc(torus, b, 2000, 2000, 1000 + k);
        const double exact = eig_exact_torus(*torus, b), gap = std::abs(e.value - exact);
        worst = std::max(worst, gap - 3 * e.std_error);
        if (gap > 3 * e.std_error + 0.05) ++bad;
    }
    // standard error against n_outer on a log-log fit
    auto b = random_angles(3, s);
    std::vector<double> lx, ly;
    for (std::size_t n : {250, 500, 1000, 2000, 4000}) {
        double se = 0.0;
        for (int r = 0; r < 5; ++r) se += eig_nmc(torus, b, n, 500, 5000 + 10 * n + r).std_error / 5.0;
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(se));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    const double slope = sxy / sxx;
    return {bad == 0 && std::abs(slope + 0.5) <= 0.1,
            fmt("%d/20 batches outside 3 SE + 0.05 (worst excess %.3f); SE slope %.3f (target -0.5 +- 0.1)", bad,
                worst, slope)};
}

// toy helpers -----------------------------------------------------------------

struct ToySetup {
    std::shared_ptr<Toy1DModel> model = std::make_shared<Toy1DModel>();
    Toy1DLandscapeOracle land{model};
    double global = 0.0;
    double local = 0.0;  // highest local maximum other than the global one

    ToySetup() {
        global = land.argmax();
        const auto& g = land.grid();
        const auto& v = land.values();
        double best = -1e300;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const bool left = k == 0 || v[k] > v[k - 1], right = k + 1 == g.size() || v[k] >= v[k + 1];
            if (left && right && std::abs(g[k] - global) > 0.5 && v[k] > best) {
                best = v[k];
                local = g[k];
            }
        }
    }

    double mass_near(const std::vector<double>& xs, double centre, double r = 0.3) const {
        double n = 0;
        for (double x : xs) n += std::abs(x - centre) <= r;
        return n / static_cast<double>(xs.size());
    }
};

std::vector<double> final_positions(const FlowResult& r) {
    std::vector<double> out;
    for (const auto& c : r.state.chains) out.insert(out.end(), c.coords().begin(), c.coords().end());
    out.insert(out.end(), r.state.ensemble.coords().begin(), r.state.ensemble.coords().end());
    return out;
}

// 3 ---------------------------------------------------------------------------

Outcome gibbs_fixed_point() {
    ToySetup toy;
    FlowConfig cfg;
    cfg.algorithm = Algorithm::Iid;
    cfg.m = 1;
    cfg.N = 500;
    cfg.lambda = 0.5;
    cfg.gamma = 0.01;
    cfg.n_steps = 20000;
    cfg.seed = 303;
    const auto ref = ReferenceMeasure::gaussian({0.0}, 1.0);
    FlowRunOptions opt;
    opt.log = false;
    auto res = run_flow(cfg, {toy.land, ref}, init_flow(cfg, 1, toy.model->constraint(), {}), opt);
    const auto& g = toy.land.grid();
    std::vector<double> rho;
    for (double x : g) rho.push_back(std::exp(-0.5 * x * x));
    const auto gibbs = gibbs_density_1d(g, toy.land.values(), rho, cfg.lambda);
    const double w1 = wasserstein1_1d(res.state.ensemble.coords(), gibbs);
    return {w1 <= 0.15, fmt("W1(ensemble, Gibbs) = %.4f (tol 0.15), N = 500, 20000 steps", w1)};
}

// 4 ---------------------------------------------------------------------------

Outcome zero_temperature() {
    ToySetup toy;
    // At lambda = 0.02 the barrier out of the side bumps is about 8 lambda, so a
    // cold start keeps its initial basin fractions. Each temperature is warm
    // started from the previous one's final chains; cold starts are reported too.
    auto run = [&](double lambda, std::optional<FlowState> from) {
        FlowConfig cfg;
        cfg.algorithm = Algorithm::Joint;
        cfg.m = 1;
        cfg.N = 500;
        cfg.lambda = lambda;
        cfg.gamma = 0.01;
        cfg.n_steps = 20000;
        cfg.seed = 404;
        FlowRunOptions opt;
        opt.log = false;
        opt.tail_capacity = 0;
        FlowState init = from ? *from : init_flow(cfg, 1, toy.model->constraint(), {});
        init.step = 0;
        return run_flow(cfg, {toy.land, ReferenceMeasure::gaussian({0.0}, 1.0)}, std::move(init), opt);
    };
    std::vector<double> warm, cold;
    std::optional<FlowState> prev;
    for (double lambda : {0.5, 0.1, 0.02}) {
        auto w = run(lambda, prev);
        warm.push_back(toy.mass_near(final_positions(w), toy.global));
        prev = w.state;
        cold.push_back(toy.mass_near(final_positions(run(lambda, std::nullopt)), toy.global));
    }
    return {warm[1] >= warm[0] && warm[2] >= warm[1],
            fmt("mass within 0.3 of the maximiser %.3f for lambda 0.5, 0.1, 0.02: %.3f, %.3f, %.3f "
                "(cold starts: %.3f, %.3f, %.3f)",
                toy.global, warm[0], warm[1], warm[2], cold[0], cold[1], cold[2])};
}

// 5 ---------------------------------------------------------------------------

Outcome escape() {
    ToySetup toy;
    FlowConfig cfg;
    cfg.algorithm = Algorithm::Iid;
    cfg.m = 1;
    cfg.N = 200;
    cfg.lambda = 0.05;
    cfg.gamma = 0.1;
    cfg.n_steps = 10000;
    cfg.seed = 505;
    const auto init = InitSpec::uniform_box({toy.local - 0.2}, {toy.local + 0.2});
    FlowRunOptions opt;
    opt.log = false;
    auto res = run_flow(cfg, {toy.land, {}}, init_flow(cfg, 1, toy.model->constraint(), init), opt);
    const double wgf = toy.mass_near(res.state.ensemble.coords(), toy.global);
    // gradient ascent from the same initial law
    Stream s = rng_substream(cfg.seed, 0, 0, Purpose::Init);
    std::vector<double> ga;
    for (int r = 0; r < 200; ++r) {
        DesignBatch x(std::vector<double>{uniform(s, toy.local - 0.2, toy.local + 0.2)}, 1, toy.model->constraint());
        ga.push_back(gradient_ascent(x, toy.land, 10000, cfg.gamma)(0, 0));
    }
    const double gaf = toy.mass_near(ga, toy.global);
    return {wgf >= 0.5 && gaf < 0.1,
            fmt("from U[%.2f +- 0.2]: WGF %.1f%% near the global maximiser %.2f, gradient ascent %.1f%%", toy.local,
                100 * wgf, toy.global, 100 * gaf)};
}

// 6 ---------------------------------------------------------------------------

Outcome redundancy() {
    auto spec = ExperimentSpec::from_config(KeyValueConfig::parse(
        "model = torus\nmethods = repeat_best_single, iid\nm = 3, 5, 10\nseeds = 5\nseed = 606\n"
        "lambda = 0.1\ngamma = 0.05\nn_steps = 2000\nN = 20\nK = 2\neig.exact = true\n"
        "extract.n_eval = 500\nwrite_trajectories = false\n"));
    auto rep = run_experiment(spec, false);
    int wins = 0, total = 0;
    std::ostringstream worst;
    double margin = 1e300;
    for (std::size_t m : spec.ms)
        for (auto seed : spec.seeds) {
            double single = NAN, iid = NAN;
            for (const auto& r : rep.rows)
                if (r.m == m && r.seed == static_cast<std::int64_t>(seed) && r.ok())
                    (r.method == "iid" ? iid : single) = r.eig;
            ++total;
            if (iid > single) ++wins;
            if (iid - single < margin) margin = iid - single;
        }
    return {wins == total, fmt("iid beats repeat-best-single in %d/%d cells (smallest margin %.3f nats)", wins,
                               total, margin)};
}

// 7 ---------------------------------------------------------------------------

Outcome drift() {
    auto torus = std::make_shared<TorusLinearModel>();
    TorusExactOracle oracle(torus);
    std::string detail;
    bool ok = true;
    for (auto [N, m] : {std::pair<std::size_t, std::size_t>{3, 2}, {4, 3}}) {
        FlowConfig cfg;
        cfg.algorithm = Algorithm::Iid;
        cfg.m = m;
        cfg.N = N;
        cfg.K = 1;
        cfg.seed = 707;
        auto st = init_flow(cfg, 1, ConstraintSpec::torus(), {});
        double worst = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double exact = enumerate_iid_drift(st.ensemble, i, m, oracle)[0];
            const int n = 10000;
            double mean = 0, sq = 0;
            for (int k = 0; k < n; ++k) {
                const double v = iid_drift(st.ensemble, i, cfg, oracle, static_cast<std::size_t>(k))[0];
                mean += v / n;
                sq += v * v / n;
            }
            const double se = std::sqrt(std::max(sq - mean * mean, 0.0) / n);
            const double z = se > 0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : 1e9);
            worst = std::max(worst, z);
        }
        ok = ok && worst <= 3.0;
        detail += fmt("(N,m)=(%zu,%zu) max |z| %.2f; ", N, m, worst);
    }
    return {ok, detail + "tol 3 SE"};
}

// 8 ---------------------------------------------------------------------------

Outcome best_of_n() {
    bool ok = true;
    std::string detail;
    for (auto [p, n] : {std::pair<double, std::size_t>{0.3, 10}, {0.1, 20}}) {
        // ten equally weighted atoms, the first 10p of which are epsilon-optimal
        const std::size_t good = static_cast<std::size_t>(std::lround(10 * p)), atoms = 10;
        std::vector<double> values(atoms);
        for (std::size_t a = 0; a < atoms; ++a) values[a] = a < good ? 1.0 - 0.01 * a : 0.1 * a / atoms;
        FunctionOracle oracle(1, [&](const DesignBatch& b) {
            return values[static_cast<std::size_t>(std::lround(b(0, 0)))];
        });
        Stream s = rng_substream(808, n, 0, Purpose::Extraction);
        const int reps = 10000;
        int hits = 0;
        for (int r = 0; r < reps; ++r) {
            CandidateSet set;
            for (std::size_t k = 0; k < n; ++k)
                set.candidates.emplace_back(std::vector<double>{static_cast<double>(uniform_index(s, atoms))}, 1);
            const auto res = extract_best_of_n(set, oracle, oracle, std::min<std::size_t>(3, n));
            hits += res.estimate.value >= 0.9;
        }
        const double q = bon_success_probability(p, n), f = static_cast<double>(hits) / reps;
        const double se = std::sqrt(q * (1 - q) / reps);
        ok = ok && std::abs(f - q) <= 3 * se;
        detail += fmt("(p,n)=(%.1f,%zu) freq %.4f vs %.4f (3 SE %.4f); ", p, n, f, q, 3 * se);
    }
    return {ok, detail};
}

// 9 ---------------------------------------------------------------------------

Outcome pk_ordering() {
    auto spec = ExperimentSpec::from_config(KeyValueConfig::parse(
        "model = pk\nmethods = uniform, mf\nm = 15\nseeds = 5\nseed = 909\n"
        "lambda = 0.05\ngamma = 0.01\nn_steps = 1000\nN = 20\nK = 1\n"
        "eig.n_outer = 20\neig.n_inner = 50\neig.mode = frozen\n"
        "extract.n_eval = 50\nextract.shortlist = 10\nextract.high_outer = 500\nextract.high_inner = 1000\n"
        "report.n_outer = 1000\nreport.n_inner = 2000\nreport.replications = 20\n"
        "write_trajectories = false\n"));
    auto rep = run_experiment(spec, false);
    int wins = 0;
    std::string detail;
    for (auto seed : spec.seeds) {
        double u = NAN, mf = NAN;
        for (const auto& r : rep.rows)
            if (r.seed == static_cast<std::int64_t>(seed) && r.ok()) (r.method == "mf" ? mf : u) = r.eig;
        wins += mf > u;
        detail += fmt("%.3f/%.3f ", mf, u);
    }
    return {wins >= 4, fmt("MF beats Uniform in %d/5 seeds (MF/Uniform: ", wins) + detail + ")"};
}

// 10 --------------------------------------------------------------------------

Outcome invariants() {
    Stream s = rng_substream(1010, 0, 0, Purpose::Init);
    int bad_repair = 0;
    for (int k = 0; k < 10000; ++k) {
        const std::size_t m = 1 + uniform_index(s, 20);
        const double gap = uniform(s, 0.0, 0.5), T = uniform(s, gap * static_cast<double>(m), 30.0);
        const auto c = ConstraintSpec::ordered_min_gap(gap, T);
        DesignBatch b(m, 1, c);
        for (auto& x : b.coords()) x = uniform(s, -5.0, T + 5.0);
        const auto r = repair(b);
        bad_repair += !is_feasible(r) || !(repair(r) == r);
    }
    int bad_wrap = 0;
    for (int k = 0; k < 10000; ++k) {
        const double x = uniform(s, -50.0, 50.0);
        const double w = wrap_torus(x), w2 = wrap_torus(x + kTwoPi * static_cast<double>(uniform_index(s, 7)) - 3 * kTwoPi);
        bad_wrap += !(w >= -kPi && w < kPi) || std::abs(w - w2) > 1e-9 || std::abs(std::sin(w) - std::sin(x)) > 1e-9;
    }
    int bad_baseline = 0, runs = 0;
    auto pk = std::make_shared<PkModel>();
    NmcOracle oracle(pk, 10, 20, GradientRandomness::Frozen, 1010, 8);
    for (const char* name : {"uniform", "geometric_drs", "beta_drs", "ce_grid", "ce_gp", "ce_gp_g", "sga_adam", "smc"}) {
        BaselineConfig cfg;
        cfg.method = name;
        cfg.budget = std::string(name) == "sga_adam" ? 100 : std::string(name).ends_with("drs") ? 50 : 1;
        cfg.grid_size = 40;
        cfg.gp.r_train = 6;
        cfg.gp.grid = 50;
        cfg.smc.n_particles = 8;
        cfg.smc.n_temps = 4;
        for (std::uint64_t seed : {1, 2, 3}) {
            auto r = run_baseline(cfg, 8, 1, pk->constraint(), oracle, seed);
            ++runs;
            bool ok = is_feasible(r.design);
            for (const auto& c : r.candidates) ok = ok && is_feasible(c);
            bad_baseline += !ok;
        }
    }
    return {bad_repair == 0 && bad_wrap == 0 && bad_baseline == 0,
            fmt("repair failures %d/10000, wrap failures %d/10000, infeasible baseline runs %d/%d", bad_repair,
                bad_wrap, bad_baseline, runs)};
}

// 11 --------------------------------------------------------------------------

Outcome determinism() {
    auto spec = ExperimentSpec::from_config(KeyValueConfig::parse(
        "model = pk\nmethods = iid_rep, smc\nm = 6\nseeds = 1\nseed = 1111\n"
        "lambda = 0.05\ngamma = 0.01\nn_steps = 100\nN = 10\nK = 1\niid_rep.eta = 0.01\n"
        "eig.n_outer = 10\neig.n_inner = 20\neig.mode = fresh\nsmc.budget = 2\nsmc.n_particles = 8\n"
        "extract.n_eval = 10\nextract.shortlist = 3\nextract.high_outer = 50\nextract.high_inner = 50\n"
        "report.n_outer = 100\nreport.n_inner = 100\nreport.replications = 2\nwrite_trajectories = false\n"));
    auto a = run_experiment(spec, false), b = run_experiment(spec, false);
    bool same = a.rows.size() == b.rows.size();
    for (std::size_t k = 0; same && k < a.rows.size(); ++k) same = a.rows[k].same_result(b.rows[k]) && a.rows[k].ok();
    auto torus = ExperimentSpec::from_config(KeyValueConfig::load(BOEDFLOWS_CONFIG_DIR "/quick_torus.cfg"));
    torus.write_trajectories = false;
    auto c = run_experiment(torus, false), d = run_experiment(torus, false);
    bool same_t = c.rows.size() == d.rows.size();
    for (std::size_t k = 0; same_t && k < c.rows.size(); ++k) same_t = c.rows[k].same_result(d.rows[k]);
    return {same && same_t, fmt("pk rows identical: %s; quick_torus rows identical: %s", same ? "yes" : "no",
                                same_t ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    if (argc > 1) {
        std::stringstream ss(argv[1]);
        for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient correctness", gradients},
        {"estimator consistency", consistency},
        {"Gibbs fixed point", gibbs_fixed_point},
        {"zero-temperature concentration", zero_temperature},
        {"multimodality escape", escape},
        {"batch redundancy ordering", redundancy},
        {"drift unbiasedness", drift},
        {"best-of-n law", best_of_n},
        {"PK ordering", pk_ordering},
        {"constraint and repair invariants", invariants},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.c_str(), sec);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures;
}
