#include "boedflows/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace boedflows {

using nlohmann::json;

namespace {

const std::vector<std::string> kFlowMethods = {"joint", "mf", "mf_sub", "iid", "iid_rep"};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

bool has_exact(const Model& model, std::size_t m) {
    if (dynamic_cast<const TorusLinearModel*>(&model)) return true;
    return m == 1 && dynamic_cast<const Toy1DModel*>(&model);
}

}  // namespace

bool is_flow_method(const std::string& method) {
    return std::find(kFlowMethods.begin(), kFlowMethods.end(), method) != kFlowMethods.end();
}

ExperimentSpec ExperimentSpec::from_config(const KeyValueConfig& cfg) {
    ExperimentSpec s;
    s.cfg = cfg;
    s.model = cfg.require("model");
    s.methods = cfg.get_list("methods", cfg.get_list("method", {}));
    if (s.methods.empty()) throw ConfigError("missing required config key: methods");
    for (const auto& method : s.methods)
        if (!is_flow_method(method) && method != "repeat_best_single" && method != "uniform" &&
            method != "geometric_drs" && method != "beta_drs" && method != "ce_grid" && method != "ce_gp" &&
            method != "ce_gp_g" && method != "sga_adam" && method != "smc")
            throw ConfigError("unknown method: " + method);
    for (double m : cfg.get_doubles("m", {})) {
        if (!(m >= 1.0) || m != std::floor(m)) throw ConfigError("m entries must be positive integers");
        s.ms.push_back(static_cast<std::size_t>(m));
    }
    if (s.ms.empty()) throw ConfigError("missing required config key: m");
    const std::uint64_t base = cfg.get_uint("seed", 0);
    const std::uint64_t n_seeds = cfg.get_uint("seeds", 5);
    if (n_seeds == 0) throw ConfigError("seeds must be >= 1");
    for (std::uint64_t k = 0; k < n_seeds; ++k) s.seeds.push_back(base + k);
    s.output_dir = cfg.get_string("output", s.output_dir);
    if (cfg.has("eig.exact")) s.exact = cfg.get_bool("eig.exact", false);
    s.n_eval = cfg.get_uint("extract.n_eval", s.n_eval);
    s.shortlist = cfg.get_uint("extract.shortlist", s.shortlist);
    s.burn_fraction = cfg.get_double("extract.burn_fraction", s.burn_fraction);
    s.low_outer = cfg.get_uint("extract.low_outer", s.low_outer);
    s.low_inner = cfg.get_uint("extract.low_inner", s.low_inner);
    s.high_outer = cfg.get_uint("extract.high_outer", s.high_outer);
    s.high_inner = cfg.get_uint("extract.high_inner", s.high_inner);
    s.report_outer = cfg.get_uint("report.n_outer", s.report_outer);
    s.report_inner = cfg.get_uint("report.n_inner", s.report_inner);
    s.replications = cfg.get_uint("report.replications", s.replications);
    s.report_seed = cfg.get_uint("report.seed", s.report_seed);
    if (s.n_eval == 0 || s.shortlist == 0 || s.replications == 0)
        throw ConfigError("extract.n_eval, extract.shortlist and report.replications must be >= 1");
    if (!(s.burn_fraction >= 0.0 && s.burn_fraction < 1.0))
        throw ConfigError("extract.burn_fraction must lie in [0, 1)");
    const std::string ref = cfg.get_string("ref", "uniform");
    if (ref == "gaussian")
        s.ref = ReferenceMeasure::gaussian(cfg.get_doubles("ref.mean", {0.0}), cfg.get_double("ref.sigma", 1.0));
    else if (ref != "uniform")
        throw ConfigError("ref must be uniform or gaussian");
    const std::string init = cfg.get_string("init", "uniform");
    if (init == "normal")
        s.init = InitSpec::normal(cfg.get_doubles("init.mean", {0.0}), cfg.get_double("init.sd", 1.0));
    else if (init == "uniform" && cfg.has("init.lo"))
        s.init = InitSpec::uniform_box(cfg.get_doubles("init.lo", {}), cfg.get_doubles("init.hi", {}));
    else if (init != "uniform")
        throw ConfigError("init must be uniform or normal");
    s.threads = cfg.get_uint("threads", 0);
    s.write_trajectories = cfg.get_bool("write_trajectories", true);
    return s;
}

bool ReportRow::same_result(const ReportRow& o) const {
    ReportRow a = *this, b = o;
    a.wallclock_ms = b.wallclock_ms = 0.0;
    return a == b;
}

std::size_t ExperimentReport::failed() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.ok(); }));
}

EigEstimate report_score(const ExperimentSpec& spec, ModelPtr model, const DesignBatch& design) {
    const bool exact = spec.exact.value_or(true) && has_exact(*model, design.size());
    if (exact) return make_oracle(model, design.size(), 1, 1, GradientRandomness::Frozen, 0, true)->estimate(design);
    return eig_nmc_replicated(model, design, spec.report_outer, spec.report_inner, spec.report_seed,
                              spec.replications);
}

CellOutput run_cell(const ExperimentSpec& spec, const std::string& method, std::size_t m, std::uint64_t seed) {
    CellOutput out;
    ReportRow& row = out.row;
    row.method = method;
    row.m = m;
    row.seed = static_cast<std::int64_t>(seed);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        ModelPtr model = make_model(spec.model, spec.cfg);
        const ConstraintSpec c = model->constraint();
        c.validate_batch_size(m);
        const std::size_t d = model->design_dim();
        const bool exact = spec.exact.value_or(true) && has_exact(*model, m);
        if (spec.exact.value_or(false) && !has_exact(*model, m))
            throw ConfigError("eig.exact requested but " + model->name() + " has no closed form at m = " +
                              std::to_string(m));
        // `<method>.key` entries override `key` for that method only
        KeyValueConfig local = spec.cfg;
        for (const auto& [k, v] : spec.cfg.entries())
            if (k.size() > method.size() + 1 && k.compare(0, method.size() + 1, method + ".") == 0)
                local.set(k.substr(method.size() + 1), v);
        local.set("m", std::to_string(m));
        local.set("seed", std::to_string(seed));
        FlowConfig fc = FlowConfig::from_config(local);
        DesignBatch design;
        if (is_flow_method(method)) {
            fc.algorithm = parse_algorithm(method);
            fc.validate();
            auto oracle = make_oracle(model, m, fc.n_outer, fc.n_inner, fc.gradient_randomness, seed, exact);
            FlowRunOptions opts;
            opts.burn_fraction = spec.burn_fraction;
            opts.log = spec.write_trajectories;
            FlowResult res = run_flow(fc, {*oracle, spec.ref}, init_flow(fc, d, c, spec.init), opts);
            CandidateSet cands = candidates_from_flow(res, spec.n_eval, seed, spec.burn_fraction);
            auto low = make_oracle(model, m, spec.low_outer, spec.low_inner, GradientRandomness::Frozen,
                                   mix64(seed ^ 0x4c4f57ULL), exact);
            auto high = make_oracle(model, m, spec.high_outer, spec.high_inner, GradientRandomness::Frozen,
                                    mix64(seed ^ 0x48494748ULL), exact);
            auto ext = extract_best_of_n(cands, *low, *high, std::min(spec.shortlist, cands.candidates.size()));
            design = ext.design;
            row.iterations = fc.n_steps;
            out.trajectory = std::move(res.trajectory);
        } else if (method == "repeat_best_single") {
            const bool exact1 = spec.exact.value_or(true) && has_exact(*model, 1);
            auto single = make_oracle(model, 1, spec.high_outer, spec.high_inner, GradientRandomness::Frozen,
                                      seed, exact1);
            design = repeat_best_single(*single, m, c, spec.cfg.get_uint("repeat_best_single.grid", 4000));
            row.iterations = 1;
        } else {
            auto oracle = make_oracle(model, m, fc.n_outer, fc.n_inner, fc.gradient_randomness, seed, exact);
            BaselineConfig bc = BaselineConfig::from_config(local, method);
            BaselineResult res = run_baseline(bc, m, d, c, *oracle, seed);
            design = res.design;
            row.iterations = res.iterations;
            if (method != "uniform" && !res.candidates.empty()) {
                // common best-of-n over the method's own candidates, most recent kept when thinning
                CandidateSet cands;
                cands.provenance = method == "smc" ? Provenance::ParticlePopulation : Provenance::Explicit;
                const std::size_t n = res.candidates.size(), keep = std::min(spec.n_eval, n);
                for (std::size_t k = 0; k < keep; ++k) cands.candidates.push_back(res.candidates[n - keep + k]);
                auto low = make_oracle(model, m, spec.low_outer, spec.low_inner, GradientRandomness::Frozen,
                                       mix64(seed ^ 0x4c4f57ULL), exact);
                auto high = make_oracle(model, m, spec.high_outer, spec.high_inner, GradientRandomness::Frozen,
                                        mix64(seed ^ 0x48494748ULL), exact);
                design = extract_best_of_n(cands, *low, *high, std::min(spec.shortlist, keep)).design;
            }
        }
        if (!is_feasible(design)) throw FlowError("method returned an infeasible design");
        const EigEstimate est = report_score(spec, model, design);
        row.eig = est.value;
        row.se = est.std_error;
        row.design = design;
    } catch (const std::exception& e) {
        row.status = e.what();
        row.design = {};
        row.eig = row.se = 0.0;
    }
    row.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<ReportRow> aggregate_rows(const std::vector<ReportRow>& rows) {
    std::vector<ReportRow> aggs;
    for (const auto& r : rows) {
        if (r.kind != "cell") continue;
        auto it = std::find_if(aggs.begin(), aggs.end(),
                               [&](const ReportRow& a) { return a.method == r.method && a.m == r.m; });
        if (it == aggs.end()) {
            ReportRow a;
            a.kind = "aggregate";
            a.method = r.method;
            a.m = r.m;
            aggs.push_back(a);
        }
    }
    for (auto& a : aggs) {
        std::vector<const ReportRow*> ok;
        for (const auto& r : rows)
            if (r.kind == "cell" && r.method == a.method && r.m == a.m && r.ok()) ok.push_back(&r);
        if (ok.empty()) {
            a.status = "all cells failed";
            continue;
        }
        const double n = static_cast<double>(ok.size());
        double mean = 0.0, it = 0.0, wall = 0.0;
        for (auto* r : ok) {
            mean += r->eig / n;
            it += static_cast<double>(r->iterations) / n;
            wall += r->wallclock_ms / n;
        }
        double ss = 0.0;
        for (auto* r : ok) ss += (r->eig - mean) * (r->eig - mean);
        a.eig = mean;
        a.se = ok.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        a.iterations = static_cast<std::size_t>(std::llround(it));
        a.wallclock_ms = wall;
    }
    return aggs;
}

std::size_t worker_count(std::size_t requested) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BOEDFLOWS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, n);
}

ExperimentReport run_experiment(const ExperimentSpec& spec, bool write) {
    struct Cell {
        std::string method;
        std::size_t m;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& method : spec.methods)
        for (std::size_t m : spec.ms)
            for (std::uint64_t s : spec.seeds) cells.push_back({method, m, s});
    std::vector<CellOutput> outs(cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t k; (k = next.fetch_add(1)) < cells.size();)
            outs[k] = run_cell(spec, cells[k].method, cells[k].m, cells[k].seed);
    };
    const std::size_t n_workers = std::min(worker_count(spec.threads), cells.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    ExperimentReport report;
    for (auto& o : outs) report.rows.push_back(o.row);
    report.aggregates = aggregate_rows(report.rows);
    if (write) {
        write_outputs(spec, report);
        if (spec.write_trajectories)
            for (std::size_t k = 0; k < cells.size(); ++k)
                if (!outs[k].trajectory.empty())
                    write_trajectory_csv((std::filesystem::path(spec.output_dir) /
                                          ("trajectory_" + cells[k].method + "_m" + std::to_string(cells[k].m) +
                                           "_" + std::to_string(cells[k].seed) + ".csv"))
                                             .string(),
                                         outs[k].trajectory);
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

json constraint_to_json(const ConstraintSpec& c) {
    json j{{"kind", to_string(c.kind)}};
    if (c.kind == ConstraintKind::Box) {
        j["lo"] = c.lo;
        j["hi"] = c.hi;
    } else if (c.kind == ConstraintKind::OrderedMinGap) {
        j["min_gap"] = c.min_gap;
        j["t_max"] = c.t_max;
    }
    return j;
}

ConstraintSpec constraint_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "box") return ConstraintSpec::box(j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>());
    if (kind == "torus") return ConstraintSpec::torus();
    if (kind == "ordered_min_gap")
        return ConstraintSpec::ordered_min_gap(j.at("min_gap").get<double>(), j.at("t_max").get<double>());
    if (kind == "unconstrained") return ConstraintSpec::unconstrained();
    throw ConfigError("unknown constraint kind: " + kind);
}

json design_json(const DesignBatch& b) {
    json pts = json::array();
    for (std::size_t j = 0; j < b.size(); ++j) pts.push_back(std::vector<double>(b.point(j).begin(), b.point(j).end()));
    return json{{"constraint", constraint_to_json(b.constraint())}, {"points", pts}};
}

DesignBatch design_from(const json& j) {
    const auto pts = j.at("points").get<std::vector<std::vector<double>>>();
    if (pts.empty()) throw ConfigError("design has no points");
    const std::size_t d = pts.front().size();
    std::vector<double> coords;
    for (const auto& p : pts) {
        if (p.size() != d || d == 0) throw ConfigError("design points have inconsistent dimension");
        coords.insert(coords.end(), p.begin(), p.end());
    }
    ConstraintSpec c = j.contains("constraint") ? constraint_from_json(j.at("constraint")) : ConstraintSpec{};
    return DesignBatch(std::move(coords), d, c);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    return f;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::string design_to_json(const DesignBatch& batch) { return design_json(batch).dump(); }

DesignBatch design_from_json(const std::string& text) {
    try {
        return design_from(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad design json: ") + e.what());
    }
}

DesignBatch load_design(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open design file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return design_from_json(ss.str());
}

void save_design(const std::string& path, const DesignBatch& batch) {
    auto f = open_out(path);
    f << design_json(batch).dump(2) << '\n';
}

std::string design_to_cell(const DesignBatch& b) {
    std::string s;
    for (std::size_t j = 0; j < b.size(); ++j) {
        if (j) s += '|';
        for (std::size_t k = 0; k < b.dim(); ++k) {
            if (k) s += ' ';
            s += fmt(b(j, k));
        }
    }
    return s;
}

DesignBatch design_from_cell(const std::string& cell, std::size_t d, const ConstraintSpec& c) {
    if (cell.empty()) return {};
    std::vector<double> coords;
    std::string tok;
    for (char ch : cell) {
        if (ch == '|' || ch == ' ') {
            coords.push_back(std::stod(tok));
            tok.clear();
        } else {
            tok += ch;
        }
    }
    coords.push_back(std::stod(tok));
    if (coords.size() % d != 0) throw ConfigError("design cell does not match dimension");
    return DesignBatch(std::move(coords), d, c);
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    auto f = open_out(path);
    f << "kind,method,m,seed,eig,se,iterations,wallclock_ms,design,status\n";
    for (const auto& r : rows)
        f << r.kind << ',' << r.method << ',' << r.m << ',' << r.seed << ',' << fmt(r.eig) << ',' << fmt(r.se)
          << ',' << r.iterations << ',' << fmt(r.wallclock_ms) << ',' << design_to_cell(r.design) << ','
          << csv_field(r.status) << '\n';
}

std::vector<ReportRow> read_report_csv(const std::string& path, std::size_t d, const ConstraintSpec& c) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::string line;
    std::getline(f, line);
    std::vector<ReportRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto t = split_csv_line(line);
        if (t.size() != 10) throw ConfigError("malformed report row: " + line);
        ReportRow r;
        r.kind = t[0];
        r.method = t[1];
        r.m = std::stoul(t[2]);
        r.seed = std::stoll(t[3]);
        r.eig = std::stod(t[4]);
        r.se = std::stod(t[5]);
        r.iterations = std::stoul(t[6]);
        r.wallclock_ms = std::stod(t[7]);
        r.design = design_from_cell(t[8], d, c);
        r.status = t[9];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_outputs(const ExperimentSpec& spec, const ExperimentReport& report) {
    namespace fs = std::filesystem;
    const fs::path dir(spec.output_dir);
    fs::create_directories(dir);
    std::vector<ReportRow> all = report.rows;
    all.insert(all.end(), report.aggregates.begin(), report.aggregates.end());
    write_report_csv((dir / "report.csv").string(), all);

    json designs = json::array();
    for (const auto& r : report.rows)
        if (r.ok())
            designs.push_back({{"method", r.method}, {"m", r.m}, {"seed", r.seed}, {"design", design_json(r.design)}});
    open_out((dir / "designs.json").string()) << designs.dump(2) << '\n';

    auto eig_m = open_out((dir / "plotdata_eig_vs_m.csv").string());
    eig_m << "method,m,mean_eig,se\n";
    for (const auto& a : report.aggregates)
        if (a.ok()) eig_m << a.method << ',' << a.m << ',' << fmt(a.eig) << ',' << fmt(a.se) << '\n';

    auto box = open_out((dir / "plotdata_boxplot.csv").string());
    box << "method,m,n,min,q1,median,q3,max\n";
    for (const auto& a : report.aggregates) {
        std::vector<double> v;
        for (const auto& r : report.rows)
            if (r.ok() && r.method == a.method && r.m == a.m) v.push_back(r.eig);
        if (v.empty()) continue;
        box << a.method << ',' << a.m << ',' << v.size() << ',' << fmt(quantile(v, 0.0)) << ','
            << fmt(quantile(v, 0.25)) << ',' << fmt(quantile(v, 0.5)) << ',' << fmt(quantile(v, 0.75)) << ','
            << fmt(quantile(v, 1.0)) << '\n';
    }

    auto ticks = open_out((dir / "plotdata_ticks.csv").string());
    ticks << "method,m,seed,slot,coord,value\n";
    for (const auto& r : report.rows)
        if (r.ok())
            for (std::size_t j = 0; j < r.design.size(); ++j)
                for (std::size_t k = 0; k < r.design.dim(); ++k)
                    ticks << r.method << ',' << r.m << ',' << r.seed << ',' << j << ',' << k << ','
                          << fmt(r.design(j, k)) << '\n';
}

std::vector<std::pair<double, double>> toy_landscape(const Toy1DModel& model, std::size_t grid,
                                                     std::size_t n_nodes) {
    if (grid < 2) throw ConfigError("landscape grid must have at least 2 points");
    const ConstraintSpec c = model.constraint();
    const auto rule = gauss_hermite(n_nodes);
    std::vector<std::pair<double, double>> out(grid);
    for (std::size_t k = 0; k < grid; ++k) {
        const double x = c.lo[0] + (c.hi[0] - c.lo[0]) * static_cast<double>(k) / static_cast<double>(grid - 1);
        out[k] = {x, eig_quadrature_1d(model, x, rule)};
    }
    return out;
}

}  // namespace boedflows
