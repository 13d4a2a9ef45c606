#include "boedflows/config.hpp"

#include "boedflows/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace boedflows {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
    KeyValueConfig cfg;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected `key = value`");
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void KeyValueConfig::set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
}

void KeyValueConfig::apply_override(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override must look like key=value: " + std::string(assignment));
    std::string key = trim(assignment.substr(0, eq));
    if (key.empty()) throw ConfigError("override has an empty key");
    values_[key] = trim(assignment.substr(eq + 1));
}

std::optional<std::string> KeyValueConfig::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

const std::string& KeyValueConfig::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key: " + key);
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto v = find(key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        double x = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + *v);
    }
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
    if (ec != std::errc() || p != v->data() + v->size()) {
        // allow scientific notation for large budgets, e.g. 2e4
        double d = get_double(key, 0.0);
        if (d != std::floor(d)) throw ConfigError("config key " + key + ": not an integer: " + *v);
        return static_cast<std::int64_t>(d);
    }
    return x;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    std::int64_t x = get_int(key, 0);
    if (x < 0) throw ConfigError("config key " + key + ": must be non-negative");
    return static_cast<std::uint64_t>(x);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    std::string s = lower(*v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("config key " + key + ": not a boolean: " + *v);
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  std::vector<std::string> fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& s : get_list(key, {})) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": not a number list: " + s);
        }
    }
    return out;
}

std::string KeyValueConfig::serialise() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Joint: return "joint";
        case Algorithm::MF: return "mf";
        case Algorithm::MfSub: return "mfsub";
        case Algorithm::Iid: return "iid";
        case Algorithm::IidRep: return "iidrep";
    }
    return "unknown";
}

std::string to_string(GradientRandomness g) {
    return g == GradientRandomness::Frozen ? "frozen" : "fresh";
}

Algorithm parse_algorithm(std::string_view name) {
    std::string s = lower(std::string(name));
    std::erase(s, '_');
    std::erase(s, '-');
    if (s == "joint") return Algorithm::Joint;
    if (s == "mf") return Algorithm::MF;
    if (s == "mfsub") return Algorithm::MfSub;
    if (s == "iid") return Algorithm::Iid;
    if (s == "iidrep") return Algorithm::IidRep;
    throw ConfigError("unknown algorithm: " + std::string(name));
}

GradientRandomness parse_randomness(std::string_view name) {
    std::string s = lower(std::string(name));
    if (s == "frozen") return GradientRandomness::Frozen;
    if (s == "fresh") return GradientRandomness::Fresh;
    throw ConfigError("unknown gradient randomness mode: " + std::string(name));
}

double FlowConfig::step_size(std::size_t n) const {
    if (gamma_decay == 1.0) return gamma;
    return gamma * std::pow(gamma_decay, static_cast<double>(n));
}

void FlowConfig::validate() const {
    auto need = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(m >= 1, "m must be >= 1");
    need(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
    need(gamma > 0.0 && std::isfinite(gamma), "gamma must be > 0");
    need(N >= 1, "N must be >= 1");
    need(K >= 1, "K must be >= 1");
    need(K_rep >= 1, "K_rep must be >= 1");
    need(eta >= 0.0, "eta must be >= 0");
    need(delta_rep > 0.0, "delta_rep must be > 0");
    need(n_outer >= 1 && n_inner >= 1, "n_outer and n_inner must be >= 1");
    need(algorithm != Algorithm::IidRep || eta > 0.0, "algorithm iidrep requires eta > 0");
    need(mf_subsample > 0.0 && mf_subsample <= 1.0, "mf_subsample must lie in (0, 1]");
    need(gamma_decay > 0.0 && gamma_decay <= 1.0, "gamma_decay must lie in (0, 1]");
}

FlowConfig FlowConfig::from_config(const KeyValueConfig& cfg) { return from_config(cfg, FlowConfig{}); }

FlowConfig FlowConfig::from_config(const KeyValueConfig& cfg, const FlowConfig& defaults) {
    FlowConfig f = defaults;
    if (cfg.has("algorithm")) f.algorithm = parse_algorithm(cfg.require("algorithm"));
    f.m = cfg.get_uint("m", f.m);
    f.lambda = cfg.get_double("lambda", f.lambda);
    f.gamma = cfg.get_double("gamma", f.gamma);
    f.n_steps = cfg.get_uint("n_steps", f.n_steps);
    f.N = cfg.get_uint("N", f.N);
    f.K = cfg.get_uint("K", f.K);
    f.K_rep = cfg.get_uint("K_rep", f.K_rep);
    f.eta = cfg.get_double("eta", f.eta);
    f.delta_rep = cfg.get_double("delta_rep", f.delta_rep);
    f.n_outer = cfg.get_uint("eig.n_outer", f.n_outer);
    f.n_inner = cfg.get_uint("eig.n_inner", f.n_inner);
    f.n_outer = cfg.get_uint("n_outer", f.n_outer);
    f.n_inner = cfg.get_uint("n_inner", f.n_inner);
    f.seed = cfg.get_uint("seed", f.seed);
    if (cfg.has("eig.mode")) f.gradient_randomness = parse_randomness(cfg.require("eig.mode"));
    if (cfg.has("gradient_randomness"))
        f.gradient_randomness = parse_randomness(cfg.require("gradient_randomness"));
    f.mf_subsample = cfg.get_double("mf_subsample", f.mf_subsample);
    f.gamma_decay = cfg.get_double("gamma_decay", f.gamma_decay);
    f.log_every = cfg.get_uint("log_every", f.log_every);
    f.validate();
    return f;
}

void FlowConfig::write_to(KeyValueConfig& cfg) const {
    auto num = [](double x) {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    };
    cfg.set("algorithm", to_string(algorithm));
    cfg.set("m", std::to_string(m));
    cfg.set("lambda", num(lambda));
    cfg.set("gamma", num(gamma));
    cfg.set("n_steps", std::to_string(n_steps));
    cfg.set("N", std::to_string(N));
    cfg.set("K", std::to_string(K));
    cfg.set("K_rep", std::to_string(K_rep));
    cfg.set("eta", num(eta));
    cfg.set("delta_rep", num(delta_rep));
    cfg.set("n_outer", std::to_string(n_outer));
    cfg.set("n_inner", std::to_string(n_inner));
    cfg.set("seed", std::to_string(seed));
    cfg.set("gradient_randomness", to_string(gradient_randomness));
    cfg.set("mf_subsample", num(mf_subsample));
    cfg.set("gamma_decay", num(gamma_decay));
    cfg.set("log_every", std::to_string(log_every));
}

}  // namespace boedflows
