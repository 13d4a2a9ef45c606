#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boedflows {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Later assignments override earlier ones, which is how CLI overrides work.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text);
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, std::string value);
    /// Applies a "key=value" override string.
    void apply_override(std::string_view assignment);

    bool has(const std::string& key) const { return values_.contains(key); }
    std::optional<std::string> find(const std::string& key) const;
    const std::string& require(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list; missing key yields the fallback.
    std::vector<std::string> get_list(const std::string& key,
                                      std::vector<std::string> fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

    std::string serialise() const;
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

enum class Algorithm { Joint, MF, MfSub, Iid, IidRep };
enum class GradientRandomness { Frozen, Fresh };

std::string to_string(Algorithm a);
std::string to_string(GradientRandomness g);
Algorithm parse_algorithm(std::string_view name);
GradientRandomness parse_randomness(std::string_view name);

struct FlowConfig {
    Algorithm algorithm = Algorithm::Iid;
    std::size_t m = 1;          // batch size
    double lambda = 0.1;        // temperature
    double gamma = 0.01;        // step size
    std::size_t n_steps = 1000;
    std::size_t N = 50;         // particles (chains for Joint, per coordinate for MF)
    std::size_t K = 1;          // partner tuples per drift estimate
    std::size_t K_rep = 2;
    double eta = 0.0;
    double delta_rep = 1.0;
    std::size_t n_outer = 20;
    std::size_t n_inner = 50;
    std::uint64_t seed = 0;
    GradientRandomness gradient_randomness = GradientRandomness::Frozen;
    double mf_subsample = 0.5;  // fraction of coordinates updated per MfSub step
    double gamma_decay = 1.0;   // gamma_n = gamma * gamma_decay^n
    std::size_t log_every = 0;  // 0 picks n_steps / 100

    /// λ_m = λ / m, the per-coordinate temperature used by Joint and MF.
    double lambda_m() const { return lambda / static_cast<double>(m); }
    double step_size(std::size_t n) const;

    /// Throws ConfigError when a positivity rule is violated.
    void validate() const;

    /// Reads the flat keys; `eig.n_outer`, `eig.n_inner`, `eig.mode` are
    /// accepted as aliases for the NMC budget keys.
    static FlowConfig from_config(const KeyValueConfig& cfg);
    static FlowConfig from_config(const KeyValueConfig& cfg, const FlowConfig& defaults);
    void write_to(KeyValueConfig& cfg) const;
};

}  // namespace boedflows
