#include "boedflows/core.hpp"

#include <algorithm>
#include <sstream>

namespace boedflows {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Stream rng_substream(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                     Purpose purpose, std::uint64_t index) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(purpose) + 0x51ed270b27a3f1c5ULL));
    h = mix64(h ^ mix64(particle + 0x2545f4914f6cdd1dULL));
    h = mix64(h ^ mix64(step + 0x9fb21c651e98df25ULL));
    h = mix64(h ^ mix64(index + 0xd1342543de82ef95ULL));
    return Stream(h);
}

// ---------------------------------------------------------------------------

ConstraintSpec ConstraintSpec::box(std::vector<double> lo, std::vector<double> hi) {
    ConstraintSpec c;
    c.kind = ConstraintKind::Box;
    c.lo = std::move(lo);
    c.hi = std::move(hi);
    c.validate();
    return c;
}

ConstraintSpec ConstraintSpec::ordered_min_gap(double min_gap, double t_max) {
    ConstraintSpec c;
    c.kind = ConstraintKind::OrderedMinGap;
    c.min_gap = min_gap;
    c.t_max = t_max;
    c.validate();
    return c;
}

void ConstraintSpec::validate() const {
    switch (kind) {
        case ConstraintKind::Box:
            if (lo.size() != hi.size() || lo.empty())
                throw ConfigError("box constraint: lo/hi must be non-empty and the same length");
            for (std::size_t k = 0; k < lo.size(); ++k)
                if (!(lo[k] < hi[k]))
                    throw ConfigError("box constraint: lo must be < hi in every coordinate");
            break;
        case ConstraintKind::OrderedMinGap:
            if (!(min_gap > 0.0) || !(t_max > 0.0))
                throw ConfigError("ordered min-gap constraint: min_gap and t_max must be > 0");
            break;
        default:
            break;
    }
}

void ConstraintSpec::validate_batch_size(std::size_t m) const {
    if (kind != ConstraintKind::OrderedMinGap || m == 0) return;
    if (min_gap * static_cast<double>(m - 1) > t_max) {
        std::ostringstream os;
        os << "infeasible ordered min-gap constraint: min_gap * (m - 1) = "
           << min_gap * static_cast<double>(m - 1) << " exceeds t_max = " << t_max;
        throw ConfigError(os.str());
    }
}

ConstraintSpec ConstraintSpec::per_point() const {
    if (kind == ConstraintKind::OrderedMinGap) return box({0.0}, {t_max});
    return *this;
}

std::string to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::Unconstrained: return "unconstrained";
        case ConstraintKind::Box: return "box";
        case ConstraintKind::Torus: return "torus";
        case ConstraintKind::OrderedMinGap: return "ordered_min_gap";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

DesignBatch::DesignBatch(std::size_t m, std::size_t d, ConstraintSpec constraint)
    : coords_(m * d, 0.0), d_(d), constraint_(std::move(constraint)) {}

DesignBatch::DesignBatch(std::vector<double> coords, std::size_t d, ConstraintSpec constraint)
    : coords_(std::move(coords)), d_(d), constraint_(std::move(constraint)) {
    if (d_ == 0 || coords_.size() % d_ != 0)
        throw ConfigError("design batch: coordinate count is not a multiple of the dimension");
}

ParticleEnsemble::ParticleEnsemble(std::size_t n, std::size_t d, ConstraintSpec constraint)
    : coords_(n * d, 0.0), d_(d), constraint_(std::move(constraint)) {}

std::vector<double> ParticleEnsemble::mean() const {
    std::vector<double> out(d_, 0.0);
    const std::size_t n = size();
    if (n == 0) return out;
    if (constraint_.kind == ConstraintKind::Torus) {
        for (std::size_t k = 0; k < d_; ++k) {
            double s = 0.0, c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += std::sin(coords_[i * d_ + k]);
                c += std::cos(coords_[i * d_ + k]);
            }
            out[k] = std::atan2(s, c);
        }
        return out;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d_; ++k) out[k] += coords_[i * d_ + k];
    for (auto& v : out) v /= static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------

double wrap_torus(double z) {
    double r = z - kTwoPi * std::floor((z + kPi) / kTwoPi);
    if (r >= kPi) r -= kTwoPi;
    if (r < -kPi) r += kTwoPi;
    return r;
}

namespace {

constexpr double kFeasibilitySlack = 1e-9;

bool times_feasible(std::span<const double> t, double min_gap, double t_max) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i])) return false;
        if (t[i] < -kFeasibilitySlack || t[i] > t_max + kFeasibilitySlack) return false;
        if (i > 0 && t[i] - t[i - 1] < min_gap - kFeasibilitySlack) return false;
    }
    return true;
}

}  // namespace

void repair_times(std::span<double> t, double min_gap, double t_max) {
    if (t.empty()) return;
    if (min_gap * static_cast<double>(t.size() - 1) > t_max)
        throw ConfigError("infeasible ordered min-gap constraint for this batch size");
    if (times_feasible(t, min_gap, t_max)) return;
    for (auto& v : t) {
        if (std::isnan(v)) throw ConfigError("repair: NaN sampling time");
        v = std::clamp(v, 0.0, t_max);
    }
    std::sort(t.begin(), t.end());
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] < t[i - 1] + min_gap) t[i] = t[i - 1] + min_gap;
    if (t.back() > t_max) {
        t.back() = t_max;
        for (std::size_t i = t.size() - 1; i-- > 0;)
            if (t[i] > t[i + 1] - min_gap) t[i] = t[i + 1] - min_gap;
    }
}

DesignBatch repair(const DesignBatch& batch) {
    const auto& c = batch.constraint();
    if (c.kind != ConstraintKind::OrderedMinGap)
        throw ConfigError("repair requires an ordered min-gap constraint");
    if (batch.dim() != 1) throw ConfigError("repair requires scalar design points");
    DesignBatch out = batch;
    repair_times(out.coords(), c.min_gap, c.t_max);
    return out;
}

bool point_feasible(std::span<const double> x, const ConstraintSpec& c) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    switch (c.kind) {
        case ConstraintKind::Box:
            for (std::size_t k = 0; k < x.size(); ++k)
                if (x[k] < c.lo[k] - kFeasibilitySlack || x[k] > c.hi[k] + kFeasibilitySlack)
                    return false;
            return true;
        case ConstraintKind::Torus:
            for (double v : x)
                if (v < -kPi || v >= kPi) return false;
            return true;
        case ConstraintKind::OrderedMinGap:
            for (double v : x)
                if (v < -kFeasibilitySlack || v > c.t_max + kFeasibilitySlack) return false;
            return true;
        default:
            return true;
    }
}

bool is_feasible(const DesignBatch& batch) {
    const auto& c = batch.constraint();
    if (batch.size() == 0) return false;
    if (c.kind == ConstraintKind::OrderedMinGap)
        return batch.dim() == 1 && times_feasible(batch.coords(), c.min_gap, c.t_max);
    for (std::size_t j = 0; j < batch.size(); ++j)
        if (!point_feasible(batch.point(j), c)) return false;
    return true;
}

void project_point(std::span<double> x, const ConstraintSpec& c) {
    switch (c.kind) {
        case ConstraintKind::Box:
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], c.lo[k], c.hi[k]);
            break;
        case ConstraintKind::Torus:
            for (auto& v : x) v = wrap_torus(v);
            break;
        case ConstraintKind::OrderedMinGap:
            for (auto& v : x) v = std::clamp(v, 0.0, c.t_max);
            break;
        default:
            break;
    }
}

void apply_constraint(DesignBatch& batch) {
    const auto& c = batch.constraint();
    if (c.kind == ConstraintKind::OrderedMinGap) {
        repair_times(batch.coords(), c.min_gap, c.t_max);
        return;
    }
    for (std::size_t j = 0; j < batch.size(); ++j) project_point(batch.point(j), c);
}

double coordinate_difference(double a, double b, const ConstraintSpec& c) {
    if (c.kind == ConstraintKind::Torus) return wrap_torus(a - b);
    return a - b;
}

}  // namespace boedflows
