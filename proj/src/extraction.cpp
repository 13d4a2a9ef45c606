#include "boedflows/extraction.hpp"

#include <algorithm>
#include <numeric>

namespace boedflows {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::TrajectoryTail: return "trajectory_tail";
        case Provenance::IidSampled: return "iid_sampled";
        case Provenance::CoordinateSampled: return "coordinate_sampled";
        case Provenance::ParticlePopulation: return "particle_population";
        case Provenance::Explicit: return "explicit";
    }
    return "unknown";
}

CandidateSet candidates_from_flow(const FlowResult& result, std::size_t n_eval, std::uint64_t seed,
                                  double burn_fraction) {
    if (n_eval == 0) throw ConfigError("extraction: n_eval must be >= 1");
    const FlowState& st = result.state;
    CandidateSet set;
    auto finish = [&](DesignBatch b) {
        if (st.constraint.kind == ConstraintKind::OrderedMinGap) b = repair(b);
        set.candidates.push_back(std::move(b));
    };
    switch (st.algorithm) {
        case Algorithm::Joint: {
            set.provenance = Provenance::TrajectoryTail;
            set.burn_fraction = burn_fraction;
            const auto& pool = result.tail.empty() ? st.chains : result.tail;
            const std::size_t n = std::min(n_eval, pool.size());
            // evenly thinned, always keeping the most recent snapshot
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t idx = pool.size() - 1 - (k * pool.size()) / n;
                finish(pool[idx]);
            }
            break;
        }
        case Algorithm::MF:
        case Algorithm::MfSub: {
            set.provenance = Provenance::CoordinateSampled;
            Stream s = rng_substream(seed, 0, st.step, Purpose::Extraction);
            for (std::size_t k = 0; k < n_eval; ++k) {
                DesignBatch b(st.m, st.d, st.constraint);
                for (std::size_t c = 0; c < st.m; ++c) {
                    const auto& ens = st.marginals[c];
                    std::copy_n(ens.particle(uniform_index(s, ens.size())).begin(), st.d, b.point(c).begin());
                }
                finish(std::move(b));
            }
            break;
        }
        default: {
            set.provenance = Provenance::IidSampled;
            Stream s = rng_substream(seed, 0, st.step, Purpose::Extraction);
            for (std::size_t k = 0; k < n_eval; ++k) {
                DesignBatch b(st.m, st.d, st.constraint);
                for (std::size_t c = 0; c < st.m; ++c)
                    std::copy_n(st.ensemble.particle(uniform_index(s, st.ensemble.size())).begin(), st.d,
                                b.point(c).begin());
                finish(std::move(b));
            }
            break;
        }
    }
    return set;
}

std::size_t min_argmax(std::span<const double> scores) {
    if (scores.empty()) throw ConfigError("min_argmax: empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

ExtractionResult extract_best_of_n(const CandidateSet& cands, const UtilityOracle& low,
                                   const UtilityOracle& high, std::size_t shortlist_size) {
    const std::size_t n = cands.candidates.size();
    if (n == 0) throw ConfigError("extraction: empty candidate set");
    if (shortlist_size == 0 || shortlist_size > n)
        throw ConfigError("extraction: shortlist size must lie in [1, number of candidates]");
    ExtractionResult res;
    res.low_scores.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (!is_feasible(cands.candidates[c]))
            throw ConfigError("extraction: infeasible candidate " + std::to_string(c));
        res.low_scores[c] = low.value(cands.candidates[c], {0, c, 0});
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return res.low_scores[a] > res.low_scores[b]; });
    order.resize(shortlist_size);
    // keep the shortlist in candidate order so that ties resolve to the lowest index
    std::sort(order.begin(), order.end());
    res.shortlist = order;
    std::vector<EigEstimate> est(shortlist_size);
    res.high_scores.resize(shortlist_size);
    for (std::size_t k = 0; k < shortlist_size; ++k) {
        est[k] = high.estimate(cands.candidates[order[k]], {1, order[k], 0});
        res.high_scores[k] = est[k].value;
    }
    const std::size_t w = min_argmax(res.high_scores);
    res.index = order[w];
    res.design = cands.candidates[res.index];
    res.estimate = est[w];
    return res;
}

double bon_success_probability(double p_eps, std::size_t n) {
    if (!(p_eps >= 0.0 && p_eps <= 1.0)) throw ConfigError("bon_success_probability: p must lie in [0, 1]");
    return 1.0 - std::pow(1.0 - p_eps, static_cast<double>(n));
}

}  // namespace boedflows
