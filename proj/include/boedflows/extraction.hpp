#pragma once

#include "boedflows/eig.hpp"
#include "boedflows/flows.hpp"

#include <span>
#include <string>
#include <vector>

namespace boedflows {

enum class Provenance { TrajectoryTail, IidSampled, CoordinateSampled, ParticlePopulation, Explicit };

std::string to_string(Provenance p);

struct CandidateSet {
    std::vector<DesignBatch> candidates;
    Provenance provenance = Provenance::Explicit;
    double burn_fraction = 0.0;  // TrajectoryTail only
};

/// Candidate batches from a finished flow: Joint tail snapshots (evenly
/// thinned to n_eval), MF batches with one random particle per coordinate,
/// Iid batches of m independent particles. Ordered designs are repaired.
CandidateSet candidates_from_flow(const FlowResult& result, std::size_t n_eval, std::uint64_t seed,
                                  double burn_fraction = 0.8);

struct ExtractionResult {
    DesignBatch design;
    EigEstimate estimate;             // high-fidelity score of the winner
    std::size_t index = 0;            // index into the candidate set
    std::vector<double> low_scores;   // stage 1, one per candidate
    std::vector<std::size_t> shortlist;
    std::vector<double> high_scores;  // stage 2, one per shortlisted candidate
};

/// Lowest index among the maximal entries.
std::size_t min_argmax(std::span<const double> scores);

/// Two-stage best-of-n: score every candidate with `low`, keep the top
/// `shortlist_size` (stable order), rescore with `high`, return the argmax.
ExtractionResult extract_best_of_n(const CandidateSet& cands, const UtilityOracle& low,
                                   const UtilityOracle& high, std::size_t shortlist_size);

/// 1 - (1 - p)^n.
double bon_success_probability(double p_eps, std::size_t n);

}  // namespace boedflows
