#pragma once

#include "boedflows/baselines.hpp"
#include "boedflows/extraction.hpp"
#include "boedflows/flows.hpp"

#include <optional>
#include <string>
#include <vector>

namespace boedflows {

/// Everything an experiment needs, read from one flat config.
struct ExperimentSpec {
    KeyValueConfig cfg;  // kept whole for model and method overrides
    std::string model;
    std::vector<std::string> methods;
    std::vector<std::size_t> ms;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "results";
    std::optional<bool> exact;  // unset: exact whenever the model has a closed form at that m

    std::size_t n_eval = 500;
    std::size_t shortlist = 10;
    double burn_fraction = 0.8;
    std::size_t low_outer = 20, low_inner = 50;
    std::size_t high_outer = 500, high_inner = 1000;
    std::size_t report_outer = 1000, report_inner = 2000, replications = 20;
    std::uint64_t report_seed = 20240;

    ReferenceMeasure ref;
    InitSpec init;
    std::size_t threads = 0;  // 0: hardware concurrency, capped by BOEDFLOWS_THREADS
    bool write_trajectories = true;

    static ExperimentSpec from_config(const KeyValueConfig& cfg);
};

bool is_flow_method(const std::string& method);

struct ReportRow {
    std::string kind = "cell";  // cell | aggregate
    std::string method;
    std::size_t m = 0;
    std::int64_t seed = -1;     // -1 on aggregate rows
    double eig = 0.0;
    double se = 0.0;
    std::size_t iterations = 0;
    double wallclock_ms = 0.0;
    DesignBatch design;         // empty on aggregate and failed rows
    std::string status = "ok";  // ok, or the error message of a failed cell

    bool ok() const { return status == "ok"; }
    /// Equality of everything except wallclock time.
    bool same_result(const ReportRow& other) const;
    bool operator==(const ReportRow&) const = default;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;        // per (method, m, seed), in config order
    std::vector<ReportRow> aggregates;  // per (method, m)
    std::size_t failed() const;
};

struct CellOutput {
    ReportRow row;
    std::vector<TrajectoryRow> trajectory;  // flows only
};

/// Runs, extracts and rescores one (method, m, seed) cell. Failures are
/// reported in row.status instead of thrown.
CellOutput run_cell(const ExperimentSpec& spec, const std::string& method, std::size_t m,
                    std::uint64_t seed);

/// Mean and standard error over the successful seeds of each (method, m).
std::vector<ReportRow> aggregate_rows(const std::vector<ReportRow>& rows);

/// Runs every cell on a worker pool and writes the output files when
/// `write` is set.
ExperimentReport run_experiment(const ExperimentSpec& spec, bool write = true);

/// Reporting-fidelity score: exact where available, replicated NMC otherwise.
EigEstimate report_score(const ExperimentSpec& spec, ModelPtr model, const DesignBatch& design);

std::size_t worker_count(std::size_t requested);

// serialisation ------------------------------------------------------------

std::string design_to_json(const DesignBatch& batch);
DesignBatch design_from_json(const std::string& text);
DesignBatch load_design(const std::string& path);
void save_design(const std::string& path, const DesignBatch& batch);

/// Designs inside CSV cells: points separated by '|', coordinates by ' '.
std::string design_to_cell(const DesignBatch& batch);
DesignBatch design_from_cell(const std::string& cell, std::size_t d, const ConstraintSpec& c);

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
/// Reads rows back; `c` and `d` restore the design constraint and dimension.
std::vector<ReportRow> read_report_csv(const std::string& path, std::size_t d, const ConstraintSpec& c);

void write_outputs(const ExperimentSpec& spec, const ExperimentReport& report);

/// Quadrature EIG curve of the single-design toy model on a uniform grid.
std::vector<std::pair<double, double>> toy_landscape(const Toy1DModel& model, std::size_t grid,
                                                     std::size_t n_nodes = 200);

}  // namespace boedflows
