// Benchmark layer: named network profiles, experiment specifications parsed
// from JSON configs, sweep execution with Monte-Carlo validation of every
// reported operating point, reference baselines (max-min spectral efficiency
// and non-cooperative per-cell optimization), a weighting study, and CSV
// emission with stable schemas and atomic writes.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmee/driver.hpp"
#include "mmee/scenario.hpp"

namespace mmee {

// Two reference scales: a small configuration for fast iteration and the
// full-size configuration used for headline numbers.  Both use 10 MHz
// bandwidth, -105 dBm noise, amplifier inefficiency 5, 30 dBm per-antenna
// circuit power, 40 dBm static power, and unit weights.
NetworkConfig desk_network(int num_cells = 2, double budget_dbm = 30.0);
NetworkConfig paper_network(double budget_dbm = 30.0);

// Regular-polygon layout (500 m side) with the standard 30..250 m user
// annulus and log-distance path loss; `seed` drives all random draws.
GeometryConfig default_geometry(int num_cells, std::uint64_t seed);

enum class SolverChoice { centralized, distributed, both };

std::string to_string(SolverChoice choice);

// A full benchmark specification.  `scenario_file`, when non-empty, replaces
// the generated geometry (the stored coupling matrices are reused for every
// seed; seeds then only drive Monte-Carlo validation).
struct ExperimentSpec {
    NetworkConfig network;
    GeometryConfig geometry;
    std::string scenario_file;
    SolverChoice solver = SolverChoice::both;
    std::vector<double> sweep_dbm{30.0};
    std::vector<std::uint64_t> seeds{1};
    bool run_maxmin_se = false;        // max-min SE baseline rows
    bool run_non_cooperative = false;  // per-cell selfish baseline rows
    std::vector<std::vector<double>> weight_sets;  // weighting study
    double weight_study_budget_dbm = 30.0;
    int mc_samples = 10000;
    std::string output_dir = "out";
    SolveOptions solve;
    bool log_bus = false;

    void validate() const;  // throws std::invalid_argument
};

// The standard six-point transmit-budget sweep, in dBm.
std::vector<double> default_sweep_dbm();

// One solved operating point.  Energy efficiencies are in bit/J and
// spectral efficiencies in bit/s/Hz; `variant` distinguishes the main
// optimizer ("ee") from baseline rows ("maxmin_se", "non_cooperative").
struct ResultRow {
    std::uint64_t seed = 0;
    double p_max_dbm = 0.0;
    std::string solver;
    std::string variant = "ee";
    double min_weighted_ee = 0.0;      // bit/J, deterministic-equivalent
    double mc_min_weighted_ee = 0.0;   // bit/J, Monte-Carlo validated
    double mc_relative_gap = 0.0;      // |DE - MC| / MC on the min-EE
    double min_weighted_se = 0.0;      // bit/s/Hz
    std::vector<double> cell_ee;       // bit/J per cell
    std::vector<double> cell_se;       // bit/s/Hz per cell
    std::vector<double> cell_weight;   // weights used for this row
    long long messages_total = 0;
    double wall_time_ms = 0.0;
    int outer_iterations = 0;
    int inner_iterations_total = 0;
    bool flagged = false;
    std::string note;
};

// A solved row together with its full trace (kept for tests and trace CSVs).
struct RunRecord {
    ResultRow row;
    SolveResult result;
    PowerAllocation alloc;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
};

// Executes the sweep for every (seed, budget, solver) combination, plus any
// requested baseline rows, validating each solution against `mc_samples`
// Monte-Carlo channel draws.  Writes results.csv, cells.csv, timing.csv and
// per-run trace CSVs under spec.output_dir (unless it is empty) and returns
// everything in memory.  A solver failure produces a flagged row and the
// sweep continues.  With a fixed spec the result CSVs are byte-identical
// across reruns; wall-clock times live in the separate timing.csv.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Max-min spectral-efficiency baseline: the identical pipeline run with all
// amplifier inefficiencies set to zero, which collapses the optimized ratio
// to weighted spectral efficiency over fixed circuit power.  The returned
// row reports the achieved min weighted SE and the energy efficiency this
// allocation obtains under the true power model.  `init` optionally warm
// starts the solve (e.g. from a lower-budget solution).
RunRecord baseline_maxmin_se(const ChannelStats& stats, SolverChoice solver,
                             const SolveOptions& opts, int mc_samples,
                             std::uint64_t mc_seed,
                             const PowerAllocation* init = nullptr);

// Non-cooperative baseline: every cell solves its own single-cell max-min
// EE problem with all cross-cell coupling zeroed out, and the merged
// allocation is then evaluated under the true interference coupling.
RunRecord baseline_non_cooperative(const ChannelStats& stats,
                                   SolverChoice solver,
                                   const SolveOptions& opts, int mc_samples,
                                   std::uint64_t mc_seed);

// One weighting-study operating point: per-cell outcomes for a weight set.
struct WeightStudyRow {
    std::vector<double> weights;
    std::vector<double> cell_ee;           // bit/J
    std::vector<double> weighted_cell_ee;  // w_u * EE_u, bit/J
    double weighted_spread = 0.0;          // (max - min) / mean of w_u * EE_u
    bool flagged = false;
};

// Runs the optimizer on a rotation-symmetric scenario at a fixed budget for
// each weight set and reports how well the weighted efficiencies equalize.
std::vector<WeightStudyRow> weighting_study(
    const ExperimentSpec& spec, const std::vector<std::vector<double>>& sets);

// Reads an ExperimentSpec from a JSON config file.  Errors cite the file
// and the offending field.
ExperimentSpec parse_config(const std::string& path);

// CSV writers.  Every file starts with a `# schema=...` header line and a
// column-name row, uses a fixed column order, and is written atomically
// (write to a temporary, then rename).
void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::string& path);
void write_cells_csv(const std::vector<ResultRow>& rows,
                     const std::string& path);
void write_timing_csv(const std::vector<ResultRow>& rows,
                      const std::string& path);
void write_trace_csv(const SolverTrace& trace, const std::string& path);
void write_dual_csv(const SolverTrace& trace, const std::string& path);
void write_rates_csv(const NetworkConfig& cfg, const RateReport& report,
                     const std::vector<std::vector<McEstimate>>* mc,
                     const std::string& path);
void write_weights_csv(const std::vector<WeightStudyRow>& rows,
                       const std::string& path);

}  // namespace mmee
