// Outer optimization driver: alternates surrogate rebuilds (anchor refresh)
// with a fractional-program inner loop whose parametric subproblems are
// handed to a pluggable inner solver.  Monotonicity is enforced by explicit
// accept/reject safeguards at both levels, so the traced objective sequences
// are non-decreasing on every run.
#pragma once

#include <memory>
#include <string>

#include "mmee/surrogate.hpp"

namespace mmee {

// One row per inner iteration.  EE values in nat/J; wall time and message
// counts are cumulative over the whole run.
struct TraceRow {
    int outer = 0;
    int inner = 0;
    double min_weighted_ee_surrogate = 0.0;
    double min_weighted_ee_exact_de = 0.0;
    double eta = 0.0;
    double wall_time_ms = 0.0;
    long long messages_exchanged = 0;
};

// One row per dual-update step inside an inner solve.
struct DualDiagnostic {
    int outer = 0;
    int inner = 0;
    int step = 0;
    double subgradient_norm_balance = 0.0;  // balance-weight block
    double subgradient_norm_power = 0.0;    // power-price block
    double max_power_violation = 0.0;       // watts over budget, worst cell
};

struct SolverTrace {
    std::vector<TraceRow> rows;
    std::vector<DualDiagnostic> dual_rows;
    std::vector<std::string> notes;
    bool flagged = false;  // some internal cap was exhausted
};

// Optimality certificate of an inner subproblem solution.  Stationarity and
// activity are normalized per-beam residuals (each slope scaled by the size
// of its constituent terms); complementarity and feasibility are relative to
// the cell budget.
struct KktReport {
    double stationarity = 0.0;
    double activity = 0.0;
    double complementarity = 0.0;
    double feasibility = 0.0;
    bool converged = true;

    bool pass(double tol_stationarity = 1e-6,
              double tol_complementarity = 1e-6,
              double tol_feasibility = 1e-9) const {
        return converged && stationarity <= tol_stationarity &&
               activity <= tol_stationarity &&
               complementarity <= tol_complementarity &&
               feasibility <= tol_feasibility;
    }
};

struct InnerResult {
    PowerAllocation alloc;
    KktReport kkt;
    bool flagged = false;
    long long messages_delta = 0;  // scalars exchanged during this solve
    std::vector<DualDiagnostic> dual_rows;
};

// A solver for the eta-parametrized concave subproblem.  Implementations
// keep dual variables (and any protocol state) warm between calls within a
// run; reset() clears that state at the start of a run.
class InnerSolver {
public:
    virtual ~InnerSolver() = default;
    virtual std::string name() const = 0;
    virtual void reset() = 0;
    // One-time data-collection cost of the architecture, in scalars.
    virtual long long setup_scalars(const ChannelStats& stats) = 0;
    // Called once per outer iteration with the new anchor, before any
    // solve() at that anchor; lets implementations refresh anchor state.
    virtual void begin_outer(const ChannelStats& stats,
                             const SurrogateModel& model) = 0;
    virtual InnerResult solve(const ChannelStats& stats,
                              const SurrogateModel& model, double eta,
                              const PowerAllocation& warm) = 0;
};

struct SolveOptions {
    double outer_tol = 1e-3;  // relative, min weighted surrogate EE
    double eta_tol = 1e-4;    // relative, scalarization ratio
    int outer_cap = 30;
    int inner_cap = 50;
    double de_tol = 1e-10;
    int de_max_iter = 1000;
};

struct SolveResult {
    PowerAllocation alloc;
    SolverTrace trace;
    double min_weighted_ee_exact = 0.0;  // nat/J at the final allocation
    std::vector<double> cell_ee_exact;   // nat/J per cell
    std::vector<double> cell_rate_exact;  // nats per cell
    int outer_iterations = 0;
    int inner_iterations_total = 0;
    long long messages_total = 0;
    KktReport final_kkt;
};

// Min over cells of w_u * W * R_u / P_u (nat/J) for exact DE cell rates.
double min_weighted_ee(const ChannelStats& stats,
                       const PowerAllocation& alloc, double de_tol = 1e-10,
                       int de_max_iter = 1000);

// Runs the full max-min weighted EE optimization from `init` (uniform full
// budget if empty).  See TraceRow for what gets recorded per iteration.
SolveResult maxmin_ee(const ChannelStats& stats, InnerSolver& inner,
                      const SolveOptions& opts = {},
                      const PowerAllocation* init = nullptr);

}  // namespace mmee
