// Centralized inner solver for the ratio-parametrized concave subproblem.
// The min-over-cells objective is handled through a probability-simplex
// balance weight per cell plus a nonnegative power price per budget; for
// fixed duals the Lagrangian separates per beam up to interference coupling,
// and each beam power is the unique root of a strictly decreasing slope
// (generalized water-filling).  Scalars are solved by safeguarded Newton
// inside Gauss–Seidel sweeps; duals follow diminishing-step subgradient
// updates, then an exact polish (per-cell price bisection to complementarity
// and pairwise balance-weight line minimization of the dual) so returned
// solutions carry a machine-checkable optimality certificate.
#pragma once

#include "mmee/driver.hpp"

namespace mmee {

struct DualState {
    VectorXd balance;  // simplex weights over cells
    VectorXd price;    // nonnegative per-cell power prices
    int step = 0;      // subgradient step counter
};

// Euclidean projection onto the probability simplex.
VectorXd simplex_project(const VectorXd& v);

struct CentralOptions {
    double newton_tol = 1e-12;  // per-scalar step tolerance, relative
    int newton_cap = 50;
    double sweep_tol = 1e-10;   // sweep sup-change, relative to budget
    int sweep_cap = 50;
    // One Gauss-Seidel pass per dual update instead of sweeping to a fixed
    // point (the cheaper but weaker inner-maximization mode).
    bool single_sweep_per_dual = false;
    double dual_step0 = 0.1;  // normalized by the initial subgradient norm
    double dual_tol = 1e-4;
    int dual_cap = 500;
    // Alternate stationarity form that drops the balance weight from the
    // amplifier drain (own cell's eta * xi unweighted).  Kept selectable for
    // comparison; the default weighted drain is the stationarity system of
    // the dualized subproblem.
    bool unweighted_power_drain = false;
    bool polish = true;
    double kkt_tol = 1e-6;
};

// Mutable solve state over a fixed surrogate model: the committed
// allocation, per-receiver interference denominators (maintained
// incrementally across commits), and per-beam drains (rebuilt when the
// duals or the ratio change).  Exposed so tests can probe slopes directly.
class CentralWorkspace {
public:
    CentralWorkspace(const ChannelStats& stats, const SurrogateModel& model,
                     const CentralOptions& opts);

    void load(const PowerAllocation& alloc);
    void set_eta(double eta);
    void set_duals(const DualState& duals);

    // Slope of the dual Lagrangian in the beam power x of (target, m), all
    // other powers at their committed values.  `scale` sums the magnitudes
    // of the slope's constituent terms (for residual normalization).
    struct SlopeEval {
        double value;
        double derivative;
        double scale;
    };
    SlopeEval slope(UserRef target, int m, double x) const;

    double committed(UserRef target, int m) const;
    void commit(UserRef target, int m, double x);

    const PowerAllocation& state() const { return alloc_; }
    const DualState& duals() const { return duals_; }
    double eta() const { return eta_; }
    double cell_radiated(int u) const;
    double cell_consumed(int u) const;
    double cell_surrogate_rate(int u) const;  // nats, from live denominators
    double bracket(int u) const;              // w W R - eta P
    double lagrangian() const;

    const ChannelStats& stats() const { return stats_; }
    const SurrogateModel& model() const { return model_; }

private:
    void rebuild_denominators();
    void rebuild_drains();
    int index_of(UserRef r) const { return index_[r.cell][r.user]; }

    const ChannelStats& stats_;
    const SurrogateModel& model_;
    bool unweighted_power_drain_;

    std::vector<UserRef> receivers_;
    std::vector<std::vector<int>> index_;
    PowerAllocation alloc_;
    DualState duals_;
    double eta_ = 0.0;

    // Per receiver r: frozen signal gains, live denominators
    // gamma_tilde + noise-plus-interference floor, constant rate offset.
    std::vector<VectorXd> dens_;
    std::vector<double> const_rate_;
    std::vector<double> weight_;  // balance * cell weight * bandwidth
    // Per transmitter cell u: summed weighted interference gradients and the
    // scalar power drain (ratio * amplifier inefficiency + price).
    std::vector<VectorXd> grad_total_;
    std::vector<double> power_drain_;
    // Live power bookkeeping: per-cell total power shift against the anchor.
    std::vector<VectorXd> cell_delta_;
};

// Root of the slope for one beam: 0 when the slope at 0 is nonpositive,
// `cap` when it is still positive there, otherwise the unique interior root
// by bracketed Newton with bisection fallback.
double newton_root(const CentralWorkspace& ws, UserRef target, int m,
                   double cap, const CentralOptions& opts);

struct SweepOutcome {
    double sup_change = 0.0;
    int passes = 0;
    bool converged = true;
};

// Gauss-Seidel passes over all (cell, user, beam) scalars until the
// sup-change drops below opts.sweep_tol (relative to the budget scale), a
// single pass when opts.single_sweep_per_dual is set.
SweepOutcome central_sweep(CentralWorkspace& ws, const CentralOptions& opts);
// Same, restricted to one cell's scalars (used by the price polish).
SweepOutcome central_sweep_cell(CentralWorkspace& ws, int u,
                                const CentralOptions& opts);

// Running normalization state for the diminishing subgradient step.
struct DualStepScale {
    double balance_norm = 0.0;
    double power_norm = 0.0;
};

// One projected subgradient step on (balance, price) from the workspace's
// current primal state.
DualState dual_update(const CentralWorkspace& ws, const DualState& duals,
                      const CentralOptions& opts, DualStepScale& scale,
                      DualDiagnostic* diag = nullptr);

// Optimality certificate of the workspace's current (primal, dual) pair.
KktReport certify_kkt(const CentralWorkspace& ws, bool converged = true);

struct CentralOutcome {
    PowerAllocation alloc;
    DualState duals;
    KktReport kkt;
    bool flagged = false;
    std::vector<DualDiagnostic> dual_rows;
};

// Full subproblem solve: subgradient phase, then exact polish, then a final
// certified sweep.  `warm_duals` continues the previous subproblem's duals.
CentralOutcome solve_central_subproblem(const ChannelStats& stats,
                                        const SurrogateModel& model,
                                        double eta,
                                        const CentralOptions& opts,
                                        const PowerAllocation& warm,
                                        const DualState* warm_duals = nullptr);

// InnerSolver adapter with warm duals kept across calls within a run.
class CentralSolver final : public InnerSolver {
public:
    explicit CentralSolver(CentralOptions opts = {}) : opts_(opts) {}
    std::string name() const override { return "centralized"; }
    void reset() override;
    long long setup_scalars(const ChannelStats& stats) override;
    void begin_outer(const ChannelStats& stats,
                     const SurrogateModel& model) override;
    InnerResult solve(const ChannelStats& stats, const SurrogateModel& model,
                      double eta, const PowerAllocation& warm) override;
    const CentralOptions& options() const { return opts_; }

private:
    CentralOptions opts_;
    bool have_duals_ = false;
    DualState warm_duals_;
};

}  // namespace mmee
