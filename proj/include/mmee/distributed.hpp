// Distributed inner solver: each cell owns only its local statistics — the
// serving couplings of its own users plus its own transmitter's coupling
// rows to every other cell's user — and cooperates through low-rate scalar
// exchanges.  Per synchronized round, every cell (a) reports the aggregate
// interference its current transmission induces at each foreign user (one
// scalar per receive antenna, with one user per receiving cell rotationally
// omitted and served from cache), (b) solves its own budget-priced
// water-filling subproblem against the received aggregates, and (c)
// broadcasts a scalarization-ratio candidate.  Rounds repeat to a Jacobi
// fixed point for each ratio value.
#pragma once

#include "mmee/driver.hpp"

namespace mmee {

// Scalar-exchange accounting.  Seeding transfers (the one-time full batches
// that initialize caches, plus any re-synchronization after an externally
// imposed allocation change) is tracked separately from the fixed per-round
// protocol traffic.
class MessageBus {
public:
    void enable_log(bool on) { log_enabled_ = on; }

    void begin_round(long long round);
    void coefficients(int from, int to, int user, long long scalars);
    void ratio(int from);
    void end_round();
    void seed(int from, int to, int user, long long scalars, bool initial);

    long long setup_scalars() const { return setup_; }
    long long resync_scalars() const { return resync_; }
    long long round_scalars_total() const { return rounds_total_; }
    const std::vector<long long>& per_round() const { return per_round_; }
    const std::vector<std::string>& entries() const { return log_; }
    void reset();

private:
    void log_line(const std::string& line);

    bool log_enabled_ = false;
    bool in_round_ = false;
    long long current_round_ = 0;
    long long pending_ = 0;
    long long setup_ = 0;
    long long resync_ = 0;
    long long rounds_total_ = 0;
    std::vector<long long> per_round_;
    std::vector<std::string> log_;
};

// Exact per-round protocol cost in scalars for a given round index:
// per receiving cell, one ratio broadcast plus, from each other cell, one
// scalar per receive antenna of every non-omitted user.
long long round_message_scalars(const NetworkConfig& cfg, long long round);

struct LocalOptions {
    double newton_tol = 1e-12;
    int newton_cap = 50;
    double sweep_tol = 1e-11;  // relative to the cell budget
    int sweep_cap = 50;
    int price_cap = 80;  // budget-price bisection iterations
    double de_tol = 1e-10;
    int de_max_iter = 1000;
};

// One cell's local state and subproblem solver.  The constructor reads only
// the slices of the channel statistics this cell legitimately owns (own
// users' serving couplings, own transmitter's rows to foreign users) and
// copies them, so garbling every other entry of `stats` afterwards cannot
// change any behavior.
class DistributedCell {
public:
    DistributedCell(const ChannelStats& stats, int cell,
                    LocalOptions opts = {});

    int cell_index() const { return cell_; }
    int num_users() const { return static_cast<int>(own_link_.size()); }

    // Sender side: aggregate interference this cell's committed powers
    // induce at foreign receiver `target`, one scalar per receive antenna.
    VectorXd interference_report(UserRef target) const;
    // Receiver side: cache the aggregate reported by `from_cell` for own
    // user `user`.
    void receive_report(int from_cell, int user, const VectorXd& scalars);

    void load_allocation(const std::vector<VectorXd>& own_lambda);
    const std::vector<VectorXd>& allocation() const { return lambda_; }

    // Rebuilds the local surrogate anchor from the committed powers and the
    // current caches (per-user DE fixed points on purely local data).
    void refresh_anchor();

    double anchor_rate() const;  // exact DE rate at the anchor, nats
    double surrogate_rate() const;
    double radiated_power() const;
    double consumed_power() const;
    // Local ratio candidate w * W * rate / power, clamped at 0.
    double ratio_candidate() const;
    double price() const { return price_; }
    double last_move() const { return last_move_; }
    bool last_solve_clean() const { return clean_; }

    // Full local subproblem solve at ratio `eta`: budget-priced Gauss-Seidel
    // water-filling over own beams, committing `damping` of the move.
    void solve_local(double eta, double damping = 1.0);

    // Certificate of the local subproblem at the committed powers.
    KktReport local_kkt(double eta) const;

private:
    struct Slope {
        double value;
        double derivative;
        double scale;
    };
    Slope beam_slope(int k, int m, double x, double eta) const;
    double beam_root(int k, int m, double eta) const;
    void rebuild_denominators();
    void commit(int k, int m, double x);
    bool sweep(double eta);  // Gauss-Seidel to fixed point; false on cap

    LocalOptions opts_;
    int cell_ = 0;
    int num_cells_ = 0;
    int num_beams_ = 0;
    double weight_w_ = 0.0;  // cell weight times bandwidth
    double noise_ = 0.0;
    double amp_ = 0.0;
    double budget_ = 0.0;
    double fixed_power_ = 0.0;

    std::vector<MatrixXd> own_link_;                // own users' serving
    std::vector<std::vector<MatrixXd>> out_link_;   // [cell][user], foreign
    std::vector<std::vector<VectorXd>> cache_;      // [own user][from cell]

    // Local anchor state, one entry per own user.
    std::vector<VectorXd> anchor_lambda_, anchor_cross_, anchor_floor_;
    std::vector<VectorXd> gamma_, gamma_tilde_, d_own_;
    VectorXd d_total_;
    std::vector<double> const_rate_, b_anchor_, rate_anchor_;
    bool anchored_ = false;

    // Live state.
    std::vector<VectorXd> lambda_, dens_;
    VectorXd cell_delta_;
    double price_ = 0.0;
    double last_move_ = 0.0;
    bool clean_ = true;
};

struct DistributedOptions {
    LocalOptions local;
    double round_tol = 1e-9;  // Jacobi sup-change, relative to max budget
    int round_cap = 300;
    bool log_bus = false;
};

// InnerSolver adapter orchestrating the cells and the message bus.  The
// surrogate model passed by the driver is used only as the authoritative
// anchor-allocation signal; all rate and gradient state is rebuilt locally
// inside each cell.
class DistributedSolver final : public InnerSolver {
public:
    explicit DistributedSolver(DistributedOptions opts = {});
    std::string name() const override { return "distributed"; }
    void reset() override;
    long long setup_scalars(const ChannelStats& stats) override;
    void begin_outer(const ChannelStats& stats,
                     const SurrogateModel& model) override;
    InnerResult solve(const ChannelStats& stats, const SurrogateModel& model,
                      double eta, const PowerAllocation& warm) override;

    const MessageBus& bus() const { return bus_; }
    const std::vector<DistributedCell>& cells() const { return cells_; }
    const std::vector<double>& last_ratio_candidates() const {
        return last_candidates_;
    }
    long long rounds_total() const { return round_counter_; }

private:
    void ensure_cells(const ChannelStats& stats);
    void load_cells(const PowerAllocation& alloc);
    void seed_caches(bool initial);
    bool cells_match(const PowerAllocation& alloc) const;

    DistributedOptions opts_;
    std::vector<DistributedCell> cells_;
    MessageBus bus_;
    std::vector<double> last_candidates_;
    long long round_counter_ = 0;
    long long reported_scalars_ = 0;
    bool seeded_ = false;
};

}  // namespace mmee
