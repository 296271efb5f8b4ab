#include "mmee/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mmee/diag_ops.hpp"
#include "scalar_root.hpp"

namespace mmee {

// ---------------------------------------------------------------- MessageBus

void MessageBus::log_line(const std::string& line) { log_.push_back(line); }

void MessageBus::begin_round(long long round) {
    in_round_ = true;
    current_round_ = round;
    pending_ = 0;
}

void MessageBus::coefficients(int from, int to, int user, long long scalars) {
    pending_ += scalars;
    if (log_enabled_)
        log_line("round=" + std::to_string(current_round_) +
                 " kind=coefficients from=" + std::to_string(from) +
                 " to=" + std::to_string(to) +
                 " user=" + std::to_string(user) +
                 " scalars=" + std::to_string(scalars));
}

void MessageBus::ratio(int from) {
    pending_ += 1;
    if (log_enabled_)
        log_line("round=" + std::to_string(current_round_) +
                 " kind=ratio from=" + std::to_string(from) + " scalars=1");
}

void MessageBus::end_round() {
    if (!in_round_) return;
    rounds_total_ += pending_;
    per_round_.push_back(pending_);
    pending_ = 0;
    in_round_ = false;
}

void MessageBus::seed(int from, int to, int user, long long scalars,
                      bool initial) {
    (initial ? setup_ : resync_) += scalars;
    if (log_enabled_)
        log_line(std::string("kind=") + (initial ? "seed" : "resync") +
                 " from=" + std::to_string(from) +
                 " to=" + std::to_string(to) +
                 " user=" + std::to_string(user) +
                 " scalars=" + std::to_string(scalars));
}

void MessageBus::reset() {
    in_round_ = false;
    current_round_ = 0;
    pending_ = 0;
    setup_ = 0;
    resync_ = 0;
    rounds_total_ = 0;
    per_round_.clear();
    log_.clear();
}

long long round_message_scalars(const NetworkConfig& cfg, long long round) {
    long long total = 0;
    for (int u = 0; u < cfg.num_cells; ++u) {
        total += 1;  // ratio candidate broadcast
        const int omit = static_cast<int>(round % cfg.users_per_cell[u]);
        long long antennas = 0;
        for (int a = 0; a < cfg.users_per_cell[u]; ++a)
            if (a != omit) antennas += cfg.user_antennas[u][a];
        total += static_cast<long long>(cfg.num_cells - 1) * antennas;
    }
    return total;
}

// ----------------------------------------------------------- DistributedCell

DistributedCell::DistributedCell(const ChannelStats& stats, int cell,
                                 LocalOptions opts)
    : opts_(opts), cell_(cell) {
    const NetworkConfig& cfg = stats.config;
    if (cell < 0 || cell >= cfg.num_cells)
        throw std::out_of_range("DistributedCell: bad cell index");
    num_cells_ = cfg.num_cells;
    num_beams_ = cfg.bs_antennas;
    weight_w_ = cfg.weights[cell] * cfg.bandwidth;
    noise_ = cfg.noise_power;
    amp_ = cfg.amp_inefficiency[cell];
    budget_ = cfg.power_budget[cell];
    fixed_power_ =
        cfg.bs_antennas * cfg.per_antenna_power[cell] + cfg.static_power[cell];

    const int K = cfg.users_per_cell[cell];
    own_link_.reserve(K);
    for (int k = 0; k < K; ++k)
        own_link_.push_back(stats.coupling(UserRef{cell, k}, cell));
    out_link_.resize(cfg.num_cells);
    for (int q = 0; q < cfg.num_cells; ++q) {
        if (q == cell) continue;
        out_link_[q].reserve(cfg.users_per_cell[q]);
        for (int a = 0; a < cfg.users_per_cell[q]; ++a)
            out_link_[q].push_back(stats.coupling(UserRef{q, a}, cell));
    }

    cache_.assign(K, std::vector<VectorXd>(cfg.num_cells));
    for (int k = 0; k < K; ++k) {
        const int n = cfg.user_antennas[cell][k];
        for (int q = 0; q < cfg.num_cells; ++q)
            if (q != cell) cache_[k][q] = VectorXd::Zero(n);
        lambda_.push_back(VectorXd::Zero(num_beams_));
        dens_.push_back(VectorXd::Zero(n));
    }
    cell_delta_ = VectorXd::Zero(num_beams_);
    d_total_ = VectorXd::Zero(num_beams_);
    anchor_lambda_.resize(K);
    anchor_cross_.resize(K);
    anchor_floor_.resize(K);
    gamma_.resize(K);
    gamma_tilde_.resize(K);
    d_own_.resize(K);
    const_rate_.assign(K, 0.0);
    b_anchor_.assign(K, 0.0);
    rate_anchor_.assign(K, 0.0);
}

VectorXd DistributedCell::interference_report(UserRef target) const {
    if (target.cell == cell_)
        throw std::invalid_argument(
            "interference_report: target is served by this cell");
    VectorXd total = VectorXd::Zero(num_beams_);
    for (const VectorXd& lam : lambda_) total += lam;
    return rx_power_diag(out_link_[target.cell][target.user], total);
}

void DistributedCell::receive_report(int from_cell, int user,
                                     const VectorXd& scalars) {
    if (from_cell == cell_)
        throw std::invalid_argument("receive_report: from own cell");
    if (scalars.size() != cache_[user][from_cell].size())
        throw std::invalid_argument("receive_report: size mismatch");
    cache_[user][from_cell] = scalars;
}

void DistributedCell::load_allocation(
    const std::vector<VectorXd>& own_lambda) {
    if (static_cast<int>(own_lambda.size()) != num_users())
        throw std::invalid_argument("load_allocation: wrong user count");
    lambda_ = own_lambda;
    if (anchored_) {
        cell_delta_.setZero();
        for (int k = 0; k < num_users(); ++k)
            cell_delta_ += lambda_[k] - anchor_lambda_[k];
        rebuild_denominators();
    }
}

void DistributedCell::refresh_anchor() {
    const int K = num_users();
    for (int k = 0; k < K; ++k) {
        anchor_lambda_[k] = lambda_[k];
        VectorXd cross = VectorXd::Zero(dens_[k].size());
        for (int q = 0; q < num_cells_; ++q)
            if (q != cell_) cross += cache_[k][q];
        anchor_cross_[k] = cross;
        VectorXd floor = cross.array() + noise_;
        for (int a = 0; a < K; ++a)
            if (a != k) floor += rx_power_diag(own_link_[k], lambda_[a]);
        anchor_floor_[k] = floor;
        const DeState de = de_fixed_point(own_link_[k], lambda_[k], floor,
                                          opts_.de_tol, opts_.de_max_iter);
        gamma_[k] = de.gamma;
        gamma_tilde_[k] = de.gamma_tilde;
        const_rate_[k] = -(1.0 - de.phi_tilde.array().inverse()).sum();
        d_own_[k] = tx_sensitivity_diag(own_link_[k], floor.cwiseInverse());
        b_anchor_[k] = floor.array().log().sum();
        rate_anchor_[k] = de_user_rate(de);
    }
    d_total_.setZero();
    for (int k = 0; k < K; ++k) d_total_ += d_own_[k];
    cell_delta_.setZero();
    anchored_ = true;
    rebuild_denominators();
}

void DistributedCell::rebuild_denominators() {
    if (!anchored_) return;
    const int K = num_users();
    for (int k = 0; k < K; ++k) {
        VectorXd den = gamma_tilde_[k].array() + noise_;
        for (int q = 0; q < num_cells_; ++q)
            if (q != cell_) den += cache_[k][q];
        for (int a = 0; a < K; ++a)
            if (a != k) den += rx_power_diag(own_link_[k], lambda_[a]);
        dens_[k] = den;
    }
}

DistributedCell::Slope DistributedCell::beam_slope(int k, int m, double x,
                                                   double eta) const {
    const double xcur = lambda_[k][m];
    const double gamma = gamma_[k][m];
    const double own_den = 1.0 + gamma * x;
    const double own = weight_w_ * gamma / own_den;
    double value = own;
    double deriv = -weight_w_ * gamma * gamma / (own_den * own_den);
    double scale = own;
    for (int a = 0; a < num_users(); ++a) {
        if (a == k) continue;
        const auto col = own_link_[a].col(m);
        const auto den = (dens_[a] + (x - xcur) * col).array();
        const double t = weight_w_ * (col.array() / den).sum();
        value += t;
        scale += t;
        deriv -= weight_w_ * (col.array().square() / den.square()).sum();
    }
    const double drain =
        weight_w_ * (d_total_[m] - d_own_[k][m]) + eta * amp_ + price_;
    value -= drain;
    scale += drain;
    return {value, deriv, std::max(scale, 1e-300)};
}

double DistributedCell::beam_root(int k, int m, double eta) const {
    if (beam_slope(k, m, 0.0, eta).value <= 0.0) return 0.0;
    if (beam_slope(k, m, budget_, eta).value >= 0.0) return budget_;
    return detail::decreasing_root(
        [&](double x) { return beam_slope(k, m, x, eta); }, budget_,
        lambda_[k][m], opts_.newton_tol * budget_, opts_.newton_cap);
}

void DistributedCell::commit(int k, int m, double x) {
    const double delta = x - lambda_[k][m];
    if (delta == 0.0) return;
    lambda_[k][m] = x;
    cell_delta_[m] += delta;
    for (int a = 0; a < num_users(); ++a)
        if (a != k) dens_[a] += delta * own_link_[a].col(m);
}

bool DistributedCell::sweep(double eta) {
    for (int pass = 0; pass < opts_.sweep_cap; ++pass) {
        double sup = 0.0;
        for (int k = 0; k < num_users(); ++k)
            for (int m = 0; m < num_beams_; ++m) {
                const double old_x = lambda_[k][m];
                const double x = beam_root(k, m, eta);
                commit(k, m, x);
                sup = std::max(sup, std::abs(x - old_x));
            }
        if (sup <= opts_.sweep_tol * budget_) return true;
    }
    return false;
}

double DistributedCell::radiated_power() const {
    double p = 0.0;
    for (const VectorXd& lam : lambda_) p += lam.sum();
    return p;
}

double DistributedCell::consumed_power() const {
    return amp_ * radiated_power() + fixed_power_;
}

double DistributedCell::anchor_rate() const {
    double r = 0.0;
    for (double v : rate_anchor_) r += v;
    return r;
}

double DistributedCell::surrogate_rate() const {
    if (!anchored_)
        throw std::logic_error("surrogate_rate before refresh_anchor");
    double rate = 0.0;
    for (int k = 0; k < num_users(); ++k) {
        VectorXd cross = VectorXd::Zero(dens_[k].size());
        for (int q = 0; q < num_cells_; ++q)
            if (q != cell_) cross += cache_[k][q];
        const double a_hat =
            (gamma_[k].array() * lambda_[k].array()).log1p().sum() +
            dens_[k].array().log().sum() + const_rate_[k];
        const double volume =
            b_anchor_[k] +
            ((cross - anchor_cross_[k]).array() / anchor_floor_[k].array())
                .sum() +
            d_own_[k].dot(cell_delta_ - (lambda_[k] - anchor_lambda_[k]));
        rate += a_hat - volume;
    }
    return rate;
}

double DistributedCell::ratio_candidate() const {
    return std::max(0.0, weight_w_ * surrogate_rate() / consumed_power());
}

void DistributedCell::solve_local(double eta, double damping) {
    if (!anchored_)
        throw std::logic_error("solve_local before refresh_anchor");
    rebuild_denominators();
    const std::vector<VectorXd> before = lambda_;
    clean_ = true;

    // `clean_` tracks only the most recent sweep: exploratory price probes
    // far from the binding price may hit the sweep cap without contaminating
    // the verdict on the state actually committed, which every path below
    // ends by sweeping once more.
    auto sweep_radiated = [&](double theta) {
        price_ = theta;
        clean_ = sweep(eta);
        return radiated_power();
    };
    auto bisect = [&](double lo, double hi) {
        for (int it = 0; it < opts_.price_cap; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double rad = sweep_radiated(mid);
            if (rad > budget_)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-14 * hi ||
                std::abs(rad - budget_) <= 1e-13 * budget_)
                break;
        }
        sweep_radiated(hi);  // end on the feasible side
    };

    const double slack = 1e-12 * budget_;
    const double rad = sweep_radiated(price_);
    if (rad <= budget_ + slack) {
        if (price_ > 0.0 && budget_ - rad > slack) {
            // Over-priced: any binding price lies below the warm one.
            const double hi = price_;
            if (sweep_radiated(0.0) > budget_ + slack) bisect(0.0, hi);
        }
    } else {
        double lo = price_;
        double hi = std::max(price_, 1.0);
        int expand = 0;
        while (sweep_radiated(hi) > budget_ + slack && expand++ < 200) {
            lo = hi;
            hi *= 4.0;
        }
        bisect(lo, hi);
    }

    if (damping < 1.0) {
        for (int k = 0; k < num_users(); ++k)
            lambda_[k] = before[k] + damping * (lambda_[k] - before[k]);
        cell_delta_.setZero();
        for (int k = 0; k < num_users(); ++k)
            cell_delta_ += lambda_[k] - anchor_lambda_[k];
        rebuild_denominators();
    }
    last_move_ = 0.0;
    for (int k = 0; k < num_users(); ++k)
        last_move_ = std::max(last_move_,
                              (lambda_[k] - before[k]).cwiseAbs().maxCoeff());
}

KktReport DistributedCell::local_kkt(double eta) const {
    KktReport rep;
    for (int k = 0; k < num_users(); ++k)
        for (int m = 0; m < num_beams_; ++m) {
            const double x = lambda_[k][m];
            const auto e = beam_slope(k, m, x, eta);
            const double res = e.value / e.scale;
            if (x <= 0.0)
                rep.activity = std::max(rep.activity, std::max(0.0, res));
            else if (x >= budget_)
                rep.stationarity =
                    std::max(rep.stationarity, std::max(0.0, -res));
            else
                rep.stationarity = std::max(rep.stationarity, std::abs(res));
        }
    const double gap = radiated_power() - budget_;
    rep.feasibility = std::max(0.0, gap) / budget_;
    if (price_ > 0.0) rep.complementarity = std::abs(gap) / budget_;
    return rep;
}

// --------------------------------------------------------- DistributedSolver

DistributedSolver::DistributedSolver(DistributedOptions opts) : opts_(opts) {
    bus_.enable_log(opts_.log_bus);
}

void DistributedSolver::reset() {
    cells_.clear();
    bus_.reset();
    bus_.enable_log(opts_.log_bus);
    last_candidates_.clear();
    round_counter_ = 0;
    reported_scalars_ = 0;
    seeded_ = false;
}

long long DistributedSolver::setup_scalars(const ChannelStats& stats) {
    const NetworkConfig& cfg = stats.config;
    long long total = 0;
    for (int u = 0; u < cfg.num_cells; ++u) {
        long long antennas = 0;
        for (int n : cfg.user_antennas[u]) antennas += n;
        total += static_cast<long long>(cfg.num_cells - 1) * antennas;
    }
    return total;
}

void DistributedSolver::ensure_cells(const ChannelStats& stats) {
    if (!cells_.empty()) return;
    cells_.reserve(stats.config.num_cells);
    for (int u = 0; u < stats.config.num_cells; ++u)
        cells_.emplace_back(stats, u, opts_.local);
}

void DistributedSolver::load_cells(const PowerAllocation& alloc) {
    for (std::size_t u = 0; u < cells_.size(); ++u)
        cells_[u].load_allocation(alloc.lambda[u]);
}

bool DistributedSolver::cells_match(const PowerAllocation& alloc) const {
    for (std::size_t u = 0; u < cells_.size(); ++u) {
        const auto& own = cells_[u].allocation();
        for (std::size_t k = 0; k < own.size(); ++k)
            if ((own[k] - alloc.lambda[u][k]).cwiseAbs().maxCoeff() > 1e-12)
                return false;
    }
    return true;
}

void DistributedSolver::seed_caches(bool initial) {
    const int U = static_cast<int>(cells_.size());
    for (int u = 0; u < U; ++u)
        for (int q = 0; q < U; ++q) {
            if (q == u) continue;
            for (int k = 0; k < cells_[u].num_users(); ++k) {
                const VectorXd c =
                    cells_[q].interference_report(UserRef{u, k});
                cells_[u].receive_report(q, k, c);
                bus_.seed(q, u, k, c.size(), initial);
            }
        }
    seeded_ = true;
}

void DistributedSolver::begin_outer(const ChannelStats& stats,
                                    const SurrogateModel& model) {
    ensure_cells(stats);
    if (!seeded_ || !cells_match(model.anchor)) {
        const bool initial = !seeded_;
        load_cells(model.anchor);
        seed_caches(initial);
    }
    for (auto& cell : cells_) cell.refresh_anchor();
}

InnerResult DistributedSolver::solve(const ChannelStats& stats,
                                     const SurrogateModel&, double eta,
                                     const PowerAllocation& warm) {
    ensure_cells(stats);
    if (!seeded_ || !cells_match(warm)) {
        const bool initial = !seeded_;
        load_cells(warm);
        seed_caches(initial);
    }
    const NetworkConfig& cfg = stats.config;
    const int U = static_cast<int>(cells_.size());
    double budget_scale = 0.0;
    for (double b : cfg.power_budget) budget_scale = std::max(budget_scale, b);

    InnerResult res;
    bool flagged = false;
    double damping = 1.0;
    double prev_sup = std::numeric_limits<double>::infinity();
    int stall = 0;

    for (int round = 0; round < opts_.round_cap; ++round) {
        bus_.begin_round(round_counter_);
        for (int u = 0; u < U; ++u) {
            const int omit =
                static_cast<int>(round_counter_ % cells_[u].num_users());
            for (int q = 0; q < U; ++q) {
                if (q == u) continue;
                for (int k = 0; k < cells_[u].num_users(); ++k) {
                    if (k == omit) continue;
                    const VectorXd c =
                        cells_[q].interference_report(UserRef{u, k});
                    cells_[u].receive_report(q, k, c);
                    bus_.coefficients(q, u, k, c.size());
                }
            }
        }
        for (auto& cell : cells_) cell.solve_local(eta, damping);
        last_candidates_.assign(U, 0.0);
        for (int u = 0; u < U; ++u) {
            last_candidates_[u] = cells_[u].ratio_candidate();
            bus_.ratio(u);
        }
        bus_.end_round();
        ++round_counter_;

        double sup = 0.0;
        for (const auto& cell : cells_) sup = std::max(sup, cell.last_move());

        DualDiagnostic row;
        row.step = static_cast<int>(round_counter_);
        double norm2 = 0.0, violation = 0.0;
        for (int u = 0; u < U; ++u) {
            const double gap =
                cfg.power_budget[u] - cells_[u].radiated_power();
            norm2 += gap * gap;
            violation = std::max(violation, -gap);
        }
        row.subgradient_norm_power = std::sqrt(norm2);
        row.max_power_violation = std::max(0.0, violation);
        res.dual_rows.push_back(row);

        if (sup <= opts_.round_tol * budget_scale) break;
        // Oscillation safeguard: if the Jacobi sup-change stops contracting,
        // damp the per-cell commits once.
        if (round >= 3 && sup > 0.95 * prev_sup) {
            if (++stall >= 3 && damping == 1.0) {
                damping = 0.5;
                stall = 0;
            }
        } else {
            stall = 0;
        }
        prev_sup = sup;
        if (round == opts_.round_cap - 1) flagged = true;
    }

    res.alloc = PowerAllocation::zeros(cfg);
    for (int u = 0; u < U; ++u) res.alloc.lambda[u] = cells_[u].allocation();

    // Mid-iteration wobble is expected while the reports are still moving;
    // what matters is the state actually returned, so judge the run by the
    // final round's local solves and the certificate it produces.
    KktReport kkt;
    for (const auto& cell : cells_) {
        if (!cell.last_solve_clean()) flagged = true;
        const KktReport local = cell.local_kkt(eta);
        kkt.stationarity = std::max(kkt.stationarity, local.stationarity);
        kkt.activity = std::max(kkt.activity, local.activity);
        kkt.complementarity =
            std::max(kkt.complementarity, local.complementarity);
        kkt.feasibility = std::max(kkt.feasibility, local.feasibility);
    }
    flagged |= !kkt.pass();
    kkt.converged = !flagged;
    res.kkt = kkt;
    res.flagged = flagged;

    const long long seen = bus_.resync_scalars() + bus_.round_scalars_total();
    res.messages_delta = seen - reported_scalars_;
    reported_scalars_ = seen;
    return res;
}

}  // namespace mmee
