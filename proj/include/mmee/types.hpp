// Core domain types: network-wide configuration and per-user beam power
// allocations.  Every "matrix" the optimizer touches (powers, channel gains,
// interference floors) is diagonal in the beam domain, so allocations are
// stored as plain vectors and no dense M x M object is ever created.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mmee {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Identifies receiver `user` (0-based) inside `cell`.
struct UserRef {
    int cell = 0;
    int user = 0;
    friend bool operator==(const UserRef&, const UserRef&) = default;
};

// Static description of the network.  Internal units are watts and hertz;
// config parsing converts from dBm / MHz before constructing this.
struct NetworkConfig {
    int num_cells = 0;                            // U
    int bs_antennas = 0;                          // M (beams per BS)
    std::vector<int> users_per_cell;              // K_u, length U
    std::vector<std::vector<int>> user_antennas;  // N_{k,u}, per cell per user
    double noise_power = 0.0;                     // sigma^2, watts
    double bandwidth = 0.0;                       // W, hertz
    std::vector<double> amp_inefficiency;         // xi_u >= 1, per cell
    std::vector<double> per_antenna_power;        // watts, per cell
    std::vector<double> static_power;             // watts, per cell
    std::vector<double> power_budget;             // watts, per cell
    std::vector<double> weights;                  // w_u > 0, per cell

    int total_users() const {
        int n = 0;
        for (int k : users_per_cell) n += k;
        return n;
    }

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Diagonal beam-domain power vectors lambda_{k,u}, one M-vector per user.
struct PowerAllocation {
    std::vector<std::vector<VectorXd>> lambda;  // [cell][user] -> length M

    static PowerAllocation zeros(const NetworkConfig& cfg);
    // The default initial point: P_max,u divided evenly over every beam of
    // every user in the cell.
    static PowerAllocation uniform(const NetworkConfig& cfg);

    VectorXd& at(UserRef r) { return lambda[r.cell][r.user]; }
    const VectorXd& at(UserRef r) const { return lambda[r.cell][r.user]; }

    // Total transmit power of cell u.
    double cell_sum(int u) const;

    // All entries nonnegative and every cell within its budget (+tol).
    bool feasible(const NetworkConfig& cfg, double tol = 1e-9) const;

    // sup-norm distance against an allocation of identical shape.
    double max_abs_diff(const PowerAllocation& other) const;
};

// Full statistical-CSI world state: one coupling matrix per (receiver user,
// transmitter cell) pair.  coupling(r, v) has N_{r} rows and M columns; its
// entries are the second moments of the beam-domain channel gains.
struct ChannelStats {
    NetworkConfig config;
    std::vector<std::vector<std::vector<MatrixXd>>> omega;  // [cell][user][tx]

    const MatrixXd& coupling(UserRef r, int tx_cell) const {
        return omega[r.cell][r.user][tx_cell];
    }
    MatrixXd& coupling(UserRef r, int tx_cell) {
        return omega[r.cell][r.user][tx_cell];
    }

    void validate() const;  // shapes + nonnegativity
};

// Loop over every user as (cell, user) in a fixed deterministic order.
template <typename F>
void for_each_user(const NetworkConfig& cfg, F&& fn) {
    for (int u = 0; u < cfg.num_cells; ++u)
        for (int k = 0; k < cfg.users_per_cell[u]; ++k) fn(UserRef{u, k});
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

}  // namespace mmee
