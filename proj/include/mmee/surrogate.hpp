// Concave surrogate of the DE rate, built at an anchor allocation: the
// signal-side auxiliaries are frozen at the anchor while the interference
// log-volume is replaced by its first-order expansion.  The surrogate equals
// the exact DE rate at the anchor and matches its gradient there (freezing
// the auxiliaries costs no first-order accuracy because the exact rate is
// stationary in them), and it is jointly concave in all beam powers — which
// is what the water-filling inner solvers exploit.  It is NOT a global lower
// bound: far from the anchor (most visibly when a cell's own powers collapse
// toward zero) the frozen signal-side terms retain credit the exact rate
// loses, so the outer loop re-validates every candidate against the exact
// rates and damps steps the surrogate oversold.  Also hosts the
// fractional-program scalarization ratio.
#pragma once

#include "mmee/de_rate.hpp"

namespace mmee {

struct SurrogateModel {
    PowerAllocation anchor;
    // Anchor-frozen DE auxiliaries and interference floors, one per user.
    std::vector<std::vector<DeState>> aux;
    std::vector<std::vector<VectorXd>> floors;
    // Interference log-volume at the anchor and the exact DE rate there.
    std::vector<std::vector<double>> b_anchor;
    std::vector<std::vector<double>> rate_anchor;  // nats
    // gradient[cell][user][tx][m]: sensitivity of receiver (cell,user)'s
    // interference log-volume to beam m of any transmitter in cell tx,
    // evaluated at the anchor.  Identical for every user of cell tx, hence
    // indexed by transmitter cell only.
    std::vector<std::vector<std::vector<VectorXd>>> gradient;
};

// Gradient vectors of the interference log-volume at the anchor, from the
// anchor floors: gradient[r][tx][m] = sum_n omega_{r,tx}(n, m) / floor_r[n].
std::vector<std::vector<std::vector<VectorXd>>> mm_gradient(
    const ChannelStats& stats,
    const std::vector<std::vector<VectorXd>>& anchor_floors);

// Builds the full surrogate model at `anchor` (one DE solve per user).
SurrogateModel build_surrogate(const ChannelStats& stats,
                               const PowerAllocation& anchor,
                               double de_tol = 1e-10, int de_max_iter = 1000);

// Linearized interference log-volume of receiver r at `alloc`:
// b_anchor + sum over all other users' power deltas against the gradient.
// Overestimates the true log-volume (concavity), equal to it at the anchor.
double surrogate_interference(const SurrogateModel& model,
                              const NetworkConfig& cfg,
                              const PowerAllocation& alloc, UserRef r);

// Surrogate rate of one user / one cell at `alloc`, in nats.
double surrogate_user_rate(const SurrogateModel& model,
                           const ChannelStats& stats,
                           const PowerAllocation& alloc, UserRef r);
double surrogate_cell_rate(const SurrogateModel& model,
                           const ChannelStats& stats,
                           const PowerAllocation& alloc, int u);

// Scalarization ratio: min over cells of w_u * W * R_u / P_u, clamped at 0
// (far from the anchor the surrogate numerator can go negative; the
// fractional iteration needs a nonnegative ratio).  Rates in nats.
double dinkelbach_eta(const std::vector<double>& cell_rates,
                      const std::vector<double>& cell_powers,
                      const NetworkConfig& cfg);

// Parametric objective of one cell at ratio eta: w_u * W * R_u - eta * P_u.
inline double dinkelbach_bracket(double cell_rate, double cell_power,
                                 double eta, double weight,
                                 double bandwidth) {
    return weight * bandwidth * cell_rate - eta * cell_power;
}

}  // namespace mmee
