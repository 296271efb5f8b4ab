// Deterministic-equivalent (DE) rate machinery: the coupled auxiliary fixed
// point, the DE rate expression built from it, the Monte-Carlo ergodic-rate
// oracle used to validate it, and per-cell power / energy-efficiency helpers.
#pragma once

#include <numbers>
#include <random>
#include <stdexcept>

#include "mmee/types.hpp"

namespace mmee {

// Converged DE auxiliaries for a single user.  gamma/phi live in the beam
// domain (length M), gamma_tilde/phi_tilde in the receive-antenna domain
// (length N).  phi = 1 + gamma .* lambda and phi_tilde = 1 + gamma_tilde ./
// floor hold exactly on every returned state.
struct DeState {
    VectorXd gamma;
    VectorXd gamma_tilde;
    VectorXd phi;
    VectorXd phi_tilde;
};

// Non-convergence of the DE fixed point, carrying the last residual so
// callers can report how close the iteration got.
struct DeFailure : std::runtime_error {
    DeFailure(double residual_, int iterations_);
    double residual;
    int iterations;
};

// Solves the per-user DE fixed point from phi = phi_tilde = 1.
// `omega_serving` is the user's coupling to its own BS, `lambda` its beam
// powers, `floor` its interference-plus-noise floor (constant in `lambda`).
// The coupled system is reduced to a fixed point in phi_tilde alone and
// solved by Newton steps with a damped fixed-point fallback, so convergence
// stays fast in the high-power regime where plain successive substitution
// stalls.  Convergence is measured as the relative sup-norm residual of the
// coupled defining equations evaluated at the returned state.  Throws
// DeFailure after max_iter.
DeState de_fixed_point(const MatrixXd& omega_serving, const VectorXd& lambda,
                       const VectorXd& floor, double tol = 1e-10,
                       int max_iter = 1000);

// Convenience wrapper computing the floor from the full network state.
DeState de_solve(const ChannelStats& stats, const PowerAllocation& alloc,
                 UserRef target, double tol = 1e-10, int max_iter = 1000);

// DE rate of one user in nats, given its converged auxiliaries:
//   rate = sum_m log(1 + gamma_m lambda_m)
//        + sum_n [log phi_tilde_n - 1 + 1/phi_tilde_n],
// an algebraically equivalent form of (signal-plus-interference log-volume
// minus interference log-volume) that is nonnegative term by term.
double de_user_rate(const DeState& de);

// Per-user DE rates for the whole network, with the converged auxiliaries
// and interference floors cached for reuse by the optimizer.
struct RateReport {
    std::vector<std::vector<double>> a_bar;  // [cell][user], nats
    std::vector<std::vector<double>> b;      // [cell][user], nats
    std::vector<std::vector<double>> rate;   // a_bar - b, nats
    std::vector<double> cell_rate;           // per-cell sums, nats
    std::vector<std::vector<DeState>> aux;
    std::vector<std::vector<VectorXd>> floors;
};
RateReport de_rate(const ChannelStats& stats, const PowerAllocation& alloc,
                   double tol = 1e-10, int max_iter = 1000);

// Monte-Carlo estimate of the exact ergodic rate: averages
// logdet(diag(floor) + G diag(lambda) G^H) - logdet(diag(floor)) over
// channel realizations G.  Ground truth for all DE accuracy checks.
struct McEstimate {
    double mean = 0.0;       // nats
    double std_error = 0.0;  // nats
};
std::vector<std::vector<McEstimate>> mc_ergodic_rate(
    const ChannelStats& stats, const PowerAllocation& alloc, int num_samples,
    std::mt19937_64& rng);

// Consumed power of cell u: amplifier inefficiency times radiated power plus
// per-antenna and static circuit terms.
double cell_power(const PowerAllocation& alloc, const NetworkConfig& cfg,
                  int u);

// Energy efficiency in nat/J from a cell-rate in nats (per channel use) and
// consumed power in watts.  The reporting layer divides by ln 2 for bit/J.
inline double cell_ee(double cell_rate_nats, double power_w,
                      double bandwidth_hz) {
    return bandwidth_hz * cell_rate_nats / power_w;
}

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

}  // namespace mmee
