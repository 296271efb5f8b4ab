// Diagonal beam-domain operator kernels.  Every covariance-like object in
// this codebase is diagonal, so the two matrix-valued operators the rate
// expressions need reduce to a coupling-weighted matvec and its transpose:
//
//   rx_power_diag(omega, x)[n]       = sum_m omega(n, m) * x[m]
//   tx_sensitivity_diag(omega, y)[m] = sum_n omega(n, m) * y[n]
//
// rx_power_diag maps per-beam transmit quantities to per-receive-antenna
// power levels; tx_sensitivity_diag maps per-receive-antenna weights back to
// per-beam sensitivities.  Both are linear; both are shared by the rate,
// gradient, and water-filling code.
#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "mmee/types.hpp"

namespace mmee {

template <typename DerivedW, typename DerivedX>
Eigen::Vector<typename DerivedW::Scalar, Eigen::Dynamic> rx_power_diag(
    const Eigen::MatrixBase<DerivedW>& omega,
    const Eigen::MatrixBase<DerivedX>& x) {
    if (omega.cols() != x.size())
        throw std::invalid_argument(
            "rx_power_diag: vector length must equal beam count");
    return omega.derived() * x.derived();
}

template <typename DerivedW, typename DerivedY>
Eigen::Vector<typename DerivedW::Scalar, Eigen::Dynamic> tx_sensitivity_diag(
    const Eigen::MatrixBase<DerivedW>& omega,
    const Eigen::MatrixBase<DerivedY>& y) {
    if (omega.rows() != y.size())
        throw std::invalid_argument(
            "tx_sensitivity_diag: vector length must equal antenna count");
    return omega.derived().transpose() * y.derived();
}

// Per-receive-antenna interference-plus-noise floor of `target`: noise power
// plus the coupled power of every other user's allocation, from every cell.
// The target's own beams never contribute (its own signal is not
// interference), which is also why the floor is constant in the target's own
// powers.
inline VectorXd interference_floor(const ChannelStats& stats,
                                   const PowerAllocation& alloc,
                                   UserRef target) {
    const NetworkConfig& cfg = stats.config;
    VectorXd floor = VectorXd::Constant(
        cfg.user_antennas[target.cell][target.user], cfg.noise_power);
    for_each_user(cfg, [&](UserRef src) {
        if (src == target) return;
        floor += rx_power_diag(stats.coupling(target, src.cell),
                               alloc.at(src));
    });
    return floor;
}

}  // namespace mmee
