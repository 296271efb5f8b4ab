#include "mmee/surrogate.hpp"

#include <cmath>

#include "mmee/diag_ops.hpp"

namespace mmee {

std::vector<std::vector<std::vector<VectorXd>>> mm_gradient(
    const ChannelStats& stats,
    const std::vector<std::vector<VectorXd>>& anchor_floors) {
    const NetworkConfig& cfg = stats.config;
    std::vector<std::vector<std::vector<VectorXd>>> gradient(cfg.num_cells);
    for (int u = 0; u < cfg.num_cells; ++u)
        gradient[u].resize(cfg.users_per_cell[u]);
    for_each_user(cfg, [&](UserRef r) {
        const VectorXd inv_floor =
            anchor_floors[r.cell][r.user].cwiseInverse();
        auto& per_tx = gradient[r.cell][r.user];
        per_tx.reserve(cfg.num_cells);
        for (int tx = 0; tx < cfg.num_cells; ++tx)
            per_tx.push_back(
                tx_sensitivity_diag(stats.coupling(r, tx), inv_floor));
    });
    return gradient;
}

SurrogateModel build_surrogate(const ChannelStats& stats,
                               const PowerAllocation& anchor, double de_tol,
                               int de_max_iter) {
    SurrogateModel model;
    model.anchor = anchor;
    RateReport report = de_rate(stats, anchor, de_tol, de_max_iter);
    model.aux = std::move(report.aux);
    model.floors = std::move(report.floors);
    model.b_anchor = std::move(report.b);
    model.rate_anchor = std::move(report.rate);
    model.gradient = mm_gradient(stats, model.floors);
    return model;
}

double surrogate_interference(const SurrogateModel& model,
                              const NetworkConfig& cfg,
                              const PowerAllocation& alloc, UserRef r) {
    const auto& grad = model.gradient[r.cell][r.user];
    double value = model.b_anchor[r.cell][r.user];
    // Sum the gradient against every cell's total power delta, then remove
    // the receiver's own contribution (its own signal is not interference).
    for (int tx = 0; tx < cfg.num_cells; ++tx) {
        VectorXd cell_delta = VectorXd::Zero(cfg.bs_antennas);
        for (int i = 0; i < cfg.users_per_cell[tx]; ++i)
            cell_delta += alloc.lambda[tx][i] - model.anchor.lambda[tx][i];
        value += grad[tx].dot(cell_delta);
    }
    value -= grad[r.cell].dot(alloc.at(r) - model.anchor.at(r));
    return value;
}

double surrogate_user_rate(const SurrogateModel& model,
                           const ChannelStats& stats,
                           const PowerAllocation& alloc, UserRef r) {
    const DeState& de = model.aux[r.cell][r.user];
    const VectorXd& lambda = alloc.at(r);
    const VectorXd floor = interference_floor(stats, alloc, r);

    double a = 0.0;
    for (Eigen::Index m = 0; m < lambda.size(); ++m)
        a += std::log1p(de.gamma[m] * lambda[m]);
    for (Eigen::Index n = 0; n < floor.size(); ++n) {
        a += std::log(de.gamma_tilde[n] + floor[n]);
        a -= 1.0 - 1.0 / de.phi_tilde[n];
    }
    return a - surrogate_interference(model, stats.config, alloc, r);
}

double surrogate_cell_rate(const SurrogateModel& model,
                           const ChannelStats& stats,
                           const PowerAllocation& alloc, int u) {
    double rate = 0.0;
    for (int k = 0; k < stats.config.users_per_cell[u]; ++k)
        rate += surrogate_user_rate(model, stats, alloc, UserRef{u, k});
    return rate;
}

double dinkelbach_eta(const std::vector<double>& cell_rates,
                      const std::vector<double>& cell_powers,
                      const NetworkConfig& cfg) {
    double eta = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_cells; ++u) {
        if (!(cell_powers[u] > 0.0))
            throw std::invalid_argument("dinkelbach_eta: powers must be > 0");
        eta = std::min(eta, cfg.weights[u] * cfg.bandwidth * cell_rates[u] /
                                cell_powers[u]);
    }
    return std::max(eta, 0.0);
}

}  // namespace mmee
