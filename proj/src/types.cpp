#include "mmee/types.hpp"

#include <algorithm>
#include <cmath>

namespace mmee {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void NetworkConfig::validate() const {
    require(num_cells >= 1, "num_cells must be >= 1");
    require(bs_antennas >= 1, "bs_antennas must be >= 1");
    require(static_cast<int>(users_per_cell.size()) == num_cells,
            "users_per_cell must have one entry per cell");
    require(static_cast<int>(user_antennas.size()) == num_cells,
            "user_antennas must have one entry per cell");
    for (int u = 0; u < num_cells; ++u) {
        require(users_per_cell[u] >= 1, "users_per_cell entries must be >= 1");
        require(static_cast<int>(user_antennas[u].size()) == users_per_cell[u],
                "user_antennas row length must equal users_per_cell");
        for (int n : user_antennas[u])
            require(n >= 1, "user_antennas entries must be >= 1");
    }
    require(noise_power > 0.0, "noise_power must be > 0");
    require(bandwidth > 0.0, "bandwidth must be > 0");
    auto per_cell = [&](const std::vector<double>& v, const std::string& name) {
        require(static_cast<int>(v.size()) == num_cells,
                name + " must have one entry per cell");
    };
    per_cell(amp_inefficiency, "amp_inefficiency");
    per_cell(per_antenna_power, "per_antenna_power");
    per_cell(static_power, "static_power");
    per_cell(power_budget, "power_budget");
    per_cell(weights, "weights");
    for (int u = 0; u < num_cells; ++u) {
        require(amp_inefficiency[u] >= 0.0, "amp_inefficiency must be >= 0");
        require(per_antenna_power[u] > 0.0, "per_antenna_power must be > 0");
        require(static_power[u] > 0.0, "static_power must be > 0");
        require(power_budget[u] > 0.0, "power_budget must be > 0");
        require(weights[u] > 0.0, "weights must be > 0");
    }
}

PowerAllocation PowerAllocation::zeros(const NetworkConfig& cfg) {
    PowerAllocation a;
    a.lambda.resize(cfg.num_cells);
    for (int u = 0; u < cfg.num_cells; ++u) {
        a.lambda[u].assign(cfg.users_per_cell[u], VectorXd::Zero(cfg.bs_antennas));
    }
    return a;
}

PowerAllocation PowerAllocation::uniform(const NetworkConfig& cfg) {
    PowerAllocation a = zeros(cfg);
    for (int u = 0; u < cfg.num_cells; ++u) {
        const double per_beam =
            cfg.power_budget[u] / (cfg.users_per_cell[u] * cfg.bs_antennas);
        for (auto& lam : a.lambda[u]) lam.setConstant(per_beam);
    }
    return a;
}

double PowerAllocation::cell_sum(int u) const {
    double s = 0.0;
    for (const auto& lam : lambda[u]) s += lam.sum();
    return s;
}

bool PowerAllocation::feasible(const NetworkConfig& cfg, double tol) const {
    for (int u = 0; u < cfg.num_cells; ++u) {
        for (const auto& lam : lambda[u])
            if ((lam.array() < -tol).any()) return false;
        if (cell_sum(u) > cfg.power_budget[u] * (1.0 + tol) + tol) return false;
    }
    return true;
}

double PowerAllocation::max_abs_diff(const PowerAllocation& other) const {
    double d = 0.0;
    for (size_t u = 0; u < lambda.size(); ++u)
        for (size_t k = 0; k < lambda[u].size(); ++k)
            d = std::max(d,
                         (lambda[u][k] - other.lambda[u][k]).cwiseAbs().maxCoeff());
    return d;
}

void ChannelStats::validate() const {
    config.validate();
    require(static_cast<int>(omega.size()) == config.num_cells,
            "omega must have one entry per receiver cell");
    for (int u = 0; u < config.num_cells; ++u) {
        require(static_cast<int>(omega[u].size()) == config.users_per_cell[u],
                "omega cell row must have one entry per user");
        for (int k = 0; k < config.users_per_cell[u]; ++k) {
            require(static_cast<int>(omega[u][k].size()) == config.num_cells,
                    "omega user row must have one entry per transmitter cell");
            for (int v = 0; v < config.num_cells; ++v) {
                const MatrixXd& w = omega[u][k][v];
                require(w.rows() == config.user_antennas[u][k] &&
                            w.cols() == config.bs_antennas,
                        "coupling matrix has wrong shape");
                require((w.array() >= 0.0).all(),
                        "coupling matrix entries must be nonnegative");
            }
        }
    }
}

}  // namespace mmee
