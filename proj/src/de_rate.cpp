#include "mmee/de_rate.hpp"

#include <cmath>
#include <string>

#include "mmee/diag_ops.hpp"
#include "mmee/scenario.hpp"

namespace mmee {

namespace {

// Relative sup-norm distance, safe when both entries are zero.
double rel_sup(const VectorXd& a, const VectorXd& b) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
        r = std::max(r, std::abs(a[i] - b[i]) / scale);
    }
    return r;
}

}  // namespace

DeFailure::DeFailure(double residual_, int iterations_)
    : std::runtime_error("DE fixed point did not converge after " +
                         std::to_string(iterations_) +
                         " iterations (residual " + std::to_string(residual_) +
                         ")"),
      residual(residual_),
      iterations(iterations_) {}

DeState de_fixed_point(const MatrixXd& omega_serving, const VectorXd& lambda,
                       const VectorXd& floor, double tol, int max_iter) {
    const Eigen::Index n_rx = omega_serving.rows();
    const Eigen::Index n_beams = omega_serving.cols();
    if (lambda.size() != n_beams || floor.size() != n_rx)
        throw std::invalid_argument("de_fixed_point: dimension mismatch");
    if ((floor.array() <= 0.0).any())
        throw std::invalid_argument("de_fixed_point: floor must be positive");

    // Substituting the three affine relations into the phi_tilde equation
    // reduces the coupled system to a fixed point in phi_tilde alone:
    //   G(pt)_n = 1 + (1/floor_n) sum_m omega_nm lambda_m / phi_m(pt),
    //   phi_m(pt) = 1 + lambda_m sum_n omega_nm / (pt_n floor_n).
    // G is monotone in pt, with the unique solution at pt >= 1.
    const auto map = [&](const VectorXd& pt) -> VectorXd {
        const VectorXd gamma =
            omega_serving.transpose() *
            (pt.array() * floor.array()).inverse().matrix();
        const Eigen::ArrayXd phi = 1.0 + gamma.array() * lambda.array();
        const VectorXd gamma_tilde =
            omega_serving * (lambda.array() / phi).matrix();
        return (1.0 + gamma_tilde.array() / floor.array()).matrix();
    };

    VectorXd pt = VectorXd::Ones(n_rx);
    VectorXd g = map(pt);
    double residual = rel_sup(g, pt);

    for (int it = 0; it < max_iter; ++it) {
        if (residual <= tol) {
            // Final state built from pt: the gamma, phi and phi_tilde
            // defining relations hold exactly; the gamma_tilde relation
            // carries the (<= tol) residual.
            DeState s;
            s.gamma = omega_serving.transpose() *
                      (pt.array() * floor.array()).inverse().matrix();
            s.phi = VectorXd::Ones(n_beams) +
                    (s.gamma.array() * lambda.array()).matrix();
            s.phi_tilde = pt;
            s.gamma_tilde = ((pt.array() - 1.0) * floor.array()).matrix();
            return s;
        }

        const VectorXd r = g - pt;

        // Newton step on pt - G(pt) = 0 with a finite-difference Jacobian
        // (the system is tiny: one row per receive antenna).  Falls back to
        // a damped fixed-point step whenever Newton fails to reduce the
        // residual, which keeps the global monotone-convergence behavior.
        bool moved = false;
        if (n_rx <= 16) {
            MatrixXd jac = MatrixXd::Identity(n_rx, n_rx);
            for (Eigen::Index j = 0; j < n_rx; ++j) {
                const double h = 1e-7 * pt[j];
                VectorXd shifted = pt;
                shifted[j] += h;
                jac.col(j) -= (map(shifted) - g) / h;
            }
            const VectorXd cand =
                (pt + jac.partialPivLu().solve(r)).cwiseMax(1.0);
            const VectorXd g_cand = map(cand);
            const double res_cand = rel_sup(g_cand, cand);
            if (res_cand < residual) {
                pt = cand;
                g = g_cand;
                residual = res_cand;
                moved = true;
            }
        }
        if (!moved) {
            double alpha = 1.0;
            for (int tries = 0; tries < 8; ++tries) {
                const VectorXd cand = pt + alpha * r;
                const VectorXd g_cand = map(cand);
                const double res_cand = rel_sup(g_cand, cand);
                if (res_cand < residual || tries == 7) {
                    pt = cand;
                    g = g_cand;
                    residual = res_cand;
                    break;
                }
                alpha *= 0.5;
            }
        }
    }
    throw DeFailure(residual, max_iter);
}

DeState de_solve(const ChannelStats& stats, const PowerAllocation& alloc,
                 UserRef target, double tol, int max_iter) {
    return de_fixed_point(stats.coupling(target, target.cell),
                          alloc.at(target),
                          interference_floor(stats, alloc, target), tol,
                          max_iter);
}

double de_user_rate(const DeState& de) {
    double rate = 0.0;
    for (Eigen::Index m = 0; m < de.gamma.size(); ++m)
        rate += std::log(de.phi[m]);  // phi = 1 + gamma * lambda exactly
    for (Eigen::Index n = 0; n < de.phi_tilde.size(); ++n)
        rate += std::log(de.phi_tilde[n]) - 1.0 + 1.0 / de.phi_tilde[n];
    return rate;
}

RateReport de_rate(const ChannelStats& stats, const PowerAllocation& alloc,
                   double tol, int max_iter) {
    const NetworkConfig& cfg = stats.config;
    RateReport report;
    report.a_bar.resize(cfg.num_cells);
    report.b.resize(cfg.num_cells);
    report.rate.resize(cfg.num_cells);
    report.cell_rate.assign(cfg.num_cells, 0.0);
    report.aux.resize(cfg.num_cells);
    report.floors.resize(cfg.num_cells);

    for_each_user(cfg, [&](UserRef r) {
        VectorXd floor = interference_floor(stats, alloc, r);
        DeState de = de_fixed_point(stats.coupling(r, r.cell), alloc.at(r),
                                    floor, tol, max_iter);
        const double rate = de_user_rate(de);
        const double b = floor.array().log().sum();
        report.a_bar[r.cell].push_back(rate + b);
        report.b[r.cell].push_back(b);
        report.rate[r.cell].push_back(rate);
        report.cell_rate[r.cell] += rate;
        report.aux[r.cell].push_back(std::move(de));
        report.floors[r.cell].push_back(std::move(floor));
    });
    return report;
}

std::vector<std::vector<McEstimate>> mc_ergodic_rate(
    const ChannelStats& stats, const PowerAllocation& alloc, int num_samples,
    std::mt19937_64& rng) {
    if (num_samples < 1)
        throw std::invalid_argument("mc_ergodic_rate: num_samples must be >= 1");
    const NetworkConfig& cfg = stats.config;
    std::vector<std::vector<McEstimate>> out(cfg.num_cells);

    for_each_user(cfg, [&](UserRef r) {
        const MatrixXd& omega = stats.coupling(r, r.cell);
        const VectorXd floor = interference_floor(stats, alloc, r);
        const VectorXd& lambda = alloc.at(r);
        const double log_floor = floor.array().log().sum();

        double sum = 0.0;
        double sum_sq = 0.0;
        for (int s = 0; s < num_samples; ++s) {
            const Eigen::MatrixXcd g = sample_beam_channel(omega, rng);
            Eigen::MatrixXcd cov = g * lambda.asDiagonal() * g.adjoint();
            cov += floor.cast<std::complex<double>>().asDiagonal();
            const Eigen::LLT<Eigen::MatrixXcd> llt(cov);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error(
                    "mc_ergodic_rate: covariance factorization failed");
            const double logdet =
                2.0 * llt.matrixL().toDenseMatrix().diagonal().real().array()
                          .log()
                          .sum();
            const double value = logdet - log_floor;
            sum += value;
            sum_sq += value * value;
        }
        McEstimate est;
        est.mean = sum / num_samples;
        if (num_samples > 1) {
            const double var =
                (sum_sq - num_samples * est.mean * est.mean) /
                (num_samples - 1);
            est.std_error = std::sqrt(std::max(var, 0.0) / num_samples);
        }
        out[r.cell].push_back(est);
    });
    return out;
}

double cell_power(const PowerAllocation& alloc, const NetworkConfig& cfg,
                  int u) {
    return cfg.amp_inefficiency[u] * alloc.cell_sum(u) +
           cfg.bs_antennas * cfg.per_antenna_power[u] + cfg.static_power[u];
}

}  // namespace mmee
