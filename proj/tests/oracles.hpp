// Independent reference implementations used to pin expected values in the
// test suite.  Everything here favors obvious correctness over speed:
// gradients come from finite differences, optimization is generic projected
// ascent with line search, and closed forms are derived separately from the
// production code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// ---------------------------------------------------------------------------
// Scalar fixed point (single beam, single receive antenna).
//
// With load a = omega * lambda / floor, the reduced auxiliary fixed point
// pt = 1 + a / (1 + a / pt) collapses to pt^2 = pt + a, so
// pt = (1 + sqrt(1 + 4a)) / 2.  At the fixed point the beam-side auxiliary
// phi equals pt as well, giving rate = 2 log pt - 1 + 1/pt.

inline double scalar_phi_tilde(double a) {
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * a));
}

inline double scalar_de_rate(double a) {
    const double pt = scalar_phi_tilde(a);
    return 2.0 * std::log(pt) - 1.0 + 1.0 / pt;
}

// ---------------------------------------------------------------------------
// Exact 1x1 Rayleigh ergodic rate: E[log(1 + rho |h|^2)] with |h|^2 ~ Exp(1)
// equals e^(1/rho) E1(1/rho).  E1 via its alternating series, accurate for
// the moderate arguments used in tests.

inline double exp_integral_e1(double x) {
    constexpr double kEulerGamma = 0.5772156649015328606;
    double sum = -kEulerGamma - std::log(x);
    double power = 1.0;
    double factorial = 1.0;
    for (int k = 1; k <= 80; ++k) {
        power *= x;
        factorial *= static_cast<double>(k);
        const double term = power / (static_cast<double>(k) * factorial);
        sum += (k % 2 == 1) ? term : -term;
    }
    return sum;
}

inline double rayleigh_ergodic_rate(double rho) {
    return std::exp(1.0 / rho) * exp_integral_e1(1.0 / rho);
}

// ---------------------------------------------------------------------------
// Euclidean projection onto { x >= 0, sum x <= cap }.

inline Eigen::VectorXd project_budget(const Eigen::VectorXd& y, double cap) {
    Eigen::VectorXd z = y.cwiseMax(0.0);
    if (z.sum() <= cap) return z;
    // Active budget: z_i = max(y_i - tau, 0) with the water level tau chosen
    // so the clipped coordinates sum to cap (sort + prefix sums).
    std::vector<double> v(y.data(), y.data() + y.size());
    std::sort(v.begin(), v.end(), std::greater<double>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        prefix += v[k];
        const double candidate = (prefix - cap) / static_cast<double>(k + 1);
        if (k + 1 == v.size() || v[k + 1] <= candidate) {
            tau = candidate;
            break;
        }
    }
    return (y.array() - tau).cwiseMax(0.0).matrix();
}

// ---------------------------------------------------------------------------
// Water-filling: maximize  scale * sum_m log(1 + g_m x_m) - drain * sum_m x_m
// subject to x >= 0 and sum x <= cap.  Stationarity gives
// x_m = max(0, scale / (drain + mu) - 1 / g_m) with mu >= 0 the budget
// price, found by bisection when the unpriced solution overshoots the cap.

inline Eigen::VectorXd water_fill(const Eigen::VectorXd& g, double scale,
                                  double drain, double cap) {
    const auto alloc_at = [&](double price) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(g.size());
        for (Eigen::Index m = 0; m < g.size(); ++m)
            if (g[m] > 0.0)
                x[m] = std::max(0.0, scale / (drain + price) - 1.0 / g[m]);
        return x;
    };
    if (drain > 0.0) {
        Eigen::VectorXd free = alloc_at(0.0);
        if (free.sum() <= cap) return free;
    }
    double hi = std::max(drain, 1.0);
    while (alloc_at(hi).sum() > cap) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (alloc_at(mid).sum() > cap)
            lo = mid;
        else
            hi = mid;
    }
    return alloc_at(hi);
}

// ---------------------------------------------------------------------------
// Generic max-min projected ascent.
//
// Maximizes min_u f_u(x) over per-block sets { x_u >= 0, sum x_u <= cap_u }
// by smoothing the min with a softmin of decreasing temperature.  Gradients
// are finite differences of the raw objectives, so nothing from the
// production derivative code is reused.  Slow and deliberate; intended for
// toy dimensions.

struct MaxMinProblem {
    // All component objectives at the given per-block allocation.
    std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>
        objectives;
    std::vector<double> caps;
    int stages = 10;
    int iters_per_stage = 400;
    double fd_rel_step = 1e-6;
};

namespace detail {

inline double softmin(const std::vector<double>& b, double tau,
                      std::vector<double>* weights = nullptr) {
    const double bmin = *std::min_element(b.begin(), b.end());
    double denom = 0.0;
    for (double v : b) denom += std::exp(-(v - bmin) / tau);
    if (weights != nullptr) {
        weights->resize(b.size());
        for (std::size_t u = 0; u < b.size(); ++u)
            (*weights)[u] = std::exp(-(b[u] - bmin) / tau) / denom;
    }
    return bmin - tau * std::log(denom);
}

}  // namespace detail

inline std::vector<Eigen::VectorXd> maxmin_ascent(
    const MaxMinProblem& prob, std::vector<Eigen::VectorXd> x) {
    const std::size_t blocks = x.size();
    std::vector<double> b = prob.objectives(x);

    double spread = 0.0;
    for (double v : b)
        spread = std::max(spread,
                          std::abs(v - b.front()) + 1e-3 * std::abs(v));
    double tau = std::max(spread, 1e-9);
    double step = 1.0;

    for (int stage = 0; stage < prob.stages; ++stage) {
        for (int iter = 0; iter < prob.iters_per_stage; ++iter) {
            std::vector<double> weights;
            const double fval = detail::softmin(b, tau, &weights);

            // Finite-difference gradient of the softmin: one full objective
            // evaluation per coordinate gives every component's derivative.
            std::vector<Eigen::VectorXd> grad(blocks);
            for (std::size_t u = 0; u < blocks; ++u) {
                grad[u] = Eigen::VectorXd::Zero(x[u].size());
                for (Eigen::Index i = 0; i < x[u].size(); ++i) {
                    const double h =
                        prob.fd_rel_step *
                        std::max(std::abs(x[u][i]), 1e-3 * prob.caps[u]);
                    const double saved = x[u][i];
                    x[u][i] = saved + h;
                    const std::vector<double> bp = prob.objectives(x);
                    x[u][i] = saved;
                    double d = 0.0;
                    for (std::size_t v = 0; v < bp.size(); ++v)
                        d += weights[v] * (bp[v] - b[v]) / h;
                    grad[u][i] = d;
                }
            }

            double norm = 0.0;
            for (const auto& gu : grad) norm = std::max(norm, gu.lpNorm<Eigen::Infinity>());
            if (norm <= 0.0) break;

            // Backtracking projected ascent with a step that adapts across
            // iterations.
            bool improved = false;
            double t = step;
            for (int back = 0; back < 40; ++back) {
                std::vector<Eigen::VectorXd> cand(blocks);
                for (std::size_t u = 0; u < blocks; ++u)
                    cand[u] =
                        project_budget(x[u] + t * grad[u], prob.caps[u]);
                const std::vector<double> bc = prob.objectives(cand);
                const double fc = detail::softmin(bc, tau, nullptr);
                if (fc > fval) {
                    x = std::move(cand);
                    b = bc;
                    step = t * 1.5;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!improved) break;
        }
        tau *= 0.2;
    }
    return x;
}

}  // namespace oracle
