#include "mmee/driver.hpp"

#include <chrono>
#include <cmath>

namespace mmee {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start)
        .count();
}

std::vector<double> cell_powers_of(const PowerAllocation& alloc,
                                   const NetworkConfig& cfg) {
    std::vector<double> p(cfg.num_cells);
    for (int u = 0; u < cfg.num_cells; ++u) p[u] = cell_power(alloc, cfg, u);
    return p;
}

std::vector<double> surrogate_cell_rates(const SurrogateModel& model,
                                         const ChannelStats& stats,
                                         const PowerAllocation& alloc) {
    std::vector<double> r(stats.config.num_cells);
    for (int u = 0; u < stats.config.num_cells; ++u)
        r[u] = surrogate_cell_rate(model, stats, alloc, u);
    return r;
}

double min_bracket(const std::vector<double>& rates,
                   const std::vector<double>& powers, double eta,
                   const NetworkConfig& cfg) {
    double v = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_cells; ++u)
        v = std::min(v, dinkelbach_bracket(rates[u], powers[u], eta,
                                           cfg.weights[u], cfg.bandwidth));
    return v;
}

double min_weighted_ratio(const std::vector<double>& rates,
                          const std::vector<double>& powers,
                          const NetworkConfig& cfg) {
    double v = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_cells; ++u)
        v = std::min(v, cfg.weights[u] * cfg.bandwidth * rates[u] / powers[u]);
    return v;
}

}  // namespace

double min_weighted_ee(const ChannelStats& stats,
                       const PowerAllocation& alloc, double de_tol,
                       int de_max_iter) {
    const RateReport report = de_rate(stats, alloc, de_tol, de_max_iter);
    return min_weighted_ratio(report.cell_rate,
                              cell_powers_of(alloc, stats.config),
                              stats.config);
}

SolveResult maxmin_ee(const ChannelStats& stats, InnerSolver& inner,
                      const SolveOptions& opts, const PowerAllocation* init) {
    const NetworkConfig& cfg = stats.config;
    const auto start = Clock::now();

    SolveResult result;
    result.alloc = init ? *init : PowerAllocation::uniform(cfg);
    if (!result.alloc.feasible(cfg))
        throw std::invalid_argument("maxmin_ee: infeasible initial point");

    inner.reset();
    result.messages_total = inner.setup_scalars(stats);
    // No certificate until an inner step has actually been accepted.
    result.final_kkt.converged = false;

    // Monotonicity slack: tiny relative to the metric scale, used by the
    // accept/reject safeguards only.
    const auto slack = [](double scale) {
        return 1e-12 * std::max(1.0, std::abs(scale));
    };

    double metric_prev = 0.0;
    bool have_prev_metric = false;

    // The subproblem certificate is only meaningful for the exact point the
    // solver settled on; remember that point so the final report can tell
    // whether the returned allocation still is it.
    PowerAllocation cert_alloc;
    bool have_certificate = false;

    for (int outer = 0; outer < opts.outer_cap; ++outer) {
        const SurrogateModel model = build_surrogate(
            stats, result.alloc, opts.de_tol, opts.de_max_iter);
        inner.begin_outer(stats, model);

        // At the anchor the surrogate equals the exact DE rate, so the
        // anchor ratio doubles as the exact-DE metric for accept/reject.
        std::vector<double> anchor_rates(cfg.num_cells, 0.0);
        for (int u = 0; u < cfg.num_cells; ++u)
            for (double r : model.rate_anchor[u]) anchor_rates[u] += r;
        const std::vector<double> anchor_powers =
            cell_powers_of(result.alloc, cfg);
        const double exact_anchor =
            min_weighted_ratio(anchor_rates, anchor_powers, cfg);

        double eta = std::max(exact_anchor, 0.0);
        PowerAllocation cur = result.alloc;
        std::vector<double> cur_rates = anchor_rates;
        std::vector<double> cur_powers = anchor_powers;
        double exact_cur = exact_anchor;
        double surrogate_metric = exact_anchor;
        KktReport kkt;
        bool kkt_set = false;

        for (int t = 0; t < opts.inner_cap; ++t) {
            InnerResult step = inner.solve(stats, model, eta, cur);
            result.messages_total += step.messages_delta;
            for (DualDiagnostic d : step.dual_rows) {
                d.outer = outer;
                d.inner = t;
                result.trace.dual_rows.push_back(d);
            }
            std::vector<double> new_rates =
                surrogate_cell_rates(model, stats, step.alloc);
            std::vector<double> new_powers = cell_powers_of(step.alloc, cfg);

            // Reject any step that lowers the parametric objective at the
            // current ratio; the previous iterate already achieves 0 there.
            // A solver candidate can land below the start when every cell
            // jumps at once against a stale snapshot of the others (a warm
            // start far from the new optimum makes those jumps large), but
            // the objective is concave along the segment back to the current
            // iterate, so a fractional step recovers the lost ascent.  Give
            // up only when no fraction improves.
            const double before = min_bracket(cur_rates, cur_powers, eta, cfg);
            const double after = min_bracket(new_rates, new_powers, eta, cfg);
            bool blended = false;
            if (after < before - slack(std::abs(before) + std::abs(after))) {
                // Fractional recovery is for genuine overshoots.  A candidate
                // within noise distance of the iterate carries no usable
                // direction (evaluation noise would masquerade as
                // improvement), so it is rejected outright and the committed
                // point keeps its certificate.
                const double jump = step.alloc.max_abs_diff(cur);
                double budget_scale = 0.0;
                for (double b : cfg.power_budget)
                    budget_scale = std::max(budget_scale, b);
                double best_a = 0.0;
                double best_v = before;
                PowerAllocation trial = cur;
                for (double a = jump > 1e-6 * budget_scale ? 0.5 : 0.0;
                     a >= 1.0 / 4096.0; a *= 0.5) {
                    for_each_user(cfg, [&](UserRef r) {
                        trial.at(r) =
                            (1.0 - a) * cur.at(r) + a * step.alloc.at(r);
                    });
                    const std::vector<double> rates_a =
                        surrogate_cell_rates(model, stats, trial);
                    const std::vector<double> powers_a =
                        cell_powers_of(trial, cfg);
                    const double v = min_bracket(rates_a, powers_a, eta, cfg);
                    if (v > best_v + slack(std::abs(before) + std::abs(v))) {
                        best_v = v;
                        best_a = a;
                    }
                }
                if (best_a == 0.0) {
                    result.trace.notes.push_back(
                        "inner step rejected at outer " +
                        std::to_string(outer) + " iteration " +
                        std::to_string(t));
                    break;
                }
                for_each_user(cfg, [&](UserRef r) {
                    trial.at(r) =
                        (1.0 - best_a) * cur.at(r) + best_a * step.alloc.at(r);
                });
                step.alloc = std::move(trial);
                new_rates = surrogate_cell_rates(model, stats, step.alloc);
                new_powers = cell_powers_of(step.alloc, cfg);
                blended = true;
                result.trace.notes.push_back(
                    "inner step damped at outer " + std::to_string(outer) +
                    " iteration " + std::to_string(t));
            }

            if (step.flagged) result.trace.flagged = true;
            cur = step.alloc;
            cur_rates = new_rates;
            cur_powers = new_powers;
            // A fractional step is not the point the solver certified, so
            // its certificate is dropped with the discarded remainder.
            if (!blended) {
                kkt = step.kkt;
                kkt_set = true;
                cert_alloc = cur;
                have_certificate = true;
            }
            ++result.inner_iterations_total;

            const double eta_new = dinkelbach_eta(cur_rates, cur_powers, cfg);
            surrogate_metric = min_weighted_ratio(cur_rates, cur_powers, cfg);
            exact_cur = min_weighted_ee(stats, cur, opts.de_tol,
                                        opts.de_max_iter);

            TraceRow row;
            row.outer = outer;
            row.inner = t;
            row.min_weighted_ee_surrogate = surrogate_metric;
            row.min_weighted_ee_exact_de = exact_cur;
            row.eta = eta_new;
            row.wall_time_ms = elapsed_ms(start);
            row.messages_exchanged = result.messages_total;
            result.trace.rows.push_back(row);

            const bool converged =
                std::abs(eta_new - eta) <=
                opts.eta_tol * std::max(1e-300, std::abs(eta_new));
            eta = eta_new;
            if (converged) break;
            if (t == opts.inner_cap - 1) {
                result.trace.flagged = true;
                result.trace.notes.push_back(
                    "inner iteration cap reached at outer " +
                    std::to_string(outer));
            }
        }

        // Accept the outer candidate only if the exact-DE metric did not
        // decrease.  A full step can overshoot the anchored model's region
        // of validity (the model keeps phantom rate credit for a cell whose
        // power collapses, so extreme candidates may evaluate worse than the
        // anchor), but the model shares the exact metric's gradient at the
        // anchor, so the candidate direction is still an ascent direction:
        // backtrack along it and keep the damped step instead.  Stop only
        // when no step along the direction improves the exact metric.
        if (exact_cur < exact_anchor - slack(exact_anchor)) {
            double best_a = 0.0;
            double best_m = exact_anchor;
            for (double a = 0.5; a >= 1.0 / 4096.0; a *= 0.5) {
                PowerAllocation blend = result.alloc;
                for_each_user(cfg, [&](UserRef r) {
                    blend.at(r) =
                        (1.0 - a) * result.alloc.at(r) + a * cur.at(r);
                });
                const double m = min_weighted_ee(stats, blend, opts.de_tol,
                                                 opts.de_max_iter);
                if (m > best_m + slack(exact_anchor)) {
                    best_m = m;
                    best_a = a;
                }
            }
            if (best_a > 0.0) {
                PowerAllocation blend = result.alloc;
                for_each_user(cfg, [&](UserRef r) {
                    blend.at(r) = (1.0 - best_a) * result.alloc.at(r) +
                                  best_a * cur.at(r);
                });
                cur = std::move(blend);
                cur_rates = surrogate_cell_rates(model, stats, cur);
                cur_powers = cell_powers_of(cur, cfg);
                surrogate_metric =
                    min_weighted_ratio(cur_rates, cur_powers, cfg);
                exact_cur = best_m;
            } else {
                result.trace.notes.push_back("outer candidate rejected at " +
                                             std::to_string(outer));
                result.outer_iterations = outer + 1;
                break;
            }
            result.trace.notes.push_back("outer candidate damped at " +
                                         std::to_string(outer));
        }
        result.alloc = cur;
        if (kkt_set) result.final_kkt = kkt;
        result.outer_iterations = outer + 1;

        // Stop on stagnation only from a certified point: an iterate still
        // being nudged by fractional steps is not yet a fixed point of the
        // scheme, so give the loop another pass from the fresh anchor (which
        // usually resolves cleanly) rather than stopping on it.
        const bool certified =
            have_certificate && cert_alloc.max_abs_diff(result.alloc) == 0.0;
        if (have_prev_metric && certified &&
            std::abs(exact_cur - metric_prev) <
                opts.outer_tol * std::max(1e-300, std::abs(exact_cur)))
            break;
        metric_prev = exact_cur;
        have_prev_metric = true;
        if (outer == opts.outer_cap - 1) {
            result.trace.flagged = true;
            result.trace.notes.push_back("outer iteration cap reached");
        }
    }

    // A run whose closing steps were all fractional (or that never accepted
    // a step at all) returns an allocation no solver certificate describes;
    // surface that instead of letting a stale or empty report stand.
    if (!have_certificate || cert_alloc.max_abs_diff(result.alloc) > 0.0) {
        result.trace.flagged = true;
        result.trace.notes.push_back("final allocation carries no solver "
                                     "certificate");
        result.final_kkt.converged = false;
    }

    const RateReport final_report =
        de_rate(stats, result.alloc, opts.de_tol, opts.de_max_iter);
    const std::vector<double> final_powers =
        cell_powers_of(result.alloc, cfg);
    result.cell_rate_exact = final_report.cell_rate;
    result.cell_ee_exact.resize(cfg.num_cells);
    for (int u = 0; u < cfg.num_cells; ++u)
        result.cell_ee_exact[u] = cell_ee(final_report.cell_rate[u],
                                          final_powers[u], cfg.bandwidth);
    result.min_weighted_ee_exact = min_weighted_ratio(
        final_report.cell_rate, final_powers, cfg);
    return result;
}

}  // namespace mmee
