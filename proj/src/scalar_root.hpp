// Bracketed Newton scalar root finder shared by the water-filling solvers.
#pragma once

#include <cmath>

namespace mmee::detail {

// Root of a strictly decreasing slope f on (0, cap), where f is known to be
// positive at 0 and negative at cap (callers handle the clamped cases).
// f(x) returns a struct with .value and .derivative.  Newton steps are kept
// inside the shrinking sign-change bracket, falling back to bisection when
// they escape; `atol` is the absolute step tolerance.
template <typename F>
double decreasing_root(F&& f, double cap, double warm, double atol,
                       int max_iter) {
    double lo = 0.0, hi = cap;
    double x = (warm > lo && warm < hi) ? warm : 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        const auto e = f(x);
        if (e.value > 0.0)
            lo = x;
        else
            hi = x;
        double next = (e.derivative < 0.0) ? x - e.value / e.derivative : 0.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= atol) break;
    }
    return x;
}

}  // namespace mmee::detail
