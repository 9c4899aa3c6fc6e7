#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "qzeno/errors.hpp"

namespace qzeno {

// ---- Gauss-Kronrod 15(7) panel rule ----

namespace detail {

// Kronrod abscissae on [0, 1] side of the symmetric rule (index 7 is 0).
inline constexpr double gk15_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};

inline constexpr double gk15_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};

// Embedded 7-point Gauss weights, paired with the odd-index abscissae.
inline constexpr double gk15_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct PanelResult {
    double kronrod = 0.0;
    double error = 0.0;
};

// Applies the 15-point Kronrod rule and its embedded 7-point Gauss rule on
// [a, b]; the error estimate is the plain |K15 - G7| difference.
template <class F>
PanelResult gk15_panel(F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);

    double fv[15];
    for (int i = 0; i < 7; ++i) {
        const double dx = half * gk15_x[i];
        fv[i] = f(mid - dx);
        fv[14 - i] = f(mid + dx);
    }
    fv[7] = f(mid);

    double kron = gk15_wk[7] * fv[7];
    double gauss = gk15_wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kron += gk15_wk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += gk15_wg[i / 2] * (fv[i] + fv[14 - i]);
    }
    PanelResult r;
    r.kronrod = kron * half;
    r.error = std::abs((kron - gauss) * half);
    if (!std::isfinite(r.kronrod)) {
        throw EvaluationError("integrand produced a non-finite value on [" +
                              std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    return r;
}

} // namespace detail

struct QuadratureOptions {
    double rel_tol = 1e-12;
    double abs_floor = 1e-300;
    std::size_t max_subdivisions = std::size_t{1} << 20;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t subdivisions = 0;
};

// Globally adaptive integration of f over [a, b]: the panel with the largest
// error estimate is bisected until the summed estimate meets
// max(rel_tol * |integral|, abs_floor) or the subdivision budget is exhausted.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b,
                                    const QuadratureOptions& opt = {}) {
    if (!(std::isfinite(a) && std::isfinite(b))) {
        throw ArgumentError("integration bounds must be finite");
    }
    if (a == b) return {0.0, 0.0, 0};

    struct Panel {
        double error;
        double a;
        double b;
        double value;
        bool operator<(const Panel& o) const { return error < o.error; }
    };

    std::priority_queue<Panel> panels;
    auto first = detail::gk15_panel(f, a, b);
    panels.push({first.error, a, b, first.kronrod});
    double total = first.kronrod;
    double total_err = first.error;
    std::size_t splits = 0;

    while (total_err > std::max(opt.rel_tol * std::abs(total), opt.abs_floor)) {
        if (splits >= opt.max_subdivisions) {
            throw ResourceError("adaptive quadrature exceeded " +
                                std::to_string(opt.max_subdivisions) +
                                " subdivisions (estimate " +
                                std::to_string(total_err) + ")");
        }
        const Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval is at floating-point resolution; accept its estimate.
            total_err -= worst.error;
            panels.push({0.0, worst.a, worst.b, worst.value});
            ++splits;
            continue;
        }
        auto left = detail::gk15_panel(f, worst.a, mid);
        auto right = detail::gk15_panel(f, mid, worst.b);
        total += left.kronrod + right.kronrod - worst.value;
        total_err += left.error + right.error - worst.error;
        panels.push({left.error, worst.a, mid, left.kronrod});
        panels.push({right.error, mid, worst.b, right.kronrod});
        ++splits;
    }

    return {total, total_err, splits};
}

} // namespace qzeno
