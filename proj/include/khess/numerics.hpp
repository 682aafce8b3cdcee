#pragma once

// Small numerical helpers shared by the profile, radial and barrier modules.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "khess/errors.hpp"

namespace khess::numerics {

/// Adaptive 15-point Gauss–Kronrod on a finite interval.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-14, unsigned max_depth = 20) {
    if (a == b) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        std::forward<F>(f), a, b, max_depth, rel_tol, &err);
}

/// Single non-adaptive Gauss–Kronrod panel, for short cells of a cumulative table.
template <class F>
double integrate_panel(F&& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(std::forward<F>(f), a, b,
                                                                          0);
}

/// Bisection on a bracketing interval. Returns the midpoint of the final bracket.
template <class F>
double bisect(F&& f, double lo, double hi, double rel_tol = 1e-13, int max_iter = 400) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw ParameterError("bisect: root is not bracketed");
    auto stop = [rel_tol](double a, double b) {
        return std::abs(b - a) <= rel_tol * std::max(std::abs(a), std::abs(b));
    };
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    auto [a, b] = boost::math::tools::bisect(f, lo, hi, stop, iters);
    return 0.5 * (a + b);
}

/// Aitken Δ² transform of three consecutive terms; falls back to the last
/// term when the second difference vanishes.
inline double aitken(double x0, double x1, double x2) {
    const double d2 = x2 - 2.0 * x1 + x0;
    if (d2 == 0.0 || !std::isfinite(d2)) return x2;
    const double acc = x2 - (x2 - x1) * (x2 - x1) / d2;
    return std::isfinite(acc) ? acc : x2;
}

/// Result of extrapolating a sequence to its limit.
struct Extrapolation {
    double value = 0.0;
    bool converged = false;
    std::vector<double> raw;
    std::vector<double> accelerated;
};

/// Feeds terms of a sequence from `term(i)`, i = 0,1,…, through Aitken Δ² and
/// stops once two successive accelerated values agree to `rel_tol`. Terms
/// that come back non-finite end the sequence early.
template <class Term>
Extrapolation extrapolate_limit(Term&& term, int max_terms = 40, double rel_tol = 1e-10) {
    Extrapolation ex;
    for (int i = 0; i < max_terms; ++i) {
        const double x = term(i);
        if (!std::isfinite(x)) break;
        ex.raw.push_back(x);
        const std::size_t m = ex.raw.size();
        if (m >= 3) ex.accelerated.push_back(aitken(ex.raw[m - 3], ex.raw[m - 2], ex.raw[m - 1]));
        const std::size_t a = ex.accelerated.size();
        if (a >= 2) {
            const double cur = ex.accelerated[a - 1];
            const double prev = ex.accelerated[a - 2];
            if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-300)) {
                ex.value = cur;
                ex.converged = true;
                return ex;
            }
        }
        if (m >= 2 && ex.raw[m - 1] == ex.raw[m - 2] && (m < 3 || ex.raw[m - 2] == ex.raw[m - 3])) {
            ex.value = ex.raw[m - 1];
            ex.converged = true;
            return ex;
        }
    }
    if (!ex.accelerated.empty())
        ex.value = ex.accelerated.back();
    else if (!ex.raw.empty())
        ex.value = ex.raw.back();
    else
        ex.value = std::numeric_limits<double>::quiet_NaN();
    return ex;
}

/// Relative spread of the last `window` accelerated values.
inline double tail_oscillation(const Extrapolation& ex, std::size_t window = 3) {
    const auto& v = ex.accelerated.empty() ? ex.raw : ex.accelerated;
    if (v.size() < 2) return std::numeric_limits<double>::infinity();
    const std::size_t w = std::min(window, v.size());
    auto [lo, hi] = std::minmax_element(v.end() - static_cast<long>(w), v.end());
    return (*hi - *lo) / std::max(std::abs(v.back()), 1e-300);
}

/// Cubic Hermite interpolant on [x0, x1] from endpoint values and slopes.
struct HermiteSegment {
    double x0, x1, y0, y1, m0, m1;

    double operator()(double x) const {
        const double h = x1 - x0;
        const double t = (x - x0) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * y1 +
               (t3 - t2) * h * m1;
    }

    double derivative(double x) const {
        const double h = x1 - x0;
        const double t = (x - x0) / h;
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * y0 + (-6 * t2 + 6 * t) * y1) / h + (3 * t2 - 4 * t + 1) * m0 +
               (3 * t2 - 2 * t) * m1;
    }
};

/// Quintic Hermite interpolant on [x0, x1] from endpoint values, slopes and second derivatives.
struct QuinticHermiteSegment {
    double x0, x1, y0, y1, m0, m1, c0, c1;

    double operator()(double x) const {
        const double h = x1 - x0;
        const double t = (x - x0) / h;
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
        const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
        const double h3 = 0.5 * (t3 - 2 * t4 + t5);
        const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
        const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
        return h0 * y0 + h5 * y1 + h * (h1 * m0 + h4 * m1) + h * h * (h2 * c0 + h3 * c1);
    }
};

/// Index i with xs[i] ≤ x < xs[i+1] for ascending xs, clamped to valid segments.
inline std::size_t segment_index(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = (it == xs.begin()) ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    return std::min(i, xs.size() - 2);
}

/// Radical-inverse (van der Corput) sequence in base `b`.
inline double radical_inverse(std::uint64_t i, unsigned b) {
    double inv = 1.0 / b, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % b);
        i /= b;
        f *= inv;
    }
    return r;
}

}  // namespace khess::numerics
