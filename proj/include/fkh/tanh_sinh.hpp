#pragma once

#include <cmath>
#include <functional>
#include <limits>

namespace fkh {

/**
 * Adaptive tanh-sinh (double-exponential) quadrature on a finite interval.
 * Robust to integrable endpoint singularities; halves the step until two
 * successive levels agree to rel_tol or max_level is reached.
 */
template <typename F>
double tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-13, int max_level = 12) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    const double t_max = 6.5;  // exp(-pi/2 * sinh(6.5)) underflows well past double range

    auto eval_at = [&](double t) -> double {
        double u = M_PI_2 * std::sinh(t);
        double ch = std::cosh(u);
        if (!std::isfinite(ch)) return 0.0;
        double w = M_PI_2 * std::cosh(t) / (ch * ch);
        // distance from the near endpoint, free of the cancellation in
        // 1 - |tanh(u)|: equals half / (cosh(u) (cosh(u) + |sinh(u)|))
        double d = half / (ch * (ch + std::abs(std::sinh(u))));
        if (d <= 0.0) return 0.0;
        double arg = (t < 0.0) ? a + d : b - d;
        double fx = f(arg);
        return std::isfinite(fx) ? fx * w : 0.0;
    };

    double h = 1.0;
    double sum = eval_at(0.0);
    for (double t = h; t <= t_max; t += h) sum += eval_at(t) + eval_at(-t);
    double integral = sum * h * half;

    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        double add = 0.0;
        for (double t = h; t <= t_max; t += 2.0 * h) add += eval_at(t) + eval_at(-t);
        sum += add;
        double next = sum * h * half;
        double scale = std::max(std::abs(next), std::numeric_limits<double>::min());
        if (level >= 3 && std::abs(next - integral) <= rel_tol * scale) {
            return next;
        }
        integral = next;
    }
    return integral;
}

/**
 * Integral over [a, infinity) via the substitution r = a + (1-t)/t mapping
 * (0,1] to [a, inf).  Infinity sits at t = 0, where node offsets stay exactly
 * representable, so slowly decaying tails keep full accuracy.
 */
template <typename F>
double tanh_sinh_to_infinity(F&& f, double a, double rel_tol = 1e-13) {
    return tanh_sinh(
        [&](double t) {
            double r = a + (1.0 - t) / t;
            return f(r) / (t * t);
        },
        0.0, 1.0, rel_tol);
}

}  // namespace fkh
