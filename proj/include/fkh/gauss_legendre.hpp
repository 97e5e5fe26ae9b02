#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace fkh {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on (-1, 1), ascending
    std::vector<double> weights;  // sum to 2
};

/**
 * Gauss-Legendre nodes/weights of order q, computed by Newton iteration on
 * the Legendre polynomial from Chebyshev-based initial guesses.  Results are
 * cached per order.
 */
inline const GaussLegendreRule& gauss_legendre(int q) {
    static std::map<int, GaussLegendreRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;

    GaussLegendreRule rule;
    rule.nodes.resize(q);
    rule.weights.resize(q);
    for (int i = 0; i < q; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence: evaluates P_q(x) and P_q'(x).
            double p0 = 1.0, p1 = x;
            for (int n = 2; n <= q; ++n) {
                double p2 = ((2 * n - 1) * x * p1 - (n - 1) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[q - 1 - i] = x;
        rule.weights[q - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(q, std::move(rule)).first->second;
}

/** Appends the q-point rule mapped to [a, b] to the node/weight arrays. */
inline void append_gl_panel(double a, double b, int q, std::vector<double>& xs,
                            std::vector<double>& ws) {
    const auto& rule = gauss_legendre(q);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < q; ++i) {
        xs.push_back(mid + half * rule.nodes[i]);
        ws.push_back(half * rule.weights[i]);
    }
}

/**
 * Radial rule for integrals over [r0, r1]: geometric (log-uniform) panels,
 * each carrying a fixed-order Gauss-Legendre rule.  Suited to kernels with
 * power-law behavior across many decades.
 */
inline void geometric_radial_rule(double r0, double r1, int panels, int q,
                                  std::vector<double>& xs, std::vector<double>& ws) {
    xs.clear();
    ws.clear();
    xs.reserve(static_cast<std::size_t>(panels) * q);
    ws.reserve(static_cast<std::size_t>(panels) * q);
    double ratio = std::pow(r1 / r0, 1.0 / panels);
    double a = r0;
    for (int p = 0; p < panels; ++p) {
        double b = (p + 1 == panels) ? r1 : a * ratio;
        append_gl_panel(a, b, q, xs, ws);
        a = b;
    }
}

}  // namespace fkh
