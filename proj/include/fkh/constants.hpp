#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "fkh/degenerate.hpp"
#include "fkh/errors.hpp"
#include "fkh/tanh_sinh.hpp"

namespace fkh {

namespace detail {

/** Exact surface areas |S^d| for d = 0..6, written out so the quadrature
 *  route shares no special-function code with the Gamma closed forms. */
inline double sphere_area_exact(int d) {
    const double pi = 3.14159265358979323846;
    switch (d) {
        case 0: return 2.0;
        case 1: return 2.0 * pi;
        case 2: return 4.0 * pi;
        case 3: return 2.0 * pi * pi;
        case 4: return 8.0 * pi * pi / 3.0;
        case 5: return pi * pi * pi;
        case 6: return 16.0 * pi * pi * pi / 15.0;
        default: throw std::invalid_argument("sphere_area_exact: d in [0, 6] only");
    }
}

inline void require_s_upper(double s, const char* who) {
    if (!(s > 0.5) || !(s < 1.0)) {
        throw SOutOfRange(std::string(who) + ": s must lie in (1/2, 1)");
    }
}

inline void require_s_open(double s, const char* who) {
    if (!(s > 0.0) || !(s < 1.0)) {
        throw SOutOfRange(std::string(who) + ": s must lie in (0, 1)");
    }
}

/** Split radial integral of min(2 L t, SC t^2) t^{-1-2s} over (0, inf),
 *  evaluated by adaptive quadrature on both sides of the crossover. */
inline double min_kernel_integral_quad(double s, double L, double SC) {
    double ts = 2.0 * L / SC;
    double left = tanh_sinh([&](double t) { return SC * std::pow(t, 1.0 - 2.0 * s); }, 0.0, ts);
    double right =
        tanh_sinh_to_infinity([&](double t) { return 2.0 * L * std::pow(t, -2.0 * s); }, ts);
    return left + right;
}

inline double min_kernel_integral_closed(double s, double L, double SC) {
    double ts = 2.0 * L / SC;
    return SC * std::pow(ts, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) +
           2.0 * L * std::pow(ts, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
}

inline void require_positive(double v, const char* name, const char* who) {
    if (!(v > 0.0)) {
        throw std::invalid_argument(std::string(who) + ": " + name + " must be > 0");
    }
}

}  // namespace detail

/** One-dimensional interpolation constant:
 *  C1 = integral over R of min(2L|t|, SC t^2) |t|^{-1-2s} dt. */
inline double c1_closed(double s, double L, double SC) {
    detail::require_s_upper(s, "c1");
    detail::require_positive(L, "L", "c1");
    detail::require_positive(SC, "SC", "c1");
    return 2.0 * detail::min_kernel_integral_closed(s, L, SC);
}

inline double c1_quadrature(double s, double L, double SC) {
    detail::require_s_upper(s, "c1");
    detail::require_positive(L, "L", "c1");
    detail::require_positive(SC, "SC", "c1");
    return 2.0 * detail::min_kernel_integral_quad(s, L, SC);
}

/** Plane-slice mass: C2 = integral over R^{n-1} of (1+|z|^2)^{-(n+2s)/2} dz
 *  = pi^{(n-1)/2} Gamma(s + 1/2) / Gamma((n+2s)/2). */
inline double c2_closed(int n, double s) {
    if (n < 2) throw std::invalid_argument("c2: n >= 2 required");
    detail::require_s_open(s, "c2");
    const double pi = 3.14159265358979323846;
    return std::pow(pi, 0.5 * (n - 1)) * std::tgamma(s + 0.5) / std::tgamma(0.5 * (n + 2.0 * s));
}

inline double c2_quadrature(int n, double s) {
    if (n < 2) throw std::invalid_argument("c2: n >= 2 required");
    detail::require_s_open(s, "c2");
    double expo = -0.5 * (n + 2.0 * s);
    if (n == 2) {
        return 2.0 * tanh_sinh_to_infinity(
                         [&](double t) { return std::pow(1.0 + t * t, expo); }, 0.0);
    }
    double radial = tanh_sinh_to_infinity(
        [&](double r) { return std::pow(r, n - 2.0) * std::pow(1.0 + r * r, expo); }, 0.0);
    return detail::sphere_area_exact(n - 2) * radial;
}

/** Line-slice mass: C3 = integral over R of (1+t^2)^{-(n+2s)/2} dt
 *  = sqrt(pi) Gamma((n+2s-1)/2) / Gamma((n+2s)/2). */
inline double c3_closed(int n, double s) {
    if (n < 2) throw std::invalid_argument("c3: n >= 2 required");
    detail::require_s_open(s, "c3");
    const double pi = 3.14159265358979323846;
    return std::sqrt(pi) * std::tgamma(0.5 * (n + 2.0 * s - 1.0)) /
           std::tgamma(0.5 * (n + 2.0 * s));
}

inline double c3_quadrature(int n, double s) {
    if (n < 2) throw std::invalid_argument("c3: n >= 2 required");
    detail::require_s_open(s, "c3");
    double expo = -0.5 * (n + 2.0 * s);
    return 2.0 *
           tanh_sinh_to_infinity([&](double t) { return std::pow(1.0 + t * t, expo); }, 0.0);
}

/** Subspace upper constant:
 *  mu1 = (1-s) integral over R^{n-1} of min(2L|z|, SC|z|^2) |z|^{-(n-1)-2s} dz. */
inline double mu1_closed(int n, double s, double L, double SC) {
    if (n < 2) throw std::invalid_argument("mu1: n >= 2 required");
    detail::require_s_upper(s, "mu1");
    detail::require_positive(L, "L", "mu1");
    detail::require_positive(SC, "SC", "mu1");
    const double pi = 3.14159265358979323846;
    double area = 2.0 * std::pow(pi, 0.5 * (n - 1)) / std::tgamma(0.5 * (n - 1));
    return (1.0 - s) * area * detail::min_kernel_integral_closed(s, L, SC);
}

inline double mu1_quadrature(int n, double s, double L, double SC) {
    if (n < 2) throw std::invalid_argument("mu1: n >= 2 required");
    detail::require_s_upper(s, "mu1");
    detail::require_positive(L, "L", "mu1");
    detail::require_positive(SC, "SC", "mu1");
    return (1.0 - s) * detail::sphere_area_exact(n - 2) *
           detail::min_kernel_integral_quad(s, L, SC);
}

/** eps1 = (eta0 / (2 (1-s) C1 C2))^{1/s}: the scale below which the strip
 *  contribution stays under eta0/2. */
inline double eps1_of(double eta0, double s, double C1, double C2) {
    detail::require_positive(eta0, "eta0", "eps1");
    detail::require_positive(C1, "C1", "eps1");
    detail::require_positive(C2, "C2", "eps1");
    return std::pow(eta0 / (2.0 * (1.0 - s) * C1 * C2), 1.0 / s);
}

/** mu0 = eta0 / (2 (1-s) C3) * g(eps1)^{2s}: the subspace lower constant
 *  induced by an operator lower bound eta0. */
inline double mu0_of(int n, double s, double eta0, double L, double SC) {
    double e1 = eps1_of(eta0, s, c1_closed(s, L, SC), c2_closed(n, s));
    return eta0 / (2.0 * (1.0 - s) * c3_closed(n, s)) * std::pow(g_eps(e1, n), 2.0 * s);
}

/** A closed-form / quadrature-backed pair for one constant. */
struct ValuePair {
    double closed_form = 0.0;
    double quadrature = 0.0;
};

/**
 * The full constant chain.  Fields C1..mu1 are genuinely dual-route; the
 * chained quantities (eps1 onward) are recomputed along both routes from
 * the corresponding upstream values.
 */
struct ConstantsReport {
    int n = 0;
    double s = 0.0, L = 0.0, SC = 0.0, eta0 = 0.0;
    ValuePair C1, C2, C3, mu1, eps1, g_eps1, mu0, C5, C, C4, eps0;
    double slack_bound = 0.0;  // sqrt(2n/(n-1)) C4^{1/s} (mu0/mu1)^{1/s}, closed route
};

/**
 * Computes the whole chain down to the ellipticity threshold
 *   eps0 = sqrt(n/(n-1)) C4^{1/s} (mu0/mu1)^{1/s},
 * with C5 = 1 - mu0/(2 mu1), C = sqrt(C5^{-2/(n+2s)} - 1), C4 = C/2.
 * eps0 sits a factor 1/sqrt(2) inside the slack bound the derivation allows.
 */
inline ConstantsReport ellipticity_threshold(int n, double s, double L, double SC, double eta0) {
    if (n < 2) throw std::invalid_argument("ellipticity_threshold: n >= 2 required");
    detail::require_s_upper(s, "ellipticity_threshold");
    detail::require_positive(eta0, "eta0", "ellipticity_threshold");
    ConstantsReport rep;
    rep.n = n;
    rep.s = s;
    rep.L = L;
    rep.SC = SC;
    rep.eta0 = eta0;
    rep.C1 = {c1_closed(s, L, SC), c1_quadrature(s, L, SC)};
    rep.C2 = {c2_closed(n, s), c2_quadrature(n, s)};
    rep.C3 = {c3_closed(n, s), c3_quadrature(n, s)};
    rep.mu1 = {mu1_closed(n, s, L, SC), mu1_quadrature(n, s, L, SC)};
    auto chain = [&](bool quad) {
        double C1v = quad ? rep.C1.quadrature : rep.C1.closed_form;
        double C2v = quad ? rep.C2.quadrature : rep.C2.closed_form;
        double C3v = quad ? rep.C3.quadrature : rep.C3.closed_form;
        double mu1v = quad ? rep.mu1.quadrature : rep.mu1.closed_form;
        double e1 = eps1_of(eta0, s, C1v, C2v);
        double g1 = g_eps(e1, n);
        double mu0v = eta0 / (2.0 * (1.0 - s) * C3v) * std::pow(g1, 2.0 * s);
        double C5v = 1.0 - mu0v / (2.0 * mu1v);
        if (!(C5v > 0.0) || !(C5v < 1.0)) {
            throw Error("ellipticity_threshold: C5 left (0,1); chain hypotheses violated");
        }
        double Cv = std::sqrt(std::pow(C5v, -2.0 / (n + 2.0 * s)) - 1.0);
        double C4v = 0.5 * Cv;
        double e0 = std::sqrt(n / (n - 1.0)) * std::pow(C4v, 1.0 / s) *
                    std::pow(mu0v / mu1v, 1.0 / s);
        if (!quad) {
            rep.eps1.closed_form = e1;
            rep.g_eps1.closed_form = g1;
            rep.mu0.closed_form = mu0v;
            rep.C5.closed_form = C5v;
            rep.C.closed_form = Cv;
            rep.C4.closed_form = C4v;
            rep.eps0.closed_form = e0;
            rep.slack_bound = std::sqrt(2.0 * n / (n - 1.0)) * std::pow(C4v, 1.0 / s) *
                              std::pow(mu0v / mu1v, 1.0 / s);
        } else {
            rep.eps1.quadrature = e1;
            rep.g_eps1.quadrature = g1;
            rep.mu0.quadrature = mu0v;
            rep.C5.quadrature = C5v;
            rep.C.quadrature = Cv;
            rep.C4.quadrature = C4v;
            rep.eps0.quadrature = e0;
        }
    };
    chain(false);
    chain(true);
    return rep;
}

}  // namespace fkh
