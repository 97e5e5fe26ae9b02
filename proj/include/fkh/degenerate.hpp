#pragma once

#include <cmath>

#include "fkh/errors.hpp"
#include "fkh/symcone.hpp"

namespace fkh {

/** Upper end of the admissible eps range for the degenerate family. */
inline double degenerate_eps_max(int n) {
    if (n < 2) throw std::invalid_argument("degenerate_eps_max: n >= 2 required");
    if (n == 2) return 1.0 / std::sqrt(2.0);
    return 0.5 * std::sqrt((n - 1) / (2.0 * (n - 2.0)));
}

inline void check_eps_range(double eps, int n, const char* who) {
    if (!(eps > 0.0) || !(eps < degenerate_eps_max(n))) {
        throw EpsOutOfRange(std::string(who) + ": eps must lie in (0, " +
                            std::to_string(degenerate_eps_max(n)) + ") for n = " +
                            std::to_string(n));
    }
}

/** Large eigenvalue h(eps) completing diag(2eps/(n-1), ..., h) to sigma_2 = 1. */
inline double h_eps(double eps, int n) {
    check_eps_range(eps, n, "h_eps");
    return (1.0 - 2.0 * (n - 2.0) * eps * eps / (n - 1.0)) / (2.0 * eps);
}

/** Inverse square root of the repeated slope eigenvalue:
 *  g(eps) = (1/(4 eps) + (n-2) eps / (2(n-1)))^{-1/2}, about 2 sqrt(eps)
 *  for small eps. */
inline double g_eps(double eps, int n) {
    check_eps_range(eps, n, "g_eps");
    return 1.0 / std::sqrt(1.0 / (4.0 * eps) + (n - 2.0) * eps / (2.0 * (n - 1.0)));
}

/**
 * The explicit almost-degenerate generator family: B_eps has n-1 eigenvalues
 * 2 eps/(n-1) and one eigenvalue h(eps), normalized to sigma_2(B_eps) = 1.
 * Its slope matrix M(B_eps) has smallest eigenvalue exactly eps (repeated
 * large ones equal 1/g(eps)^2), which makes the family the canonical probe
 * of the degenerate boundary lambda_min -> 0.
 */
struct DegenerateFamily {
    double eps = 0.0;
    int n = 0;
    SymMatrix B_eps;
    double h = 0.0;
    double g = 0.0;
};

inline DegenerateFamily degenerate_family(double eps, int n) {
    check_eps_range(eps, n, "degenerate_family");
    DegenerateFamily fam;
    fam.eps = eps;
    fam.n = n;
    fam.h = h_eps(eps, n);
    fam.g = g_eps(eps, n);
    Vector d = Vector::Constant(n, 2.0 * eps / (n - 1.0));
    d[n - 1] = fam.h;
    fam.B_eps = SymMatrix::diagonal(d);
    return fam;
}

}  // namespace fkh
