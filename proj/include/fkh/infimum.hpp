#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fkh/degenerate.hpp"
#include "fkh/envelope.hpp"
#include "fkh/errors.hpp"
#include "fkh/fracop.hpp"
#include "fkh/nelder_mead.hpp"
#include "fkh/rng.hpp"

namespace fkh {

enum class SearchMode {
    kAuto,      // diagonal generators when the profile is radial, else full
    kDiagonal,  // diagonal generators only
    kFull       // generators with free eigenframe (Givens angles)
};

struct InfOptions {
    int n_starts = 8;
    std::uint64_t seed = 1;
    SearchMode mode = SearchMode::kAuto;
    double min_lambda = 0.0;  // floor on the slope matrix's smallest eigenvalue
    NelderMeadOptions nm;
    QuadratureSpec quad;
};

struct InfResult {
    double value = 0.0;
    EnvelopeMatrix argmin;
    int n_starts = 0;
    bool converged = false;
    std::vector<double> history;  // best start's value trace
};

namespace detail {

/** Product of Givens rotations over all coordinate pairs, fixed order. */
inline Matrix givens_product(int n, const Eigen::VectorXd& angles) {
    Matrix r = Matrix::Identity(n, n);
    int t = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++t) {
            double c = std::cos(angles[t]), sn = std::sin(angles[t]);
            Matrix g = Matrix::Identity(n, n);
            g(i, i) = c;
            g(j, j) = c;
            g(i, j) = -sn;
            g(j, i) = sn;
            r = r * g;
        }
    }
    return r;
}

constexpr double kInfeasiblePenalty = 1e8;

/**
 * Decodes an optimizer point into a slope matrix.  Layout: first n entries
 * are raw generator eigenvalues (any scale; normalized to sigma_k = 1 when
 * inside the cone), remaining n(n-1)/2 entries are Givens angles (absent in
 * diagonal mode).  Returns false with a graded penalty when the point is
 * infeasible, keeping the objective finite for the simplex.
 */
inline bool decode_point(const Eigen::VectorXd& theta, int n, int k, bool diagonal,
                         double min_lambda, EnvelopeMatrix* m_out, double* penalty) {
    Vector sigma = theta.head(n);
    auto e = elementary_symmetric_all(sigma, k);
    double slack = 0.0;
    for (int l = 1; l <= k; ++l) slack += std::max(0.0, 1e-9 - e[l]);
    if (slack > 0.0) {
        *penalty = kInfeasiblePenalty * (1.0 + slack);
        return false;
    }
    sigma /= std::pow(e[k], 1.0 / k);
    SymMatrix b = SymMatrix::diagonal(sigma);
    if (!diagonal) {
        Matrix q = givens_product(n, theta.tail(theta.size() - n));
        b = SymMatrix(q * sigma.asDiagonal() * q.transpose());
    }
    EnvelopeMatrix m;
    try {
        m = dfk(b, k);
    } catch (const Error&) {
        *penalty = kInfeasiblePenalty * 2.0;
        return false;
    }
    if (min_lambda > 0.0) {
        double lam_min = m.M.eigenvalues()[0];
        if (lam_min < min_lambda * (1.0 - 1e-12)) {
            *penalty = kInfeasiblePenalty * (1.0 + (min_lambda - lam_min) / min_lambda);
            return false;
        }
    }
    *m_out = m;
    return true;
}

}  // namespace detail

/**
 * The nonlinear operator: infimum over slope matrices of the anisotropic
 * nonlocal linear operators.  Multi-start simplex descent over generator
 * eigenvalues (and eigenframe angles in full mode); the identity generator
 * is always start 0, the rest are seeded cone samples.  The reported value
 * is the running minimum over every probed matrix, so it upper-bounds the
 * true infimum by construction.
 */
inline InfResult F_ks(const TestFunctionProfile& u, const Vector& x, int k, double s,
                      const InfOptions& opts) {
    const int n = static_cast<int>(x.size());
    if (k < 1 || k > n) throw std::invalid_argument("F_ks: k out of [1, n]");
    bool diagonal = opts.mode == SearchMode::kDiagonal ||
                    (opts.mode == SearchMode::kAuto && u.is_radial);
    const int n_angles = diagonal ? 0 : n * (n - 1) / 2;
    AngularRule rule = angular_rule(n, opts.quad.n_angular, opts.quad.mc_seed);
    auto objective = [&](const Eigen::VectorXd& theta) {
        EnvelopeMatrix m;
        double penalty = 0.0;
        if (!detail::decode_point(theta, n, k, diagonal, opts.min_lambda, &m, &penalty)) {
            return penalty;
        }
        return linear_fracop(u, m.M, x, s, opts.quad, rule).value;
    };
    InfResult best;
    best.value = std::numeric_limits<double>::infinity();
    best.n_starts = opts.n_starts;
    bool any_feasible_start = false;
    for (int start = 0; start < opts.n_starts; ++start) {
        Eigen::VectorXd theta0(n + n_angles);
        theta0.setZero();
        if (start == 0) {
            theta0.head(n).setOnes();
        } else {
            auto rng = make_rng(opts.seed, static_cast<std::uint64_t>(start));
            theta0.head(n) = sample_cone_vector(n, k, rng);
            std::uniform_real_distribution<double> ang(-0.7853981633974483, 0.7853981633974483);
            for (int t = 0; t < n_angles; ++t) theta0[n + t] = ang(rng);
        }
        {
            EnvelopeMatrix m0;
            double pen0 = 0.0;
            if (detail::decode_point(theta0, n, k, diagonal, opts.min_lambda, &m0, &pen0)) {
                any_feasible_start = true;
            } else if (opts.min_lambda > 0.0) {
                continue;  // this start is outside the constraint; skip it
            }
        }
        NelderMeadResult r = nelder_mead(objective, theta0, opts.nm);
        if (r.value < best.value) {
            EnvelopeMatrix m;
            double penalty = 0.0;
            if (detail::decode_point(r.x, n, k, diagonal, opts.min_lambda, &m, &penalty)) {
                best.value = r.value;
                best.argmin = m;
                best.converged = r.converged;
                best.history = r.history;
            }
        }
    }
    if (opts.min_lambda > 0.0 && !any_feasible_start) {
        throw InfeasibleConstraint("F_ks: no start satisfies the eigenvalue floor " +
                                   std::to_string(opts.min_lambda));
    }
    if (!std::isfinite(best.value)) {
        throw InfeasibleConstraint("F_ks: no feasible point found by any start");
    }
    return best;
}

/** Same minimization with the strict-ellipticity floor lambda_min(M) >= eps0. */
inline InfResult F_ks_restricted(const TestFunctionProfile& u, const Vector& x, int k, double s,
                                 double eps0, const InfOptions& opts) {
    if (eps0 < 0.0) throw std::invalid_argument("F_ks_restricted: eps0 >= 0 required");
    InfOptions o = opts;
    o.min_lambda = eps0;
    return F_ks(u, x, k, s, o);
}

struct SweepRow {
    double eps = 0.0;
    double value = 0.0;
    double trunc_bound = 0.0;
    double lambda_min = 0.0;
};

/**
 * Operator values along the explicit degenerate direction: for each eps the
 * generator B_eps is mapped to its slope matrix (smallest eigenvalue eps)
 * and the linear operator is evaluated on a rule graded to that matrix's
 * frame, with widened radial cutoffs.  The blow-up of these values as
 * eps -> 0 is the quantitative degeneracy statement the experiments fit.
 */
inline std::vector<SweepRow> degenerate_sweep(const TestFunctionProfile& u, const Vector& x,
                                              double s, const std::vector<double>& eps_list,
                                              const QuadratureSpec& base) {
    const int n = static_cast<int>(x.size());
    if (n != 2 && n != 3) throw std::invalid_argument("degenerate_sweep: n in {2, 3} only");
    QuadratureSpec spec = base;
    spec.allow_extreme_anisotropy = true;
    spec.r_min = std::min(spec.r_min, 1e-6);
    spec.r_max = std::max(spec.r_max, 1e6);
    spec.n_radial = std::max(spec.n_radial, 60);
    std::vector<SweepRow> rows;
    rows.reserve(eps_list.size());
    for (double eps : eps_list) {
        DegenerateFamily fam = degenerate_family(eps, n);
        EnvelopeMatrix m = dfk(fam.B_eps, 2);
        SweepRow row;
        row.eps = eps;
        row.lambda_min = m.M.eigenvalues()[0];
        FracopResult r;
        if (n == 3) {
            AngularRule rule = graded_rule_for(m.M, 14, 6, std::max(16, spec.n_angular));
            r = linear_fracop(u, m.M, x, s, spec, rule);
        } else {
            AngularRule rule = circle_rule(std::max(4096, spec.n_angular));
            r = linear_fracop(u, m.M, x, s, spec, rule);
        }
        row.value = r.value;
        row.trunc_bound = r.trunc_bound;
        rows.push_back(row);
    }
    return rows;
}

/**
 * Best probed operator value on the slice lambda_min(M) = eps, for radial u
 * with n = 3, k = 2.  Diagonal generators suffice there, and the slice is a
 * one-parameter family: sigma_1 + sigma_2 = 2 eps fixes the smallest slope
 * eigenvalue while sigma_2(B) = 1 pins sigma_3.  Grid scan plus a short
 * simplex refinement.
 */
inline double slice_min_value(const TestFunctionProfile& u, const Vector& x, double s,
                              double eps, const QuadratureSpec& base) {
    const int n = static_cast<int>(x.size());
    if (n != 3) throw std::invalid_argument("slice_min_value: n = 3 only");
    QuadratureSpec spec = base;
    spec.allow_extreme_anisotropy = true;
    auto value_at = [&](double sigma1) {
        double sigma2 = 2.0 * eps - sigma1;
        if (sigma1 > sigma2) return detail::kInfeasiblePenalty;
        double q = sigma1 * sigma2;
        if (q >= 1.0) return detail::kInfeasiblePenalty;
        double sigma3 = (1.0 - q) / (2.0 * eps);
        Vector sig(3);
        sig << sigma1, sigma2, sigma3;
        if (!in_gamma_k(sig, 2)) return detail::kInfeasiblePenalty;
        if (sigma3 < sigma2) return detail::kInfeasiblePenalty;  // slice needs sigma3 maximal
        EnvelopeMatrix m;
        try {
            m = dfk(SymMatrix::diagonal(sig), 2);
        } catch (const Error&) {
            return detail::kInfeasiblePenalty;
        }
        AngularRule rule = graded_rule_for(m.M, 14, 6, std::max(16, spec.n_angular));
        return linear_fracop(u, m.M, x, s, spec, rule).value;
    };
    double best_s1 = eps, best_v = value_at(eps);
    const int grid = 80;
    for (int i = 0; i < grid; ++i) {
        double s1 = -3.0 * eps + (4.0 * eps) * i / (grid - 1);
        double v = value_at(s1);
        if (v < best_v) {
            best_v = v;
            best_s1 = s1;
        }
    }
    NelderMeadOptions nm;
    nm.max_evals = 60;
    nm.initial_step = 0.1 * eps;
    Eigen::VectorXd t0(1);
    t0 << best_s1;
    NelderMeadResult r = nelder_mead([&](const Eigen::VectorXd& t) { return value_at(t[0]); },
                                     t0, nm);
    return std::min(best_v, r.value);
}

}  // namespace fkh
