#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fkh/constants.hpp"
#include "fkh/envelope.hpp"
#include "fkh/errors.hpp"
#include "fkh/fracop.hpp"
#include "fkh/infimum.hpp"
#include "fkh/rng.hpp"

namespace fkh {

enum class ExperimentStatus { kPass, kFail, kNotApplicable };

/**
 * Self-describing result of one verification run: scalar inputs and
 * tolerances, the raw sample table, summary statistics, and a tri-state
 * outcome.  Everything that feeds the pass decision is in the report.
 */
struct ExperimentReport {
    std::string name;
    std::vector<std::pair<std::string, double>> inputs;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> notes;
    ExperimentStatus status = ExperimentStatus::kFail;

    bool passed() const { return status == ExperimentStatus::kPass; }
    void in(const std::string& k, double v) { inputs.push_back({k, v}); }
    void out(const std::string& k, double v) { summary.push_back({k, v}); }
};

namespace detail {

inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/**
 * Fits the blow-up rate of the operator along the degenerate family: the
 * sweep values should grow like eps^{-s}, so the log-log slope must sit at
 * -s (within slope_tol) and the values must increase monotonically as eps
 * decreases.  With eta0_measured > 0 the derivation's lower-bound constant
 * C4 mu0 / (1-s) is evaluated and logged, but does not gate the outcome.
 */
inline ExperimentReport blowup_experiment(const TestFunctionProfile& u, int n, double s,
                                          std::vector<double> eps_list,
                                          const QuadratureSpec& quad,
                                          double eta0_measured = 0.0,
                                          double slope_tol = 0.05) {
    ExperimentReport rep;
    rep.name = "blowup";
    rep.in("n", n);
    rep.in("s", s);
    rep.in("slope_tol", slope_tol);
    rep.columns = {"eps", "value", "trunc_bound", "lambda_min"};
    std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());
    if (u.SC <= 0.0 || u.L <= 0.0) {
        rep.notes.push_back("profile has no curvature; operator vanishes identically");
        rep.status = ExperimentStatus::kNotApplicable;
        return rep;
    }
    Vector x = Vector::Zero(n);
    std::vector<SweepRow> rows = degenerate_sweep(u, x, s, eps_list, quad);
    std::vector<double> log_eps, log_val;
    bool monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rep.rows.push_back({rows[i].eps, rows[i].value, rows[i].trunc_bound,
                            rows[i].lambda_min});
        if (!(rows[i].value > 0.0)) {
            rep.notes.push_back("nonpositive sweep value; degenerate input");
            rep.status = ExperimentStatus::kNotApplicable;
            return rep;
        }
        if (i > 0 && rows[i].value <= rows[i - 1].value) monotone = false;
        log_eps.push_back(std::log(rows[i].eps));
        log_val.push_back(std::log(rows[i].value));
    }
    double slope = detail::least_squares_slope(log_eps, log_val);
    rep.out("slope", slope);
    rep.out("target_slope", -s);
    rep.out("monotone", monotone ? 1.0 : 0.0);
    if (eta0_measured > 0.0) {
        ConstantsReport chain = ellipticity_threshold(n, s, u.L, u.SC, eta0_measured);
        double coef = chain.C4.closed_form * chain.mu0.closed_form / (1.0 - s);
        double worst_ratio = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            worst_ratio = std::min(worst_ratio, r.value / (coef * std::pow(r.eps, -s)));
        }
        rep.out("lower_bound_coef", coef);
        rep.out("min_value_over_bound", worst_ratio);
        rep.notes.push_back("lower-bound constant logged only; the chain is loose by design");
    }
    rep.status = (std::abs(slope + s) <= slope_tol && monotone) ? ExperimentStatus::kPass
                                                                : ExperimentStatus::kFail;
    return rep;
}

/**
 * Checks the two-sided subspace bounds over random (n-1)-frames: each
 * (1-s)-scaled restricted fractional Laplacian of u must land in
 * [0, mu1 + tol], and when a measured eta0 is supplied, above
 * mu0(eta0) - tol as well.  Nonnegativity is additionally probed with
 * anisotropic weights taken from sampled slope matrices.  The unscaled
 * integral's comparison against mu0 (the form the derivation actually
 * yields) is reported informationally.
 */
inline ExperimentReport subspace_bounds_check(const TestFunctionProfile& u, int n, double s,
                                              double eta0_measured, int n_frames,
                                              std::uint64_t seed, const QuadratureSpec& quad,
                                              double tol = 1e-6) {
    ExperimentReport rep;
    rep.name = "subspace_bounds";
    rep.in("n", n);
    rep.in("s", s);
    rep.in("eta0_measured", eta0_measured);
    rep.in("n_frames", n_frames);
    rep.in("seed", static_cast<double>(seed));
    rep.in("tol", tol);
    rep.columns = {"frame", "scaled_value", "unscaled_value", "weighted_value"};
    const double mu1v = mu1_closed(n, s, u.L, u.SC);
    rep.out("mu1", mu1v);
    double mu0v = 0.0;
    if (eta0_measured > 0.0) {
        mu0v = mu0_of(n, s, eta0_measured, u.L, u.SC);
        rep.out("mu0", mu0v);
    }
    Vector x = Vector::Zero(n);
    auto rng = make_rng(seed);
    bool upper_ok = true, nonneg_ok = true, mu0_scaled_ok = true, mu0_unscaled_ok = true;
    double min_scaled = std::numeric_limits<double>::infinity();
    double min_unscaled = min_scaled;
    for (int f = 0; f < n_frames; ++f) {
        Matrix q = random_orthogonal(n, rng);
        Matrix frame = q.leftCols(n - 1);
        double unscaled = subspace_fraclap(u, frame, x, s, quad);
        double scaled = (1.0 - s) * unscaled;
        Vector sigma = sample_cone_vector(n, 2, rng);
        EnvelopeMatrix m = dfk(SymMatrix::diagonal(sigma), 2);
        Vector lam = m.sqrt_inv_eigs.head(n - 1);
        double weighted = subspace_fraclap(u, frame, x, s, quad, lam);
        rep.rows.push_back({static_cast<double>(f), scaled, unscaled, weighted});
        upper_ok = upper_ok && scaled <= mu1v + tol;
        nonneg_ok = nonneg_ok && scaled >= -tol && weighted >= -tol;
        min_scaled = std::min(min_scaled, scaled);
        min_unscaled = std::min(min_unscaled, unscaled);
        if (eta0_measured > 0.0) {
            mu0_scaled_ok = mu0_scaled_ok && scaled >= mu0v - tol;
            mu0_unscaled_ok = mu0_unscaled_ok && unscaled >= mu0v - tol;
        }
    }
    rep.out("min_scaled_value", min_scaled);
    rep.out("min_unscaled_value", min_unscaled);
    rep.out("upper_bound_ok", upper_ok ? 1.0 : 0.0);
    rep.out("nonneg_ok", nonneg_ok ? 1.0 : 0.0);
    if (eta0_measured > 0.0) {
        rep.out("mu0_scaled_ok", mu0_scaled_ok ? 1.0 : 0.0);
        rep.out("mu0_unscaled_ok", mu0_unscaled_ok ? 1.0 : 0.0);
        rep.notes.push_back(
            "mu0 gate uses the (1-s)-scaled integral; the unscaled comparison, "
            "which the derivation itself supports, is reported alongside");
    }
    bool pass = upper_ok && nonneg_ok && (eta0_measured <= 0.0 || mu0_scaled_ok);
    rep.status = pass ? ExperimentStatus::kPass : ExperimentStatus::kFail;
    return rep;
}

/**
 * Samples the constrained eigenvalue configurations from the degeneracy
 * argument: diagonal generators with sigma_2 = 1 whose smallest slope
 * eigenvalue is pinned to eps (first n-1 generator eigenvalues sum to
 * 2 eps).  Verifies on every sample, with Q the sum of the middle
 * generator eigenvalues:
 *   eta_1 >= (1 + Q^2/2) / (4 eps)          (largest slope eigenvalue)
 *   eta_{n-1} - eta_1 >= (2n-4) eps - (n-1) Q.
 */
inline ExperimentReport eigenvalue_constraint_check(int n, double eps, int n_samples,
                                                    std::uint64_t seed) {
    if (n < 3) throw std::invalid_argument("eigenvalue_constraint_check: n >= 3 required");
    ExperimentReport rep;
    rep.name = "eigenvalue_constraints";
    rep.in("n", n);
    rep.in("eps", eps);
    rep.in("n_samples", n_samples);
    rep.in("seed", static_cast<double>(seed));
    rep.in("tol", 1e-10);
    rep.columns = {"sample", "eta1", "eta1_bound", "gap", "gap_bound"};
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 3.0);
    int violations = 0;
    for (int sample = 0; sample < n_samples; ++sample) {
        Vector sigma;
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            Vector head(n - 1);
            double mean = 0.0;
            for (int i = 0; i < n - 1; ++i) {
                head[i] = unif(rng);
                mean += head[i];
            }
            mean /= (n - 1);
            for (int i = 0; i < n - 1; ++i) head[i] += 2.0 * eps / (n - 1) - mean;
            std::sort(head.data(), head.data() + (n - 1));
            double q2 = elementary_symmetric(head, 2);
            double sn = (1.0 - q2) / (2.0 * eps);
            if (sn < head[n - 2]) continue;
            sigma = Vector(n);
            sigma.head(n - 1) = head;
            sigma[n - 1] = sn;
            if (!in_gamma_k(sigma, 2)) continue;
            ok = true;
        }
        if (!ok) {
            throw InfeasibleSample("eigenvalue_constraint_check: no admissible draw at eps = " +
                                   std::to_string(eps));
        }
        double total = sigma.sum();
        double qsum = 0.0;  // middle generator eigenvalues sigma_2..sigma_{n-1}
        for (int i = 1; i < n - 1; ++i) qsum += sigma[i];
        double eta1 = 0.5 * (total - sigma[0]);
        double eta_n1 = 0.5 * (total - sigma[n - 2]);
        double eta1_bound = (1.0 + 0.5 * qsum * qsum) / (4.0 * eps);
        double gap = eta_n1 - eta1;
        double gap_bound = (2.0 * n - 4.0) * eps - (n - 1.0) * qsum;
        bool bad = eta1 < eta1_bound - 1e-10 || gap < gap_bound - 1e-10;
        if (bad) ++violations;
        if (sample < 50 || bad) {
            rep.rows.push_back({static_cast<double>(sample), eta1, eta1_bound, gap, gap_bound});
        }
    }
    rep.out("violations", violations);
    rep.status = violations == 0 ? ExperimentStatus::kPass : ExperimentStatus::kFail;
    return rep;
}

/**
 * End-to-end verification that degeneracy is excluded at the threshold the
 * constant chain provides: measures eta0 from the operator itself, derives
 * eps0, and then checks (a) the eigenvalue-floored minimization changes
 * nothing, (b) forcing lambda_min well below eps0 strictly worsens every
 * probed value.
 */
inline ExperimentReport ellipticity_check(const TestFunctionProfile& u, const Vector& x,
                                          double s, const InfOptions& opts,
                                          double rel_tol = 1e-3) {
    const int n = static_cast<int>(x.size());
    ExperimentReport rep;
    rep.name = "ellipticity";
    rep.in("n", n);
    rep.in("s", s);
    rep.in("rel_tol", rel_tol);
    rep.columns = {"probe_eps", "slice_min_value"};
    InfResult base = F_ks(u, x, 2, s, opts);
    double eta0 = (1.0 - s) * base.value;
    rep.out("F_value", base.value);
    rep.out("eta0_measured", eta0);
    if (!(eta0 > 1e-12)) {
        rep.notes.push_back("operator vanishes (eta0 = 0); hypothesis class not met");
        rep.status = ExperimentStatus::kNotApplicable;
        return rep;
    }
    ConstantsReport chain = ellipticity_threshold(n, s, u.L, u.SC, eta0);
    double eps0 = chain.eps0.closed_form;
    rep.out("eps0", eps0);
    InfResult restricted = F_ks_restricted(u, x, 2, s, eps0, opts);
    rep.out("F_restricted_value", restricted.value);
    double rel_gap = std::abs(restricted.value - base.value) / std::abs(base.value);
    rep.out("restricted_rel_gap", rel_gap);
    bool agree = rel_gap <= rel_tol;
    bool excluded = true;
    for (double probe : {eps0 / 10.0, eps0 / 3.0}) {
        double slice;
        if (n == 3) {
            slice = slice_min_value(u, x, s, probe, opts.quad);
        } else if (n == 2) {
            // det M = 1/4 pins the whole slice: eigenvalues (probe, 1/(4 probe))
            Vector d(2);
            d << probe, 0.25 / probe;
            QuadratureSpec spec = opts.quad;
            spec.allow_extreme_anisotropy = true;
            AngularRule rule = circle_rule(std::max(4096, spec.n_angular));
            slice = linear_fracop(u, SymMatrix::diagonal(d), x, s, spec, rule).value;
        } else {
            throw std::invalid_argument("ellipticity_check: n in {2, 3} only");
        }
        rep.rows.push_back({probe, slice});
        excluded = excluded && slice > base.value * (1.0 + rel_tol);
    }
    rep.out("restricted_agrees", agree ? 1.0 : 0.0);
    rep.out("degenerate_excluded", excluded ? 1.0 : 0.0);
    rep.status = (agree && excluded) ? ExperimentStatus::kPass : ExperimentStatus::kFail;
    return rep;
}

}  // namespace fkh
