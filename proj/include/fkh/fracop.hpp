#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkh/errors.hpp"
#include "fkh/gauss_legendre.hpp"
#include "fkh/profiles.hpp"
#include "fkh/sphere.hpp"
#include "fkh/symcone.hpp"
#include "fkh/threads.hpp"

namespace fkh {

/** What to do when the reported truncation bound exceeds tol. */
enum class TailPolicy { kReport, kReject };

/**
 * Discretization of the singular integral: a geometric Gauss-Legendre radial
 * grid on [r_min, r_max] (n_radial log-uniform panels, gl_per_panel nodes
 * each) crossed with a dimension-dispatched angular rule of resolution
 * n_angular.  Both cutoffs carry closed-form error bounds, reported with
 * every value and enforced against tol under TailPolicy::kReject.
 */
struct QuadratureSpec {
    int n_radial = 48;
    int n_angular = 32;
    double r_min = 1e-4;
    double r_max = 1e4;
    TailPolicy tail_policy = TailPolicy::kReport;
    double tol = 1e-2;
    int gl_per_panel = 8;
    std::uint64_t mc_seed = 20240817;
    bool allow_extreme_anisotropy = false;
    int n_threads = 0;  // 0: resolve from environment

    void validate() const {
        if (!(r_min > 0.0) || !(r_max > r_min)) {
            throw std::invalid_argument("QuadratureSpec: need 0 < r_min < r_max");
        }
        if (n_radial < 4 || n_angular < 4) {
            throw std::invalid_argument("QuadratureSpec: node counts >= 4 required");
        }
        if (gl_per_panel < 2) throw std::invalid_argument("QuadratureSpec: gl_per_panel >= 2");
        if (!(tol > 0.0)) throw std::invalid_argument("QuadratureSpec: tol > 0 required");
    }

    QuadratureSpec refined() const {
        QuadratureSpec q = *this;
        q.n_radial *= 2;
        q.n_angular *= 2;
        return q;
    }
};

struct FracopResult {
    double value = 0.0;
    double trunc_bound = 0.0;  // rigorous cutoff-error bound (deterministic part)
    double mc_stderr = 0.0;    // standard error when the angular rule is Monte Carlo
};

/** delta(u, x, y) = u(x+y) + u(x-y) - 2 u(x). */
inline double second_difference(const TestFunctionProfile& u, const Vector& x, const Vector& y) {
    return u.evaluate(x + y) + u.evaluate(x - y) - 2.0 * u.evaluate(x);
}

namespace detail {

/** Radial nodes with weights premultiplied by the kernel r^{-1-2s}. */
struct RadialKernelRule {
    std::vector<double> r;
    std::vector<double> wk;
};

inline RadialKernelRule radial_kernel_rule(double s, const QuadratureSpec& spec) {
    RadialKernelRule rule;
    std::vector<double> w;
    geometric_radial_rule(spec.r_min, spec.r_max, spec.n_radial, spec.gl_per_panel, rule.r, w);
    rule.wk.resize(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        rule.wk[j] = w[j] * std::pow(rule.r[j], -1.0 - 2.0 * s);
    }
    return rule;
}

/**
 * Bound for the omitted inner disc along one direction whose image has
 * length a: integral of min(2 L a r, SC a^2 r^2) r^{-1-2s} over (0, r_min).
 */
inline double inner_cutoff_bound(double a, double s, double L, double SC, double r_min) {
    if (SC <= 0.0 || L <= 0.0) return 0.0;
    double rc = 2.0 * L / (SC * a);
    if (r_min <= rc) {
        return SC * a * a * std::pow(r_min, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    }
    return SC * a * a * std::pow(rc, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) +
           2.0 * L * a * (std::pow(rc, 1.0 - 2.0 * s) - std::pow(r_min, 1.0 - 2.0 * s)) /
               (2.0 * s - 1.0);
}

/** Bound for the omitted far field along one direction: integral of
 *  min(2 L a r, SC a^2 r^2) r^{-1-2s} over (r_max, inf).  Finite only when
 *  the linear branch takes over and s > 1/2. */
inline double tail_cutoff_bound(double a, double s, double L, double SC, Growth growth,
                                double r_max) {
    if (growth == Growth::kZeroCurvature) return 0.0;
    if (growth == Growth::kQuadratic) {
        throw TailUnbounded("tail bound: quadratic-growth profile has no convergent far field");
    }
    if (L <= 0.0 || SC <= 0.0) return 0.0;
    if (!(s > 0.5)) {
        throw TailUnbounded("tail bound: s <= 1/2 with linear-growth profile diverges");
    }
    double rc = 2.0 * L / (SC * a);
    if (r_max >= rc) {
        return 2.0 * L * a * std::pow(r_max, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
    }
    return SC * a * a * (std::pow(rc, 2.0 - 2.0 * s) - std::pow(r_max, 2.0 - 2.0 * s)) /
               (2.0 - 2.0 * s) +
           2.0 * L * a * std::pow(rc, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
}

inline SymMatrix sqrt_pd(const SymMatrix& m, const char* who) {
    const Vector& eig = m.eigenvalues();
    if (!(eig[0] > 0.0)) throw Error(std::string(who) + ": matrix not positive definite");
    Vector root = eig.array().sqrt();
    const Matrix& q = m.eigenvectors();
    return SymMatrix(q * root.asDiagonal() * q.transpose());
}

inline void check_anisotropy(const SymMatrix& m, const QuadratureSpec& spec, const char* who) {
    const Vector& eig = m.eigenvalues();
    double cond_sqrt = std::sqrt(eig[eig.size() - 1] / eig[0]);
    if (cond_sqrt > 1e6 && !spec.allow_extreme_anisotropy) {
        throw AnisotropyTooExtreme(std::string(who) + ": cond(sqrt(M)) = " +
                                   std::to_string(cond_sqrt) +
                                   " exceeds 1e6; raise node counts and allow explicitly");
    }
}

/**
 * Shared polar evaluator: per angular node i with mapped direction v_i and
 * direction factor c_i, accumulates c_i * w_i * sum_j wk_j delta(u, x, r_j v_i),
 * halved.  Directions are processed in parallel but reduced in index order,
 * so the result does not depend on the worker count.
 */
struct DirectionTerm {
    double contrib = 0.0;
    double bound = 0.0;
    double radial_integral = 0.0;  // for the Monte Carlo spread estimate
};

template <typename MapDir>
inline FracopResult polar_integrate(const TestFunctionProfile& u, const Vector& x, double s,
                                    const QuadratureSpec& spec, const AngularRule& rule,
                                    MapDir&& map_dir) {
    const RadialKernelRule rad = radial_kernel_rule(s, spec);
    const double ux = u.evaluate(x);
    const std::size_t n_dirs = rule.directions.size();
    std::vector<DirectionTerm> terms(n_dirs);
    parallel_for(
        n_dirs,
        [&](std::size_t i) {
            Vector v;
            double factor = 0.0, bound_scale_a = 0.0;
            map_dir(rule.directions[i], v, factor, bound_scale_a);
            double acc = 0.0;
            Vector yp(x.size()), ym(x.size());
            for (std::size_t j = 0; j < rad.r.size(); ++j) {
                yp = x + rad.r[j] * v;
                ym = x - rad.r[j] * v;
                acc += rad.wk[j] * (u.evaluate(yp) + u.evaluate(ym) - 2.0 * ux);
            }
            DirectionTerm t;
            t.radial_integral = factor * acc;
            t.contrib = rule.weights[i] * t.radial_integral;
            t.bound = rule.weights[i] * factor *
                      (inner_cutoff_bound(bound_scale_a, s, u.L, u.SC, spec.r_min) +
                       tail_cutoff_bound(bound_scale_a, s, u.L, u.SC, u.growth, spec.r_max));
            terms[i] = t;
        },
        spec.n_threads);
    FracopResult out;
    for (const auto& t : terms) {
        out.value += t.contrib;
        out.trunc_bound += t.bound;
    }
    out.value *= 0.5;
    out.trunc_bound *= 0.5;
    if (rule.stochastic && n_dirs > 1) {
        double mean = 0.0;
        for (const auto& t : terms) mean += t.radial_integral;
        mean /= static_cast<double>(n_dirs);
        double var = 0.0;
        for (const auto& t : terms) {
            double d = t.radial_integral - mean;
            var += d * d;
        }
        var /= static_cast<double>(n_dirs - 1);
        double area = 0.0;
        for (double w : rule.weights) area += w;
        out.mc_stderr = 0.5 * area * std::sqrt(var / static_cast<double>(n_dirs));
    }
    if (spec.tail_policy == TailPolicy::kReject && out.trunc_bound > spec.tol) {
        throw TruncationTooLarge("truncation bound " + std::to_string(out.trunc_bound) +
                                 " exceeds tol " + std::to_string(spec.tol));
    }
    return out;
}

}  // namespace detail

/**
 * The anisotropic nonlocal operator attached to a positive definite M:
 *   (1/2) * integral over R^n of delta(u, x, sqrt(M) z) |z|^{-n-2s} dz,
 * evaluated in the isotropizing z-coordinates where the kernel is radial.
 * The result carries a rigorous bound for the two cutoffs, computed per
 * direction from the declared L and SC (sharper than the norm-based closed
 * forms, which it never exceeds).
 */
inline FracopResult linear_fracop(const TestFunctionProfile& u, const SymMatrix& m,
                                  const Vector& x, double s, const QuadratureSpec& spec,
                                  const AngularRule& rule) {
    if (!(s > 0.0) || !(s < 1.0)) throw SOutOfRange("linear_fracop: s in (0,1) required");
    spec.validate();
    detail::check_anisotropy(m, spec, "linear_fracop");
    SymMatrix root = detail::sqrt_pd(m, "linear_fracop");
    const Matrix& sq = root.matrix();
    return detail::polar_integrate(
        u, x, s, spec, rule,
        [&sq](const Vector& omega, Vector& v, double& factor, double& a) {
            v = sq * omega;
            factor = 1.0;
            a = v.norm();
        });
}

inline FracopResult linear_fracop(const TestFunctionProfile& u, const SymMatrix& m,
                                  const Vector& x, double s, const QuadratureSpec& spec) {
    AngularRule rule = angular_rule(static_cast<int>(x.size()), spec.n_angular, spec.mc_seed);
    return linear_fracop(u, m, x, s, spec, rule);
}

/**
 * Same operator evaluated in the original y-coordinates, keeping the
 * anisotropic kernel |sqrt(M)^{-1} y|^{-n-2s} and the explicit determinant
 * factor.  Redundant with linear_fracop by an exact change of variables;
 * kept as an independent path so the two discretizations cross-check each
 * other.
 */
inline FracopResult linear_fracop_ycoords(const TestFunctionProfile& u, const SymMatrix& m,
                                          const Vector& x, double s, const QuadratureSpec& spec,
                                          const AngularRule& rule) {
    if (!(s > 0.0) || !(s < 1.0)) throw SOutOfRange("linear_fracop_ycoords: s in (0,1) required");
    spec.validate();
    detail::check_anisotropy(m, spec, "linear_fracop_ycoords");
    const int n = m.dim();
    const Vector& eig = m.eigenvalues();
    if (!(eig[0] > 0.0)) throw Error("linear_fracop_ycoords: matrix not positive definite");
    Vector inv_root = eig.array().rsqrt();
    Matrix m_inv_root = m.eigenvectors() * inv_root.asDiagonal() * m.eigenvectors().transpose();
    double det_inv_root = 1.0;
    for (int i = 0; i < n; ++i) det_inv_root *= inv_root[i];
    const double expo = -(static_cast<double>(n) + 2.0 * s);
    return detail::polar_integrate(
        u, x, s, spec, rule,
        [&](const Vector& psi, Vector& v, double& factor, double& a) {
            v = psi;
            double b = (m_inv_root * psi).norm();
            factor = det_inv_root * std::pow(b, expo);
            a = 1.0;  // radial increments move along the unit direction psi
        });
}

inline FracopResult linear_fracop_ycoords(const TestFunctionProfile& u, const SymMatrix& m,
                                          const Vector& x, double s,
                                          const QuadratureSpec& spec) {
    AngularRule rule = angular_rule(static_cast<int>(x.size()), spec.n_angular, spec.mc_seed);
    return linear_fracop_ycoords(u, m, x, s, spec, rule);
}

namespace detail {

inline void check_frame(const Matrix& frame) {
    Matrix gram = frame.transpose() * frame;
    Matrix dev = gram - Matrix::Identity(gram.rows(), gram.cols());
    if (dev.cwiseAbs().maxCoeff() > 1e-10) {
        throw FrameNotOrthonormal("frame vectors not orthonormal within 1e-10");
    }
}

/** Angular rule in the d-dimensional coefficient space of a frame. */
inline AngularRule coefficient_rule(int d, const QuadratureSpec& spec) {
    if (d == 1) {
        AngularRule rule;
        Eigen::VectorXd e(1);
        e << 1.0;
        rule.directions.push_back(e);
        rule.weights.push_back(2.0);  // both points of S^0, paired by evenness
        return rule;
    }
    return angular_rule(d, spec.n_angular, spec.mc_seed);
}

}  // namespace detail

/**
 * Fractional Laplacian of u restricted to the affine subspace x + span(frame),
 * in symmetrized form:
 *   (1/2) * integral over R^d of delta(u, x, sum_j (z_j / lambda_j) f_j)
 *           |z|^{-d-2s} dz,   d = number of frame columns.
 * With unit weights this is the plain subspace operator; general positive
 * lambda_j give the anisotropically weighted integral (whose prod(lambda)
 * prefactor cancels exactly under the substitution z_j = lambda_j y_j, so no
 * explicit determinant appears).
 */
inline double subspace_fraclap(const TestFunctionProfile& u, const Matrix& frame, const Vector& x,
                               double s, const QuadratureSpec& spec,
                               const Vector& lambda = Vector()) {
    if (!(s > 0.5) || !(s < 1.0)) throw SOutOfRange("subspace_fraclap: s in (1/2,1) required");
    spec.validate();
    detail::check_frame(frame);
    const int d = static_cast<int>(frame.cols());
    Vector lam = lambda;
    if (lam.size() == 0) lam = Vector::Ones(d);
    if (lam.size() != d) throw std::invalid_argument("subspace_fraclap: weight count mismatch");
    for (int j = 0; j < d; ++j) {
        if (!(lam[j] > 0.0)) throw std::invalid_argument("subspace_fraclap: weights must be > 0");
    }
    AngularRule rule = detail::coefficient_rule(d, spec);
    FracopResult r = detail::polar_integrate(
        u, x, s, spec, rule,
        [&](const Vector& c, Vector& v, double& factor, double& a) {
            v = Vector::Zero(frame.rows());
            for (int j = 0; j < d; ++j) v += (c[j] / lam[j]) * frame.col(j);
            factor = 1.0;
            a = v.norm();
        });
    return r.value;
}

/**
 * The same subspace integral in raw first-difference form,
 *   integral of (u(x + z . frame) - u(x)) |z|^{-d-2s} dz,
 * over a full (not half) node set whose antipodal pairing cancels the odd
 * part.  Cross-check path for the symmetrization identity; d <= 2 uses exact
 * antipodal grids, d >= 3 antithetic Monte Carlo.
 */
inline double subspace_fraclap_first_diff(const TestFunctionProfile& u, const Matrix& frame,
                                          const Vector& x, double s, const QuadratureSpec& spec) {
    if (!(s > 0.5) || !(s < 1.0)) {
        throw SOutOfRange("subspace_fraclap_first_diff: s in (1/2,1) required");
    }
    spec.validate();
    detail::check_frame(frame);
    const int d = static_cast<int>(frame.cols());
    const double pi = 3.14159265358979323846;
    std::vector<Vector> dirs;
    std::vector<double> wts;
    if (d == 1) {
        Vector p(1), m(1);
        p << 1.0;
        m << -1.0;
        dirs = {p, m};
        wts = {1.0, 1.0};
    } else if (d == 2) {
        int mm = 2 * spec.n_angular;  // even count: antipodal pairs are exact
        for (int j = 0; j < mm; ++j) {
            double th = 2.0 * pi * (j + 0.5) / mm;
            Vector c(2);
            c << std::cos(th), std::sin(th);
            dirs.push_back(c);
            wts.push_back(2.0 * pi / mm);
        }
    } else {
        AngularRule half = sphere_mc_rule(d, spec.n_angular * spec.n_angular * 4, spec.mc_seed);
        for (std::size_t i = 0; i < half.directions.size(); ++i) {
            dirs.push_back(half.directions[i]);
            dirs.push_back(-half.directions[i]);
            wts.push_back(0.5 * half.weights[i]);
            wts.push_back(0.5 * half.weights[i]);
        }
    }
    detail::RadialKernelRule rad = detail::radial_kernel_rule(s, spec);
    const double ux = u.evaluate(x);
    std::vector<double> slot(dirs.size());
    parallel_for(
        dirs.size(),
        [&](std::size_t i) {
            Vector v = Vector::Zero(frame.rows());
            for (int j = 0; j < d; ++j) v += dirs[i][j] * frame.col(j);
            double acc = 0.0;
            for (std::size_t jj = 0; jj < rad.r.size(); ++jj) {
                acc += rad.wk[jj] * (u.evaluate(x + rad.r[jj] * v) - ux);
            }
            slot[i] = wts[i] * acc;
        },
        spec.n_threads);
    double value = 0.0;
    for (double t : slot) value += t;
    return value;
}

/**
 * Angular rule tuned to a strongly anisotropic M (n = 3): polar coordinate
 * aligned with M's smallest eigenvector and graded toward that pole, where
 * the direction factor |sqrt(M) omega| crosses over on the relative scale
 * eta_min / eta_max.  Lets the degenerate sweep keep spectral accuracy where
 * a uniform product rule would need thousands of polar nodes.
 */
inline AngularRule graded_rule_for(const SymMatrix& m, int n_panels, int q, int n_phi) {
    if (m.dim() != 3) throw std::invalid_argument("graded_rule_for: n = 3 only");
    const Vector& eig = m.eigenvalues();
    if (!(eig[0] > 0.0)) throw Error("graded_rule_for: matrix not positive definite");
    double pole_scale = std::min(0.25, std::max(1e-14, 0.25 * eig[0] / eig[2]));
    AngularRule local = sphere3_graded_rule(pole_scale, n_panels, q, n_phi);
    Matrix basis(3, 3);
    basis.col(0) = m.eigenvectors().col(1);
    basis.col(1) = m.eigenvectors().col(2);
    basis.col(2) = m.eigenvectors().col(0);  // pole axis = smallest eigenvalue
    for (auto& dir : local.directions) dir = basis * dir;
    return local;
}

}  // namespace fkh
