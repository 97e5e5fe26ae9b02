#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkh {

using Vector = Eigen::VectorXd;

/**
 * Far-field behavior of the second difference delta(u, x, y) in |y|, which
 * decides whether the outer tail of the nonlocal integral converges:
 *   kZeroCurvature  delta vanishes identically (affine u); any s works.
 *   kLinear         delta <= min(2L|y|, SC|y|^2); tail converges for s > 1/2.
 *   kQuadratic      only delta <= SC|y|^2 available; tail never converges
 *                   (such profiles serve grid diagnostics, not the operator).
 */
enum class Growth { kZeroCurvature, kLinear, kQuadratic };

/**
 * A test function with declared regularity constants: L bounds difference
 * quotients, SC bounds second differences via delta <= SC|y|^2.  The
 * constants are promises made by the constructor, spot-checked in tests,
 * and consumed by quadrature truncation bounds.
 */
struct TestFunctionProfile {
    std::function<double(const Vector&)> evaluate;
    double L = 0.0;
    double SC = 0.0;
    bool is_convex = false;
    bool is_radial = false;
    Growth growth = Growth::kLinear;
    std::string name;

    double operator()(const Vector& x) const { return evaluate(x); }
};

/** u(x) = a . x + b: zero second difference everywhere. */
inline TestFunctionProfile affine_profile(const Vector& slope, double intercept = 0.0) {
    TestFunctionProfile p;
    Vector a = slope;
    p.evaluate = [a, intercept](const Vector& x) { return a.dot(x) + intercept; };
    p.L = slope.norm();
    p.SC = 0.0;
    p.is_convex = true;
    p.is_radial = false;
    p.growth = Growth::kZeroCurvature;
    p.name = "affine";
    return p;
}

/**
 * u(x) = sqrt(a^2 + |x|^2) - a: convex, radial, Lipschitz with L = 1,
 * semiconcave with SC = 1/a (largest Hessian eigenvalue, attained at 0),
 * asymptotically the cone |x|.
 */
inline TestFunctionProfile smoothed_cone(double a = 1.0) {
    if (!(a > 0.0)) throw std::invalid_argument("smoothed_cone: a > 0 required");
    TestFunctionProfile p;
    p.evaluate = [a](const Vector& x) { return std::sqrt(a * a + x.squaredNorm()) - a; };
    p.L = 1.0;
    p.SC = 1.0 / a;
    p.is_convex = true;
    p.is_radial = true;
    p.growth = Growth::kLinear;
    p.name = "smoothed_cone";
    return p;
}

/**
 * u(x) = smoothed_cone(1)(x) - c exp(-|x|^2).  For c <= 0.1 the cone's
 * curvature dominates the dimple's and u stays convex.  Gradient bound:
 * L = 1 + c sqrt(2/e) (cone slope plus the Gaussian's maximal slope);
 * curvature bound: SC = 1 + 2c (both maxima sit at the origin).
 */
inline TestFunctionProfile gaussian_dimple(double c) {
    if (c < 0.0 || c > 0.1) throw std::invalid_argument("gaussian_dimple: c in [0, 0.1] required");
    TestFunctionProfile p;
    p.evaluate = [c](const Vector& x) {
        double r2 = x.squaredNorm();
        return std::sqrt(1.0 + r2) - 1.0 - c * std::exp(-r2);
    };
    p.L = 1.0 + c * std::sqrt(2.0 / std::exp(1.0));
    p.SC = 1.0 + 2.0 * c;
    p.is_convex = true;
    p.is_radial = true;
    p.growth = Growth::kLinear;
    p.name = "gaussian_dimple";
    return p;
}

/** u(x) = |x|^2: exact second difference 2|y|^2; grid-diagnostic profile. */
inline TestFunctionProfile quadratic_profile() {
    TestFunctionProfile p;
    p.evaluate = [](const Vector& x) { return x.squaredNorm(); };
    p.L = std::numeric_limits<double>::infinity();
    p.SC = 2.0;
    p.is_convex = true;
    p.is_radial = true;
    p.growth = Growth::kQuadratic;
    p.name = "quadratic";
    return p;
}

/** Same profile shifted by v: x -> u(x - v).  Constants are unchanged. */
inline TestFunctionProfile translate(const TestFunctionProfile& u, const Vector& v) {
    TestFunctionProfile p = u;
    auto base = u.evaluate;
    Vector shift = v;
    p.evaluate = [base, shift](const Vector& x) { return base(x - shift); };
    p.is_radial = false;
    p.name = u.name + "_shifted";
    return p;
}

/** The stock profile set exercised by cross-product test suites. */
inline std::vector<TestFunctionProfile> builtin_profiles(int n) {
    Vector a = Vector::Zero(n);
    for (int i = 0; i < n; ++i) a[i] = 0.3 - 0.1 * i;
    return {affine_profile(a, 0.7), smoothed_cone(1.0), smoothed_cone(2.0),
            gaussian_dimple(0.05)};
}

/**
 * Lookup used by the CLI: "smoothed_cone", "gaussian_dimple", "affine",
 * "quadratic", each optionally suffixed ":value" for the shape parameter
 * (cone width a, dimple depth c; ignored by the others).
 */
inline TestFunctionProfile profile_by_name(const std::string& spec, int n) {
    std::string base = spec;
    double param = std::numeric_limits<double>::quiet_NaN();
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
        base = spec.substr(0, colon);
        try {
            param = std::stod(spec.substr(colon + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("profile_by_name: bad parameter in '" + spec + "'");
        }
    }
    if (base == "smoothed_cone") return smoothed_cone(std::isnan(param) ? 1.0 : param);
    if (base == "gaussian_dimple") return gaussian_dimple(std::isnan(param) ? 0.05 : param);
    if (base == "affine") {
        Vector a = Vector::Zero(n);
        for (int i = 0; i < n; ++i) a[i] = 0.3 - 0.1 * i;
        return affine_profile(a, 0.7);
    }
    if (base == "quadratic") return quadratic_profile();
    throw std::invalid_argument("profile_by_name: unknown profile '" + spec + "'");
}

}  // namespace fkh
