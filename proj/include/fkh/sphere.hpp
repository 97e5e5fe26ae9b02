#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fkh/gauss_legendre.hpp"
#include "fkh/rng.hpp"

namespace fkh {

/** Surface area of the unit sphere S^{n-1} in R^n. */
inline double surface_area(int n) {
    if (n < 1) throw std::invalid_argument("surface_area: n >= 1 required");
    const double pi = 3.14159265358979323846;
    return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/**
 * Quadrature rule over the unit sphere.  Weights sum to |S^{n-1}| and the
 * node set covers only one representative of each {omega, -omega} pair, so
 * the rule is exact in spirit only for integrands even under omega -> -omega
 * (second-difference kernels always are).  `stochastic` marks Monte Carlo
 * rules whose error should be reported as a standard error, not a bound.
 */
struct AngularRule {
    std::vector<Eigen::VectorXd> directions;
    std::vector<double> weights;
    bool stochastic = false;
};

/** m directions uniformly spaced over the half circle, weight 2*pi/m each. */
inline AngularRule circle_rule(int m) {
    if (m < 1) throw std::invalid_argument("circle_rule: m >= 1 required");
    const double pi = 3.14159265358979323846;
    AngularRule rule;
    rule.directions.reserve(m);
    rule.weights.assign(m, 2.0 * pi / m);
    for (int j = 0; j < m; ++j) {
        double theta = pi * (j + 0.5) / m;
        Eigen::VectorXd w(2);
        w << std::cos(theta), std::sin(theta);
        rule.directions.push_back(w);
    }
    return rule;
}

namespace detail {

/** Assemble an S^2 rule from polar nodes t in (0,1) and uniform azimuths. */
inline AngularRule sphere3_from_polar(const std::vector<double>& t_nodes,
                                      const std::vector<double>& t_weights,
                                      int n_phi) {
    const double pi = 3.14159265358979323846;
    AngularRule rule;
    rule.directions.reserve(t_nodes.size() * n_phi);
    rule.weights.reserve(t_nodes.size() * n_phi);
    for (std::size_t i = 0; i < t_nodes.size(); ++i) {
        double t = t_nodes[i];
        double rho = std::sqrt(std::max(0.0, 1.0 - t * t));
        for (int j = 0; j < n_phi; ++j) {
            double phi = 2.0 * pi * (j + 0.5) / n_phi;
            Eigen::VectorXd w(3);
            w << rho * std::cos(phi), rho * std::sin(phi), t;
            rule.directions.push_back(w);
            // factor 2: nodes sample t in (0,1) only, mirrored by evenness
            rule.weights.push_back(2.0 * t_weights[i] * (2.0 * pi / n_phi));
        }
    }
    return rule;
}

}  // namespace detail

/**
 * Product rule on S^2: Gauss-Legendre in the polar coordinate t = omega_3
 * over (0,1), uniform azimuths.  n_t polar nodes, n_phi azimuthal.
 */
inline AngularRule sphere3_rule(int n_t, int n_phi) {
    if (n_t < 1 || n_phi < 1) throw std::invalid_argument("sphere3_rule: positive counts required");
    auto& gl = gauss_legendre(n_t);
    std::vector<double> t_nodes(n_t), t_weights(n_t);
    for (int i = 0; i < n_t; ++i) {
        t_nodes[i] = 0.5 * (gl.nodes[i] + 1.0);
        t_weights[i] = 0.5 * gl.weights[i];
    }
    return detail::sphere3_from_polar(t_nodes, t_weights, n_phi);
}

/**
 * S^2 rule graded toward the pole t = 1.  The polar integrand produced by a
 * strongly anisotropic metric varies on the scale `pole_scale` in 1 - t, so
 * panels shrink geometrically from width O(1) down to pole_scale there, with
 * one extra panel covering the final layer.  Used by the degenerate-family
 * sweep where a plain product rule would need thousands of polar nodes.
 */
inline AngularRule sphere3_graded_rule(double pole_scale, int n_panels, int q, int n_phi) {
    if (!(pole_scale > 0.0) || pole_scale >= 1.0) {
        throw std::invalid_argument("sphere3_graded_rule: pole_scale in (0, 1) required");
    }
    pole_scale = std::max(pole_scale, 1e-14);
    std::vector<double> d_nodes, d_weights;
    // delta = 1 - t, log-uniform panels on [pole_scale, 1]
    geometric_radial_rule(pole_scale, 1.0, n_panels, q, d_nodes, d_weights);
    append_gl_panel(0.0, pole_scale, q, d_nodes, d_weights);
    std::vector<double> t_nodes(d_nodes.size()), t_weights(d_weights.size());
    for (std::size_t i = 0; i < d_nodes.size(); ++i) {
        t_nodes[i] = 1.0 - d_nodes[i];
        t_weights[i] = d_weights[i];
    }
    return detail::sphere3_from_polar(t_nodes, t_weights, n_phi);
}

/**
 * Monte Carlo rule: n_samples directions drawn uniformly on S^{n-1} via
 * normalized Gaussians, each weighted |S^{n-1}| / n_samples.  Deterministic
 * for a fixed seed.
 */
inline AngularRule sphere_mc_rule(int n, int n_samples, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("sphere_mc_rule: n >= 2 required");
    if (n_samples < 2) throw std::invalid_argument("sphere_mc_rule: n_samples >= 2 required");
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    AngularRule rule;
    rule.stochastic = true;
    rule.directions.reserve(n_samples);
    rule.weights.assign(n_samples, surface_area(n) / n_samples);
    for (int i = 0; i < n_samples; ++i) {
        Eigen::VectorXd w(n);
        double norm2 = 0.0;
        do {
            for (int j = 0; j < n; ++j) w[j] = gauss(rng);
            norm2 = w.squaredNorm();
        } while (norm2 < 1e-24);
        rule.directions.push_back(w / std::sqrt(norm2));
    }
    return rule;
}

/**
 * Dimension-dispatching default: circle rule for n = 2, product rule for
 * n = 3 (n_angular polar nodes, 2 * n_angular azimuths), Monte Carlo with
 * n_angular^2 * 8 samples for n >= 4.
 */
inline AngularRule angular_rule(int n, int n_angular, std::uint64_t mc_seed) {
    if (n == 2) return circle_rule(n_angular);
    if (n == 3) return sphere3_rule(n_angular, 2 * n_angular);
    return sphere_mc_rule(n, n_angular * n_angular * 8, mc_seed);
}

}  // namespace fkh
