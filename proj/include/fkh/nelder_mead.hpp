#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace fkh {

struct NelderMeadOptions {
    int max_evals = 400;
    double diameter_tol = 1e-6;  // simplex diameter marking convergence
    double initial_step = 0.25;  // edge length of the starting simplex
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int n_evals = 0;
    bool converged = false;
    std::vector<double> history;  // best value after each iteration
};

/**
 * Downhill simplex minimization with the standard reflect / expand /
 * contract / shrink moves (coefficients 1, 2, 1/2, 1/2).  Fully
 * deterministic: ordering ties break by vertex index, so repeated runs
 * from the same start are identical.
 */
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opts = {}) {
    const int d = static_cast<int>(x0.size());
    NelderMeadResult out;
    std::vector<Eigen::VectorXd> verts(d + 1, x0);
    std::vector<double> vals(d + 1);
    for (int i = 0; i < d; ++i) verts[i + 1][i] += opts.initial_step;
    for (int i = 0; i <= d; ++i) vals[i] = f(verts[i]);
    out.n_evals = d + 1;
    std::vector<int> order(d + 1);
    auto sort_order = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return vals[a] < vals[b]; });
    };
    auto diameter = [&](int anchor) {
        double dm = 0.0;
        for (int i = 0; i <= d; ++i) {
            if (i != anchor) dm = std::max(dm, (verts[i] - verts[anchor]).norm());
        }
        return dm;
    };
    while (out.n_evals < opts.max_evals) {
        sort_order();
        int best = order[0], worst = order[d], second_worst = order[d - 1];
        out.history.push_back(vals[best]);
        if (diameter(best) < opts.diameter_tol) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i <= d; ++i) {
            if (i != worst) centroid += verts[i];
        }
        centroid /= d;
        Eigen::VectorXd xr = centroid + (centroid - verts[worst]);
        double fr = f(xr);
        ++out.n_evals;
        if (fr < vals[best]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - verts[worst]);
            double fe = f(xe);
            ++out.n_evals;
            if (fe < fr) {
                verts[worst] = xe;
                vals[worst] = fe;
            } else {
                verts[worst] = xr;
                vals[worst] = fr;
            }
        } else if (fr < vals[second_worst]) {
            verts[worst] = xr;
            vals[worst] = fr;
        } else {
            bool outside = fr < vals[worst];
            Eigen::VectorXd xc;
            if (outside) {
                xc = centroid + 0.5 * (xr - centroid);
            } else {
                xc = centroid - 0.5 * (centroid - verts[worst]);
            }
            double fc = f(xc);
            ++out.n_evals;
            if (fc < std::min(fr, vals[worst])) {
                verts[worst] = xc;
                vals[worst] = fc;
            } else {
                for (int i = 0; i <= d; ++i) {
                    if (i == best) continue;
                    verts[i] = verts[best] + 0.5 * (verts[i] - verts[best]);
                    vals[i] = f(verts[i]);
                    ++out.n_evals;
                }
            }
        }
    }
    sort_order();
    out.x = verts[order[0]];
    out.value = vals[order[0]];
    if (out.history.empty() || out.history.back() > out.value) out.history.push_back(out.value);
    return out;
}

}  // namespace fkh
