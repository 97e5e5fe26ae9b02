#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "fkh/envelope.hpp"
#include "fkh/errors.hpp"
#include "fkh/fracop.hpp"
#include "fkh/infimum.hpp"
#include "fkh/json_writer.hpp"
#include "fkh/nelder_mead.hpp"
#include "fkh/profiles.hpp"
#include "fkh/sphere.hpp"
#include "fkh/threads.hpp"
#include "fkh/version.hpp"

namespace fkh {

/**
 * Uniform tensor grid on [-R, R]^n carrying node values, evaluated by
 * multilinear interpolation inside the box and by the fallback profile
 * outside, which encodes the far-field condition u - phi -> 0.  Node order
 * is row-major with the last axis fastest.
 */
struct GridFunction {
    int n = 2;
    double R = 8.0;
    int m = 0;
    std::vector<double> values;
    TestFunctionProfile fallback;

    double h() const { return 2.0 * R / (m - 1); }

    std::size_t flat(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (int a = 0; a < n; ++a) f = f * m + idx[a];
        return f;
    }

    Vector node(const std::vector<int>& idx) const {
        Vector x(n);
        for (int a = 0; a < n; ++a) x[a] = -R + idx[a] * h();
        return x;
    }

    double evaluate(const Vector& x) const {
        for (int a = 0; a < n; ++a) {
            if (x[a] < -R || x[a] > R) return fallback.evaluate(x);
        }
        const double hh = h();
        std::vector<int> cell(n);
        std::vector<double> t(n);
        for (int a = 0; a < n; ++a) {
            double u = (x[a] + R) / hh;
            int c = std::min(m - 2, std::max(0, static_cast<int>(std::floor(u))));
            cell[a] = c;
            t[a] = u - c;
        }
        double acc = 0.0;
        const int corners = 1 << n;
        std::vector<int> idx(n);
        for (int corner = 0; corner < corners; ++corner) {
            double w = 1.0;
            for (int a = 0; a < n; ++a) {
                int bit = (corner >> a) & 1;
                idx[a] = cell[a] + bit;
                w *= bit ? t[a] : (1.0 - t[a]);
            }
            if (w != 0.0) acc += w * values[flat(idx)];
        }
        return acc;
    }
};

/** Grid filled with profile values at the nodes. */
inline GridFunction make_grid(const TestFunctionProfile& phi, int n, double R, int m) {
    if (m < 5) throw std::invalid_argument("make_grid: m >= 5 required");
    if (!(R > 0.0)) throw std::invalid_argument("make_grid: R > 0 required");
    GridFunction g;
    g.n = n;
    g.R = R;
    g.m = m;
    g.fallback = phi;
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) total *= m;
    g.values.resize(total);
    std::vector<int> idx(n, 0);
    for (std::size_t f = 0; f < total; ++f) {
        g.values[f] = phi.evaluate(g.node(idx));
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[a] < m) break;
            idx[a] = 0;
        }
    }
    return g;
}

/** Wraps a grid as a profile, inheriting the fallback's declared constants. */
inline TestFunctionProfile grid_backed(const GridFunction& g) {
    TestFunctionProfile p;
    GridFunction copy = g;
    p.evaluate = [copy](const Vector& x) { return copy.evaluate(x); };
    p.L = g.fallback.L;
    p.SC = g.fallback.SC;
    p.is_convex = false;  // interpolation does not certify convexity
    p.is_radial = false;
    p.growth = g.fallback.growth;
    p.name = "grid_backed(" + g.fallback.name + ")";
    return p;
}

struct SolveOptions {
    double omega = 0.5;        // blend weight of the damped update
    int max_iters = 400;       // sweep budget per grid level
    double residual_tol = 1e-3;
    QuadratureSpec quad;       // r_max, angular resolution, mc seed
    InfOptions inf;            // start counts for cold minimizations
    int radial_panels = 20;    // outer-field panels per direction
    int gl_per_panel = 4;
    int anderson_window = 5;   // 0 disables the mixing accelerator
    bool cascadic = true;      // coarse-to-fine initialization
    int n_threads = 0;

    void validate() const {
        if (!(omega > 0.0) || omega > 1.0) {
            throw std::invalid_argument("SolveOptions: omega in (0, 1] required");
        }
        if (!(residual_tol > 0.0)) {
            throw std::invalid_argument("SolveOptions: residual_tol > 0 required");
        }
    }
};

struct SolveResult {
    GridFunction u;
    std::vector<double> residual_history;  // finest level, one entry per sweep
    int sweeps = 0;
    bool converged = false;
};

namespace detail {

/**
 * Discretization of one linear operator at one grid node, split as
 * F_M[u](x) = S - kappa u(x) with S independent of u(x):
 *  - inside |y| < rho (a fixed multiple of the grid cell, wide enough that
 *    no interpolation stencil reaches back to x) the second difference is
 *    replaced by the quadratic form of the discrete Hessian, integrated in
 *    closed form, because the raw interpolant's gradient kinks would
 *    otherwise feed the singular kernel;
 *  - outside, per-direction geometric Gauss-Legendre panels on
 *    [rho/|sqrt(M) w|, r_max] integrate the interpolant directly.
 * The split makes the node update u <- (phi + S)/(1 + kappa) well posed for
 * any s, where the explicit form would need a vanishing step size.
 */
struct HybridTerms {
    double S = 0.0;
    double kappa = 0.0;

    double value_at(double ux) const { return S - kappa * ux; }
};

struct NodeStencil {
    Matrix A;        // second-difference matrix with the -2u(x)/h^2 part removed
    double diag_w;   // 2/h^2: weight of u(x) inside each diagonal entry
};

/** Direction set and per-panel Gauss-Legendre data shared across nodes. */
struct SolverRules {
    std::vector<Vector> dirs;
    std::vector<double> wts;
    std::vector<double> gl_x;  // nodes on (0,1)
    std::vector<double> gl_w;  // weights summing to 1
    int panels = 0;
};

inline SolverRules make_solver_rules(int n, const SolveOptions& opts) {
    SolverRules r;
    AngularRule ang = (n == 2) ? circle_rule(std::max(8, opts.quad.n_angular))
                               : sphere3_rule(std::max(6, opts.quad.n_angular / 2),
                                              std::max(8, opts.quad.n_angular));
    r.dirs = ang.directions;
    r.wts = ang.weights;
    auto& gl = gauss_legendre(opts.gl_per_panel);
    for (int i = 0; i < opts.gl_per_panel; ++i) {
        r.gl_x.push_back(0.5 * (gl.nodes[i] + 1.0));
        r.gl_w.push_back(0.5 * gl.weights[i]);
    }
    r.panels = opts.radial_panels;
    return r;
}

inline NodeStencil node_stencil(const GridFunction& u, const std::vector<int>& idx) {
    const int n = u.n;
    const double hh = u.h();
    NodeStencil st;
    st.A = Matrix::Zero(n, n);
    st.diag_w = 2.0 / (hh * hh);
    Vector x = u.node(idx);
    for (int a = 0; a < n; ++a) {
        Vector xp = x, xm = x;
        xp[a] += hh;
        xm[a] -= hh;
        st.A(a, a) = (u.evaluate(xp) + u.evaluate(xm)) / (hh * hh);
        for (int b = a + 1; b < n; ++b) {
            Vector pp = x, mm = x, pm = x, mp = x;
            pp[a] += hh;
            pp[b] += hh;
            mm[a] -= hh;
            mm[b] -= hh;
            pm[a] += hh;
            pm[b] -= hh;
            mp[a] -= hh;
            mp[b] += hh;
            st.A(a, b) = st.A(b, a) =
                (u.evaluate(pp) + u.evaluate(mm) - u.evaluate(pm) - u.evaluate(mp)) /
                (4.0 * hh * hh);
        }
    }
    return st;
}

inline HybridTerms hybrid_eval(const GridFunction& u, const Vector& x, const NodeStencil& st,
                               const Matrix& sqrt_m, double s, double rho, double r_max,
                               const SolverRules& rules) {
    HybridTerms out;
    const double inner_expo = 2.0 - 2.0 * s;
    for (std::size_t i = 0; i < rules.dirs.size(); ++i) {
        Vector v = sqrt_m * rules.dirs[i];
        double a = v.norm();
        double rc = rho / a;
        double w = rules.wts[i];
        // model region [0, rc]: delta approximated by r^2 v^T H v
        double quad_form_A = v.dot(st.A * v);
        double inner_scale = std::pow(rc, inner_expo) / inner_expo;
        out.S += 0.5 * w * quad_form_A * inner_scale;
        out.kappa += 0.5 * w * st.diag_w * a * a * inner_scale;
        // outer region [rc, r_max]: direct quadrature of the interpolant
        if (rc < r_max) {
            double span = std::log(r_max / rc);
            double panel = span / rules.panels;
            double acc_s = 0.0, acc_k = 0.0;
            for (int p = 0; p < rules.panels; ++p) {
                for (std::size_t g = 0; g < rules.gl_x.size(); ++g) {
                    double lr = std::log(rc) + panel * (p + rules.gl_x[g]);
                    double r = std::exp(lr);
                    double wk = rules.gl_w[g] * panel * r * std::pow(r, -1.0 - 2.0 * s);
                    acc_s += wk * (u.evaluate(x + r * v) + u.evaluate(x - r * v));
                    acc_k += wk * 2.0;
                }
            }
            out.S += 0.5 * w * acc_s;
            out.kappa += 0.5 * w * acc_k;
        }
    }
    return out;
}

/** Node-local minimization state: optimizer parameters of the best slope
 *  matrix seen at this node, reused as the warm start next sweep. */
struct NodeState {
    Eigen::VectorXd warm;
    bool initialized = false;
    Matrix sqrt_m;  // argmin's square root, for frozen-matrix re-evaluation
};

/** For n = 2 the slope set is exactly {det M = 1/4}: parameters (p, alpha)
 *  give eigenvalues e^{\pm p}/2 in a frame rotated by alpha. */
inline Matrix sqrt_m_from_params2(const Eigen::VectorXd& th) {
    double p = th[0], al = th[1];
    double c = std::cos(al), sn = std::sin(al);
    double l1 = std::exp(0.5 * p) / std::sqrt(2.0), l2 = std::exp(-0.5 * p) / std::sqrt(2.0);
    Matrix r(2, 2);
    r << c, -sn, sn, c;
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = l1;
    d(1, 1) = l2;
    return r * d * r.transpose();
}

inline double params2_penalty(const Eigen::VectorXd& th) {
    double over = std::abs(th[0]) - 6.0;  // cond(M) cap e^12
    return over > 0.0 ? 1e4 * over * over : 0.0;
}

/** For n = 3, k = 2: generator route (3 raw eigenvalues + 3 angles). */
inline bool sqrt_m_from_params3(const Eigen::VectorXd& th, Matrix* sqrt_m, double* penalty) {
    EnvelopeMatrix m;
    if (!decode_point(th, 3, 2, false, 0.0, &m, penalty)) return false;
    const Vector& eig = m.M.eigenvalues();
    Vector root = eig.array().sqrt();
    *sqrt_m = m.M.eigenvectors() * root.asDiagonal() * m.M.eigenvectors().transpose();
    return true;
}

}  // namespace detail

/** Largest axis-neighbor difference quotient and largest axis second
 *  difference over h^2: the discrete Lipschitz and semiconcavity moduli. */
struct ModulusReport {
    double lipschitz_estimate = 0.0;
    double semiconcavity_estimate = 0.0;
};

inline ModulusReport modulus_report(const GridFunction& u) {
    ModulusReport rep;
    const int n = u.n;
    const int m = u.m;
    const double hh = u.h();
    std::size_t total = u.values.size();
    std::vector<int> idx(n, 0);
    for (std::size_t f = 0; f < total; ++f) {
        for (int a = 0; a < n; ++a) {
            std::vector<int> jdx = idx;
            if (idx[a] + 1 < m) {
                jdx[a] = idx[a] + 1;
                double quot = std::abs(u.values[u.flat(jdx)] - u.values[f]) / hh;
                rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, quot);
            }
            if (idx[a] >= 1 && idx[a] + 1 < m) {
                std::vector<int> pdx = idx, mdx = idx;
                pdx[a] = idx[a] + 1;
                mdx[a] = idx[a] - 1;
                double dd = (u.values[u.flat(pdx)] + u.values[u.flat(mdx)] - 2.0 * u.values[f]) /
                            (hh * hh);
                rep.semiconcavity_estimate = std::max(rep.semiconcavity_estimate, dd);
            }
        }
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[a] < m) break;
            idx[a] = 0;
        }
    }
    return rep;
}

namespace detail {

struct SweepOutcome {
    std::vector<double> u_new;
    double residual = 0.0;
};

/**
 * One Jacobi sweep: every interior node minimizes over slope matrices
 * against the frozen iterate, records its equation residual, and takes the
 * damped implicit update.  Face nodes stay pinned to phi.
 */
inline SweepOutcome sweep(const GridFunction& u, const TestFunctionProfile& phi, double s,
                          const SolveOptions& opts, const SolverRules& rules,
                          std::vector<NodeState>& states, bool cold) {
    const int n = u.n;
    const int m = u.m;
    const double rho = (std::sqrt(static_cast<double>(n)) + 0.1) * u.h();
    SweepOutcome out;
    out.u_new = u.values;
    const std::size_t total = u.values.size();
    std::vector<double> node_resid(total, 0.0);
    parallel_for(
        total,
        [&](std::size_t f) {
            std::vector<int> idx(n);
            std::size_t rem = f;
            for (int a = n - 1; a >= 0; --a) {
                idx[a] = static_cast<int>(rem % m);
                rem /= m;
            }
            for (int a = 0; a < n; ++a) {
                if (idx[a] == 0 || idx[a] == m - 1) {
                    out.u_new[f] = phi.evaluate(u.node(idx));
                    return;
                }
            }
            Vector x = u.node(idx);
            NodeStencil st = node_stencil(u, idx);
            double ux = u.values[f];
            NodeState& state = states[f];
            auto objective = [&](const Eigen::VectorXd& th) {
                if (n == 2) {
                    double pen = params2_penalty(th);
                    Matrix sm = sqrt_m_from_params2(th);
                    return hybrid_eval(u, x, st, sm, s, rho, opts.quad.r_max, rules)
                               .value_at(ux) +
                           pen;
                }
                Matrix sm;
                double pen = 0.0;
                if (!sqrt_m_from_params3(th, &sm, &pen)) return pen;
                return hybrid_eval(u, x, st, sm, s, rho, opts.quad.r_max, rules).value_at(ux);
            };
            NelderMeadOptions nm;
            nm.diameter_tol = 1e-5;
            Eigen::VectorXd best_x;
            double best_v = std::numeric_limits<double>::infinity();
            if (cold || !state.initialized) {
                nm.max_evals = 80;
                nm.initial_step = 0.3;
                std::vector<Eigen::VectorXd> starts;
                if (n == 2) {
                    Eigen::VectorXd t(2);
                    t << 0.0, 0.0;
                    starts.push_back(t);
                    t << 1.2, 0.0;
                    starts.push_back(t);
                    t << -1.2, 0.0;
                    starts.push_back(t);
                    t << 1.2, 0.7853981633974483;
                    starts.push_back(t);
                } else {
                    Eigen::VectorXd t = Eigen::VectorXd::Zero(6);
                    t.head(3).setOnes();
                    starts.push_back(t);
                    t << 0.2, 0.2, 2.0, 0.0, 0.0, 0.0;
                    starts.push_back(t);
                }
                if (state.initialized) starts.push_back(state.warm);
                for (const auto& st0 : starts) {
                    NelderMeadResult r = nelder_mead(objective, st0, nm);
                    if (r.value < best_v) {
                        best_v = r.value;
                        best_x = r.x;
                    }
                }
            } else {
                nm.max_evals = 24;
                nm.initial_step = 0.05;
                NelderMeadResult r = nelder_mead(objective, state.warm, nm);
                best_v = r.value;
                best_x = r.x;
            }
            state.warm = best_x;
            state.initialized = true;
            Matrix sm;
            if (n == 2) {
                sm = sqrt_m_from_params2(best_x);
            } else {
                double pen = 0.0;
                if (!sqrt_m_from_params3(best_x, &sm, &pen)) {
                    sm = Matrix::Identity(n, n) * std::sqrt(std::sqrt(1.0 / 3.0));
                }
            }
            state.sqrt_m = sm;
            HybridTerms t = hybrid_eval(u, x, st, sm, s, rho, opts.quad.r_max, rules);
            double phix = phi.evaluate(x);
            node_resid[f] = std::abs(t.value_at(ux) - (ux - phix));
            double implicit_target = (phix + t.S) / (1.0 + t.kappa);
            out.u_new[f] = (1.0 - opts.omega) * ux + opts.omega * implicit_target;
        },
        opts.n_threads);
    for (double r : node_resid) out.residual = std::max(out.residual, r);
    return out;
}

/** Equation residual of candidate values against the frozen per-node
 *  matrices, the cheap metric used to safeguard the mixing accelerator. */
inline double frozen_matrix_residual(const GridFunction& shape,
                                     const std::vector<double>& values,
                                     const TestFunctionProfile& phi, double s,
                                     const SolveOptions& opts, const SolverRules& rules,
                                     const std::vector<NodeState>& states) {
    GridFunction cand = shape;
    cand.values = values;
    const int n = cand.n;
    const int m = cand.m;
    const double rho = (std::sqrt(static_cast<double>(n)) + 0.1) * cand.h();
    const std::size_t total = values.size();
    std::vector<double> node_resid(total, 0.0);
    parallel_for(
        total,
        [&](std::size_t f) {
            std::vector<int> idx(n);
            std::size_t rem = f;
            for (int a = n - 1; a >= 0; --a) {
                idx[a] = static_cast<int>(rem % m);
                rem /= m;
            }
            for (int a = 0; a < n; ++a) {
                if (idx[a] == 0 || idx[a] == m - 1) return;
            }
            if (!states[f].initialized) return;
            Vector x = cand.node(idx);
            NodeStencil st = node_stencil(cand, idx);
            HybridTerms t =
                hybrid_eval(cand, x, st, states[f].sqrt_m, s, rho, opts.quad.r_max, rules);
            node_resid[f] = std::abs(t.value_at(values[f]) - (values[f] - phi.evaluate(x)));
        },
        opts.n_threads);
    double r = 0.0;
    for (double v : node_resid) r = std::max(r, v);
    return r;
}

/**
 * Anderson mixing over the sweep map, type II: least-squares combination of
 * recent update displacements.  Returns false when the history is too short
 * or the normal equations degenerate.
 */
inline bool anderson_candidate(const std::deque<Eigen::VectorXd>& du,
                               const std::deque<Eigen::VectorXd>& df,
                               const Eigen::VectorXd& u_vec, const Eigen::VectorXd& f_vec,
                               Eigen::VectorXd* mixed) {
    const int k = static_cast<int>(du.size());
    if (k == 0) return false;
    Eigen::MatrixXd F(f_vec.size(), k);
    Eigen::MatrixXd U(f_vec.size(), k);
    for (int j = 0; j < k; ++j) {
        F.col(j) = df[j];
        U.col(j) = du[j];
    }
    Eigen::MatrixXd gram = F.transpose() * F;
    for (int j = 0; j < k; ++j) gram(j, j) += 1e-12 * (1.0 + gram(j, j));
    Eigen::VectorXd gamma = gram.ldlt().solve(F.transpose() * f_vec);
    if (!gamma.allFinite()) return false;
    *mixed = u_vec + f_vec - (U + F) * gamma;
    return mixed->allFinite();
}

inline SolveResult solve_on_grid(const TestFunctionProfile& phi, double s, GridFunction u,
                                 const SolveOptions& opts, double tol,
                                 std::vector<NodeState>& states, bool record_history) {
    SolverRules rules = make_solver_rules(u.n, opts);
    SolveResult res;
    double best_residual = std::numeric_limits<double>::infinity();
    std::deque<Eigen::VectorXd> du_hist, df_hist;
    Eigen::VectorXd prev_u, prev_f;
    bool have_prev = false;
    for (int it = 0; it < opts.max_iters; ++it) {
        bool cold = (it == 0);
        SweepOutcome sw = sweep(u, phi, s, opts, rules, states, cold);
        if (record_history) res.residual_history.push_back(sw.residual);
        ++res.sweeps;
        best_residual = std::min(best_residual, sw.residual);
        if (sw.residual <= tol) {
            res.converged = true;
            break;
        }
        if (sw.residual > 10.0 * best_residual && it > 5) {
            throw Diverged("solve_global: residual grew 10x above its running minimum");
        }
        Eigen::VectorXd u_vec = Eigen::Map<const Eigen::VectorXd>(
            u.values.data(), static_cast<Eigen::Index>(u.values.size()));
        Eigen::VectorXd g_vec = Eigen::Map<const Eigen::VectorXd>(
            sw.u_new.data(), static_cast<Eigen::Index>(sw.u_new.size()));
        Eigen::VectorXd f_vec = g_vec - u_vec;
        if (have_prev && opts.anderson_window > 0) {
            du_hist.push_back(u_vec - prev_u);
            df_hist.push_back(f_vec - prev_f);
            while (static_cast<int>(du_hist.size()) > opts.anderson_window) {
                du_hist.pop_front();
                df_hist.pop_front();
            }
        }
        prev_u = u_vec;
        prev_f = f_vec;
        have_prev = true;
        std::vector<double> chosen = sw.u_new;
        if (opts.anderson_window > 0 && !du_hist.empty()) {
            Eigen::VectorXd mixed;
            if (anderson_candidate(du_hist, df_hist, u_vec, f_vec, &mixed)) {
                std::vector<double> mixed_vals(mixed.data(), mixed.data() + mixed.size());
                double r_plain =
                    frozen_matrix_residual(u, sw.u_new, phi, s, opts, rules, states);
                double r_mixed =
                    frozen_matrix_residual(u, mixed_vals, phi, s, opts, rules, states);
                if (r_mixed < r_plain) {
                    chosen = mixed_vals;
                } else {
                    du_hist.clear();  // mixing unhelpful here; restart its history
                    df_hist.clear();
                }
            }
        }
        u.values = chosen;
    }
    res.u = u;
    return res;
}

}  // namespace detail

/**
 * Damped fixed-point solution of the global equation: the nonlinear
 * operator of u equals u - phi, with u identical to phi outside the box.
 * Sweeps are Jacobi (all nodes update against the frozen iterate, so runs
 * are reproducible for any thread count), each node taking the implicit
 * update u <- (1-omega) u + omega (phi + S)/(1 + kappa) at its currently
 * optimal slope matrix.  Coarse-to-fine initialization and safeguarded
 * Anderson mixing keep the sweep count practical; both leave the fixed
 * point unchanged.
 */
inline SolveResult solve_global(const TestFunctionProfile& phi, int k, double s, int n,
                                double R, int m, const SolveOptions& opts) {
    opts.validate();
    if (!(s > 0.5) || !(s < 1.0)) throw SOutOfRange("solve_global: s in (1/2, 1) required");
    if (n == 2) {
        if (k != 2) throw std::invalid_argument("solve_global: n = 2 requires k = 2");
    } else if (n == 3) {
        if (k != 2) throw std::invalid_argument("solve_global: n = 3 requires k = 2");
        if (m > 24) {
            throw std::invalid_argument("solve_global: n = 3 supported at m <= 24 only");
        }
    } else {
        throw std::invalid_argument("solve_global: n in {2, 3} only");
    }
    std::vector<int> levels{m};
    if (opts.cascadic) {
        while (levels.front() > 20) {
            levels.insert(levels.begin(), (levels.front() + 1) / 2);
        }
    }
    GridFunction u = make_grid(phi, n, R, levels.front());
    SolveResult final_res;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        int ml = levels[li];
        if (li > 0) {
            GridFunction fine = make_grid(phi, n, R, ml);
            std::vector<int> idx(n, 0);
            for (std::size_t f = 0; f < fine.values.size(); ++f) {
                bool face = false;
                for (int a = 0; a < n; ++a) face = face || idx[a] == 0 || idx[a] == ml - 1;
                if (!face) fine.values[f] = u.evaluate(fine.node(idx));
                for (int a = n - 1; a >= 0; --a) {
                    if (++idx[a] < ml) break;
                    idx[a] = 0;
                }
            }
            u = fine;
        }
        std::vector<detail::NodeState> states(u.values.size());
        bool finest = li + 1 == levels.size();
        double tol = finest ? opts.residual_tol
                            : opts.residual_tol * static_cast<double>(1 << (levels.size() - 1 - li));
        SolveResult level_res =
            detail::solve_on_grid(phi, s, std::move(u), opts, tol, states, finest);
        u = std::move(level_res.u);
        if (finest) {
            final_res = std::move(level_res);
        }
    }
    final_res.u = std::move(u);
    return final_res;
}

/**
 * Equation residual with a fresh cold minimization at every interior node:
 * sup over nodes of |F[u](x) - u(x) + phi(x)| in the solver's own
 * discretization.
 */
inline double residual(const GridFunction& u, const TestFunctionProfile& phi, int k, double s,
                       const SolveOptions& opts) {
    (void)k;
    detail::SolverRules rules = detail::make_solver_rules(u.n, opts);
    std::vector<detail::NodeState> states(u.values.size());
    detail::SweepOutcome sw = detail::sweep(u, phi, s, opts, rules, states, true);
    return sw.residual;
}

/**
 * Persists grid + metadata as three sibling artifacts: <prefix>.json header,
 * <prefix>.csv node table (coordinates then value), <prefix>.bin raw values
 * (little-endian doubles, row-major).
 */
inline void save_grid(const std::string& prefix, const GridFunction& u, int k, double s,
                      std::uint64_t seed) {
    JsonWriter jw;
    jw.begin_object();
    jw.kv("version", kVersion);
    jw.kv("n", u.n);
    jw.kv("R", u.R);
    jw.kv("m", u.m);
    jw.kv("s", s);
    jw.kv("k", k);
    jw.kv("phi_name", u.fallback.name);
    jw.kv("seed", static_cast<unsigned long long>(seed));
    jw.kv("value_count", static_cast<unsigned long long>(u.values.size()));
    jw.end_object();
    std::ofstream jf(prefix + ".json");
    jf << jw.str();

    std::ofstream cf(prefix + ".csv");
    for (int a = 0; a < u.n; ++a) cf << "x" << a << ",";
    cf << "value\n";
    std::vector<int> idx(u.n, 0);
    for (std::size_t f = 0; f < u.values.size(); ++f) {
        Vector x = u.node(idx);
        for (int a = 0; a < u.n; ++a) cf << JsonWriter::format_double(x[a]) << ",";
        cf << JsonWriter::format_double(u.values[f]) << "\n";
        for (int a = u.n - 1; a >= 0; --a) {
            if (++idx[a] < u.m) break;
            idx[a] = 0;
        }
    }

    std::ofstream bf(prefix + ".bin", std::ios::binary);
    bf.write(reinterpret_cast<const char*>(u.values.data()),
             static_cast<std::streamsize>(u.values.size() * sizeof(double)));
}

}  // namespace fkh
