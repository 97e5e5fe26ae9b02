#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fkh/errors.hpp"
#include "fkh/symcone.hpp"

namespace fkh {

/**
 * Slope matrix M = Df_k(B) of the k-Hessian value f_k at a cone interior
 * point B, together with its generator.  M is positive definite, and
 * trace(M * A) >= f_k(A) for every A in the cone with equality at A = B
 * (concavity of f_k makes each M a supporting slope, and f_k the infimum
 * of the traces).
 */
struct EnvelopeMatrix {
    SymMatrix M;
    SymMatrix source_B;        // rescaled so sigma_k(eig) = 1
    int k = 1;
    Vector sqrt_inv_eigs;      // eigenvalues of M^{-1/2}, ascending

    int dim() const { return M.dim(); }
};

/** Orthogonal matrix from the QR of a Gaussian draw, sign-fixed (det of R
 *  diagonal forced positive) so the result is a deterministic map of the
 *  generator state. */
inline Matrix random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    return q;
}

/**
 * The derivative map B -> M(B) = Df_k(B), computed in B's eigenframe.
 * After rescaling to f_k(B) = 1 the eigenvalues of M are
 * eta_i = (1/k) * sigma_{k-1}(eigenvalues with index i removed); rotating
 * back by B's eigenvectors gives M.  The map is homogeneous of degree zero,
 * so the rescaling does not change the result.
 */
inline EnvelopeMatrix dfk(const SymMatrix& b, int k) {
    const int n = b.dim();
    if (k < 1 || k > n) throw std::invalid_argument("dfk: k out of [1, n]");
    if (!in_gamma_k(b.eigenvalues(), k)) {
        throw ConeViolation("dfk: generator eigenvalues outside the open cone");
    }
    const double fk = f_k(b, k);
    SymMatrix bn(b.matrix() / fk);
    const Vector& mu = bn.eigenvalues();
    Vector eta(n);
    Vector reduced(n - 1);
    for (int i = 0; i < n; ++i) {
        int t = 0;
        for (int j = 0; j < n; ++j) {
            if (j != i) reduced[t++] = mu[j];
        }
        eta[i] = elementary_symmetric(reduced, k - 1) / k;
        if (!(eta[i] > 0.0)) {
            throw Error("dfk: nonpositive slope eigenvalue (numerical cone boundary)");
        }
    }
    const Matrix& q = bn.eigenvectors();
    EnvelopeMatrix out;
    out.M = SymMatrix(q * eta.asDiagonal() * q.transpose());
    out.source_B = bn;
    out.k = k;
    Vector lam(n);
    for (int i = 0; i < n; ++i) lam[i] = 1.0 / std::sqrt(eta[i]);
    std::sort(lam.data(), lam.data() + n);
    out.sqrt_inv_eigs = lam;
    return out;
}

/**
 * Finite-difference derivative of f_k at B: central differences in each
 * symmetrized coordinate direction, step h.  Test oracle for dfk; the
 * off-diagonal probe B + h*E_ij symmetrizes to B + (h/2)(E_ij + E_ji), which
 * makes the plain difference quotient equal M_ij directly.
 */
inline Matrix dfk_fd(const SymMatrix& b, int k, double h = 1e-5) {
    const int n = b.dim();
    Matrix out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            Matrix bp = b.matrix();
            Matrix bm = b.matrix();
            bp(i, j) += h;
            bm(i, j) -= h;
            double fp = f_k(SymMatrix(bp), k);
            double fm = f_k(SymMatrix(bm), k);
            out(i, j) = out(j, i) = (fp - fm) / (2.0 * h);
        }
    }
    return out;
}

/** Closed-form slope for k = 2: M = (trace(B) I - B) / (2 f_2(B)).
 *  Off-diagonal entries are -b_ij / (2 f_2(B)), sign included. */
inline Matrix dfk_closed_k2(const SymMatrix& b) {
    const int n = b.dim();
    double f2 = f_k(b, 2);
    if (!(f2 > 0.0)) throw ConeViolation("dfk_closed_k2: f_2(B) not positive");
    return (b.matrix().trace() * Matrix::Identity(n, n) - b.matrix()) / (2.0 * f2);
}

/** Closed-form slope for k = n: M = f_n(B) B^{-1} / n, so det M = n^{-n}. */
inline Matrix dfk_closed_kn(const SymMatrix& b) {
    const int n = b.dim();
    double fn = f_k(b, n);
    if (!(fn > 0.0)) throw ConeViolation("dfk_closed_kn: det(B) not positive");
    return fn * b.matrix().inverse() / n;
}

/**
 * trace(M(B) * A) - f_k(A): the amount by which the supporting slope at B
 * overshoots the value at A.  Nonnegative on the cone, zero when B is a
 * positive multiple of A.
 */
inline double envelope_gap(const SymMatrix& a, const SymMatrix& b, int k) {
    EnvelopeMatrix m = dfk(b, k);
    return (m.M.matrix() * a.matrix()).trace() - f_k(a, k);
}

/**
 * Rejection sample of an eigenvalue vector from the open cone, normalized to
 * sigma_k = 1.  Components drawn uniformly from [box_lo, box_hi] (the default
 * box reaches negative values, which the cone admits for k < n).
 */
inline Vector sample_cone_vector(int n, int k, std::mt19937_64& rng, double box_lo = -1.0,
                                 double box_hi = 3.0, int max_tries = 100000) {
    std::uniform_real_distribution<double> unif(box_lo, box_hi);
    for (int t = 0; t < max_tries; ++t) {
        Vector sigma(n);
        for (int i = 0; i < n; ++i) sigma[i] = unif(rng);
        if (!in_gamma_k(sigma, k)) continue;
        double sk = elementary_symmetric(sigma, k);
        return sigma / std::pow(sk, 1.0 / k);
    }
    throw SamplingExhausted("sample_cone_vector: rejection cap reached");
}

/**
 * count random members of the slope set: B = Q diag(sigma) Q^T with sigma
 * from the cone (normalized) and Q random orthogonal, mapped through dfk.
 */
inline std::vector<EnvelopeMatrix> sample_Mk(int k, int n, int count, std::mt19937_64& rng) {
    if (count < 1) throw std::invalid_argument("sample_Mk: count >= 1 required");
    std::vector<EnvelopeMatrix> out;
    out.reserve(count);
    for (int c = 0; c < count; ++c) {
        Vector sigma = sample_cone_vector(n, k, rng);
        Matrix q = random_orthogonal(n, rng);
        SymMatrix b(q * sigma.asDiagonal() * q.transpose());
        out.push_back(dfk(b, k));
    }
    return out;
}

}  // namespace fkh
