#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fkh/errors.hpp"

namespace fkh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Elementary symmetric polynomials e_0..e_max_order of the entries of lambda,
 * computed by the characteristic-polynomial coefficient recurrence
 * e_l <- e_l + lambda_i * e_{l-1}.  O(n * max_order), numerically stable for
 * the small dimensions used here.
 */
inline std::vector<double> elementary_symmetric_all(const Vector& lambda, int max_order) {
    const int n = static_cast<int>(lambda.size());
    if (max_order < 0 || max_order > n) {
        throw std::invalid_argument("elementary_symmetric: order out of [0, n]");
    }
    std::vector<double> e(max_order + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        int top = std::min(i + 1, max_order);
        for (int l = top; l >= 1; --l) e[l] += lambda[i] * e[l - 1];
    }
    return e;
}

/** sigma_l(lambda), the l-th elementary symmetric polynomial. */
inline double elementary_symmetric(const Vector& lambda, int l) {
    return elementary_symmetric_all(lambda, l)[l];
}

/**
 * Eigenvalue vector with all elementary symmetric values cached and a strict
 * cone-membership tag (sigma_l > 0 for l = 1..k, no tolerance).
 */
struct ConeVector {
    Vector lambda;
    std::vector<double> sigmas;  // sigmas[l] = sigma_l, l = 0..n
    int k = 1;
    bool in_cone = false;

    ConeVector(const Vector& lam, int k_) : lambda(lam), k(k_) {
        const int n = static_cast<int>(lam.size());
        if (k < 1 || k > n) throw std::invalid_argument("ConeVector: k out of [1, n]");
        sigmas = elementary_symmetric_all(lam, n);
        in_cone = true;
        for (int l = 1; l <= k; ++l) {
            if (!(sigmas[l] > 0.0)) in_cone = false;
        }
    }
};

/** Strict membership of lambda in the cone {sigma_l > 0 for l = 1..k}. */
inline bool in_gamma_k(const Vector& lambda, int k) {
    const int n = static_cast<int>(lambda.size());
    if (k < 1 || k > n) throw std::invalid_argument("in_gamma_k: k out of [1, n]");
    auto e = elementary_symmetric_all(lambda, k);
    for (int l = 1; l <= k; ++l) {
        if (!(e[l] > 0.0)) return false;
    }
    return true;
}

/**
 * Symmetric matrix with a cached eigendecomposition.  Construction
 * symmetrizes the input ((A + A^T)/2), so the stored entries are exactly
 * symmetric; eigenvalues are ascending (Eigen's deterministic order).
 */
class SymMatrix {
 public:
    SymMatrix() = default;

    explicit SymMatrix(const Matrix& a) {
        if (a.rows() != a.cols() || a.rows() == 0) {
            throw std::invalid_argument("SymMatrix: square nonempty matrix required");
        }
        entries_ = 0.5 * (a + a.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(entries_);
        if (es.info() != Eigen::Success) throw Error("SymMatrix: eigendecomposition failed");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
    }

    static SymMatrix diagonal(const Vector& d) {
        return SymMatrix(Matrix(d.asDiagonal()));
    }

    static SymMatrix identity(int n) {
        return SymMatrix(Matrix::Identity(n, n));
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& matrix() const { return entries_; }
    const Vector& eigenvalues() const { return eigenvalues_; }      // ascending
    const Matrix& eigenvectors() const { return eigenvectors_; }    // columns match eigenvalues
    double operator()(int i, int j) const { return entries_(i, j); }
    double frobenius() const { return entries_.norm(); }

 private:
    Matrix entries_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
};

/**
 * f_k(A) = sigma_k(eigenvalues)^(1/k), defined on the closed cone.  Rejects
 * matrices whose eigenvalues leave the closure: sigma_l < -tol_l for some
 * l <= k, with tol_l = 1e-12 * ||A||_F^l (degree-matched scaling).
 */
inline double f_k(const SymMatrix& a, int k) {
    const int n = a.dim();
    if (k < 1 || k > n) throw std::invalid_argument("f_k: k out of [1, n]");
    auto e = elementary_symmetric_all(a.eigenvalues(), k);
    const double scale = std::max(a.frobenius(), 1e-300);
    double tol = 1e-12;
    for (int l = 1; l <= k; ++l) {
        tol *= scale;
        if (e[l] < -tol) {
            throw ConeViolation("f_k: eigenvalues outside the closed cone (sigma_" +
                                std::to_string(l) + " < 0)");
        }
    }
    double sk = std::max(e[k], 0.0);
    return std::pow(sk, 1.0 / k);
}

/** f_k on an eigenvalue vector already known to lie in the closed cone. */
inline double f_k_from_eigs(const Vector& lambda, int k) {
    double sk = std::max(elementary_symmetric(lambda, k), 0.0);
    return std::pow(sk, 1.0 / k);
}

}  // namespace fkh
