#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fasth/matrix.hpp"

namespace fasth {

/// Vectors with ||v||^2 at or below this are rejected outright; silently
/// treating them as identity factors would corrupt gradient bookkeeping.
inline constexpr double kDegeneracyThreshold = 1e-30;

/// A reflection vector v defining H = I - 2 v v^T / ||v||^2. The squared norm
/// is cached at construction.
class HouseholderVector {
public:
    explicit HouseholderVector(std::vector<double> v) : v_(std::move(v)) {
        double s = 0.0;
        for (double x : v_) {
            if (!std::isfinite(x))
                throw Error("HouseholderVector: non-finite entry");
            s += x * x;
        }
        if (s <= kDegeneracyThreshold)
            throw DegenerateVectorError("HouseholderVector: ||v||^2 = " + std::to_string(s) +
                                        " below degeneracy threshold");
        norm_sq_ = s;
    }

    std::size_t dim() const { return v_.size(); }
    double norm_sq() const { return norm_sq_; }
    const std::vector<double>& coeffs() const { return v_; }
    double operator[](std::size_t i) const { return v_[i]; }

private:
    std::vector<double> v_;
    double norm_sq_ = 0.0;
};

/// Ordered factors v_1..v_n representing the product H_1 H_2 ... H_n.
/// Applying the chain to X computes H_1 (H_2 (... (H_n X))).
class HouseholderChain {
public:
    explicit HouseholderChain(std::size_t dim) : dim_(dim) {}

    HouseholderChain(std::size_t dim, std::vector<HouseholderVector> vectors)
        : dim_(dim), vectors_(std::move(vectors)) {
        for (const auto& v : vectors_)
            if (v.dim() != dim_)
                throw DimensionError("HouseholderChain: vector length " + std::to_string(v.dim()) +
                                     " != dim " + std::to_string(dim_));
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool empty() const { return vectors_.empty(); }
    const HouseholderVector& operator[](std::size_t i) const { return vectors_[i]; }
    const std::vector<HouseholderVector>& vectors() const { return vectors_; }

    void push_back(HouseholderVector v) {
        if (v.dim() != dim_)
            throw DimensionError("HouseholderChain::push_back: wrong length");
        vectors_.push_back(std::move(v));
    }

    /// Same factors in reverse order: represents the transpose of the chain's
    /// product, since each H_i is symmetric.
    HouseholderChain reversed() const {
        HouseholderChain r(dim_);
        r.vectors_.assign(vectors_.rbegin(), vectors_.rend());
        return r;
    }

private:
    std::size_t dim_;
    std::vector<HouseholderVector> vectors_;
};

/// (I - 2 v v^T / ||v||^2) X, computed as X - (2/||v||^2) v (v^T X).
/// O(dm) flops; X is not modified.
inline Matrix householder_apply_left(const HouseholderVector& v, const Matrix& X) {
    const std::size_t d = v.dim();
    const std::size_t m = X.cols();
    if (X.rows() != d)
        throw DimensionError("householder_apply_left: X has " + std::to_string(X.rows()) +
                             " rows, vector length " + std::to_string(d));
    const double scale = 2.0 / v.norm_sq();
    std::vector<double> t(m, 0.0); // v^T X
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = v[i];
        const double* xi = X.row_ptr(i);
        for (std::size_t l = 0; l < m; ++l) t[l] += vi * xi[l];
    }
    Matrix out(d, m);
    for (std::size_t i = 0; i < d; ++i) {
        const double c = scale * v[i];
        const double* xi = X.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (std::size_t l = 0; l < m; ++l) oi[l] = xi[l] - c * t[l];
    }
    return out;
}

/// In-place variant used by the hot loops.
inline void householder_apply_left_inplace(const HouseholderVector& v, Matrix& X) {
    const std::size_t d = v.dim();
    const std::size_t m = X.cols();
    if (X.rows() != d)
        throw DimensionError("householder_apply_left_inplace: row mismatch");
    const double scale = 2.0 / v.norm_sq();
    std::vector<double> t(m, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = v[i];
        const double* xi = X.row_ptr(i);
        for (std::size_t l = 0; l < m; ++l) t[l] += vi * xi[l];
    }
    for (std::size_t i = 0; i < d; ++i) {
        const double c = scale * v[i];
        double* xi = X.row_ptr(i);
        for (std::size_t l = 0; l < m; ++l) xi[l] -= c * t[l];
    }
}

/// H_1 ... H_n X applied factor-at-a-time from H_n inward. The sequential
/// baseline; also the correctness oracle for the blocked path.
inline Matrix chain_apply_sequential(const HouseholderChain& chain, const Matrix& X) {
    if (X.rows() != chain.dim())
        throw DimensionError("chain_apply_sequential: X has wrong row count");
    Matrix a = X;
    for (std::size_t k = chain.size(); k-- > 0;)
        householder_apply_left_inplace(chain[k], a);
    return a;
}

/// Materializes H_1 ... H_n as a dense d x d matrix (test/baseline use only).
inline Matrix chain_to_dense(const HouseholderChain& chain) {
    return chain_apply_sequential(chain, Matrix::identity(chain.dim()));
}

/// Gradient of a loss L wrt the reflection vector, given A_next = H^T A and
/// G = dL/dA, summed over the mini-batch columns:
///   -(2/||v||^2) sum_l [ (v^T a_l) g_l + (v^T g_l) a_l
///                        - (2/||v||^2)(v^T a_l)(v^T g_l) v ].
inline std::vector<double> householder_grad(const HouseholderVector& v, const Matrix& A_next,
                                            const Matrix& G) {
    const std::size_t d = v.dim();
    const std::size_t m = A_next.cols();
    if (A_next.rows() != d || G.rows() != d || G.cols() != m)
        throw DimensionError("householder_grad: shape mismatch");
    const double scale = 2.0 / v.norm_sq();

    std::vector<double> alpha(m, 0.0); // v^T a_l
    std::vector<double> beta(m, 0.0);  // v^T g_l
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = v[i];
        const double* ai = A_next.row_ptr(i);
        const double* gi = G.row_ptr(i);
        for (std::size_t l = 0; l < m; ++l) {
            alpha[l] += vi * ai[l];
            beta[l] += vi * gi[l];
        }
    }
    double ab = 0.0;
    for (std::size_t l = 0; l < m; ++l) ab += alpha[l] * beta[l];

    std::vector<double> grad(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double* ai = A_next.row_ptr(i);
        const double* gi = G.row_ptr(i);
        double acc = 0.0;
        for (std::size_t l = 0; l < m; ++l) acc += alpha[l] * gi[l] + beta[l] * ai[l];
        grad[i] = -scale * (acc - scale * ab * v[i]);
    }
    return grad;
}

} // namespace fasth
