#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fasth/fasth.hpp"
#include "fasth/matrix.hpp"
#include "fasth/svd_layer.hpp"

namespace fasth {

// Counter of scalar reads/writes on the sigma array, for the O(min-dim) cost
// property. Thread-local so concurrent tests do not interfere.
namespace detail {
inline thread_local std::size_t sigma_touches = 0;
}

inline void reset_sigma_touch_count() { detail::sigma_touches = 0; }
inline std::size_t sigma_touch_count() { return detail::sigma_touches; }

namespace detail {

inline void require_square(const SvdParam& p, const char* op) {
    if (p.out_dim != p.in_dim)
        throw DimensionError(std::string(op) + ": requires a square parameter");
}

/// Symmetric eigendecomposition form W = U Sigma U^T: a single chain stored
/// in U, V empty, sigma signs unconstrained.
inline void require_symmetric_form(const SvdParam& p, const char* op) {
    require_square(p, op);
    if (!p.V.empty())
        throw Error(std::string(op) + ": expects symmetric form (empty V chain)");
}

/// U diag(f(sigma)) U^T X for the symmetric form.
template <typename F>
Matrix two_sided_apply(const SvdParam& p, const Matrix& X, std::size_t block_width, F&& f) {
    Matrix t = fasth_forward(p.U.reversed(), X, block_width).output(); // U^T X
    for (std::size_t i = 0; i < p.sigma.size(); ++i) {
        const double s = f(p.sigma[i]);
        ++sigma_touches;
        double* row = t.row_ptr(i);
        for (std::size_t l = 0; l < t.cols(); ++l) row[l] *= s;
    }
    return fasth_forward(p.U, t, block_width).output();
}

} // namespace detail

/// sum_i ln |sigma_i| for square parameters; |det U| = |det V| = 1.
inline double log_abs_det(const SvdParam& p) {
    detail::require_square(p, "log_abs_det");
    double acc = 0.0;
    for (double s : p.sigma) {
        ++detail::sigma_touches;
        if (s == 0.0) throw SingularMatrixError("log_abs_det: zero singular value");
        acc += std::log(std::fabs(s));
    }
    return acc;
}

/// W^{-1} X = V (Sigma^{-1} (U^T X)), never materializing W or its inverse.
inline Matrix apply_inverse(const SvdParam& p, const Matrix& X, std::size_t block_width) {
    detail::require_square(p, "apply_inverse");
    if (X.rows() != p.out_dim)
        throw DimensionError("apply_inverse: X row count mismatch");
    for (double s : p.sigma) {
        ++detail::sigma_touches;
        if (s == 0.0) throw SingularMatrixError("apply_inverse: zero singular value");
    }
    Matrix t = fasth_forward(p.U.reversed(), X, block_width).output();
    for (std::size_t i = 0; i < p.sigma.size(); ++i) {
        const double inv = 1.0 / p.sigma[i];
        ++detail::sigma_touches;
        double* row = t.row_ptr(i);
        for (std::size_t l = 0; l < t.cols(); ++l) row[l] *= inv;
    }
    return fasth_forward(p.V, t, block_width).output();
}

/// max_i |sigma_i|, exact and O(min-dim). 0 for an empty sigma.
inline double largest_singular_value(const SvdParam& p) {
    double best = 0.0;
    for (double s : p.sigma) {
        ++detail::sigma_touches;
        best = std::max(best, std::fabs(s));
    }
    return best;
}

/// e^W X = U e^Sigma U^T X for the symmetric form W = U Sigma U^T.
inline Matrix apply_exponential(const SvdParam& p_sym, const Matrix& X, std::size_t block_width) {
    detail::require_symmetric_form(p_sym, "apply_exponential");
    if (X.rows() != p_sym.out_dim)
        throw DimensionError("apply_exponential: X row count mismatch");
    return detail::two_sided_apply(p_sym, X, block_width, [](double s) { return std::exp(s); });
}

/// (I - W)(I + W)^{-1} X = U diag((1 - s)/(1 + s)) U^T X for the symmetric
/// form. sigma = -1 is a pole.
inline Matrix apply_cayley(const SvdParam& p_sym, const Matrix& X, std::size_t block_width) {
    detail::require_symmetric_form(p_sym, "apply_cayley");
    if (X.rows() != p_sym.out_dim)
        throw DimensionError("apply_cayley: X row count mismatch");
    for (double s : p_sym.sigma) {
        ++detail::sigma_touches;
        if (s == -1.0) throw Error("apply_cayley: sigma = -1 pole");
    }
    return detail::two_sided_apply(p_sym, X, block_width,
                                   [](double s) { return (1.0 - s) / (1.0 + s); });
}

/// ||W||_F^2 = sum sigma_i^2.
inline double frobenius_sq(const SvdParam& p) {
    double acc = 0.0;
    for (double s : p.sigma) {
        ++detail::sigma_touches;
        acc += s * s;
    }
    return acc;
}

/// Zeroes all but the k largest-|sigma| entries (chains untouched), yielding
/// the best rank-k approximation of W in Frobenius norm. Selection is
/// introselect (std::nth_element); ties keep the lower index.
inline SvdParam truncate_rank(const SvdParam& p, std::size_t k) {
    const std::size_t n = p.sigma.size();
    if (k < 1 || k > n)
        throw Error("truncate_rank: k outside [1, " + std::to_string(n) + "]");
    SvdParam out = p;
    if (k == n) return out;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto keep_before = [&](std::size_t a, std::size_t b) {
        ++detail::sigma_touches;
        const double fa = std::fabs(p.sigma[a]);
        const double fb = std::fabs(p.sigma[b]);
        return fa > fb || (fa == fb && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k) - 1, idx.end(),
                     keep_before);
    for (std::size_t i = k; i < n; ++i) {
        out.sigma[idx[i]] = 0.0;
        ++detail::sigma_touches;
    }
    return out;
}

/// W^+ X = V Sigma^+ U^T X with Sigma^+ reciprocating entries whose magnitude
/// exceeds tol and zeroing the rest. Rectangular parameters allowed.
inline Matrix apply_pseudo_inverse(const SvdParam& p, const Matrix& X, double tol,
                                   std::size_t block_width) {
    if (tol < 0.0) throw Error("apply_pseudo_inverse: negative tolerance");
    if (X.rows() != p.out_dim)
        throw DimensionError("apply_pseudo_inverse: X row count mismatch");
    Matrix t = fasth_forward(p.U.reversed(), X, block_width).output(); // U^T X, out_dim rows
    Matrix t2(p.in_dim, X.cols());
    for (std::size_t i = 0; i < p.min_dim(); ++i) {
        const double s = p.sigma[i];
        ++detail::sigma_touches;
        const double r = std::fabs(s) > tol ? 1.0 / s : 0.0;
        const double* src = t.row_ptr(i);
        double* dst = t2.row_ptr(i);
        for (std::size_t l = 0; l < X.cols(); ++l) dst[l] = r * src[l];
    }
    return fasth_forward(p.V, t2, block_width).output();
}

/// max |sigma| / min |sigma|.
inline double condition_number(const SvdParam& p) {
    if (p.sigma.empty()) throw Error("condition_number: empty sigma");
    double lo = std::fabs(p.sigma.front());
    double hi = lo;
    for (double s : p.sigma) {
        ++detail::sigma_touches;
        const double a = std::fabs(s);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    if (lo == 0.0) throw SingularMatrixError("condition_number: zero singular value");
    return hi / lo;
}

} // namespace fasth
