#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fasth/fasth.hpp"
#include "fasth/householder.hpp"
#include "fasth/matrix.hpp"

namespace fasth::reference {

/// Backward half of the factor-at-a-time baseline: walks the factors from
/// H_1 inward, reconstructing activations via A_{j+1} = H_j^T A_j instead of
/// storing them, so memory stays O(dm). Uses the identical gradient kernel as
/// the blocked path so any discrepancy isolates the blocking logic.
inline BackwardResult sequential_backward(const HouseholderChain& chain, const Matrix& output,
                                          const Matrix& grad_output) {
    if (output.rows() != chain.dim() || !grad_output.same_shape(output))
        throw DimensionError("sequential_backward: shape mismatch");
    BackwardResult res;
    const std::size_t n = chain.size();
    res.grad_vectors.resize(n);
    Matrix a = output;      // A_1
    Matrix g = grad_output; // dL/dA_1
    for (std::size_t j = 0; j < n; ++j) {
        const HouseholderVector& v = chain[j];
        householder_apply_left_inplace(v, a); // A_{j+1} = H_j^T A_j
        res.grad_vectors[j] = householder_grad(v, a, g);
        householder_apply_left_inplace(v, g); // dL/dA_{j+1}
    }
    res.grad_input = std::move(g);
    return res;
}

/// Factor-at-a-time forward and backward, no blocking, single-threaded.
inline std::pair<Matrix, BackwardResult> sequential_forward_backward(const HouseholderChain& chain,
                                                                     const Matrix& X,
                                                                     const Matrix& grad_output) {
    if (X.rows() != chain.dim())
        throw DimensionError("sequential_forward_backward: X row count != chain dim");
    Matrix output = chain_apply_sequential(chain, X);
    BackwardResult res = sequential_backward(chain, output, grad_output);
    return {std::move(output), std::move(res)};
}

/// The O(d^3) materialize-then-multiply route. Comparator only, never a
/// production path.
inline Matrix dense_parallel_forward(const HouseholderChain& chain, const Matrix& X) {
    if (X.rows() != chain.dim())
        throw DimensionError("dense_parallel_forward: X row count != chain dim");
    if (chain.empty()) return X;
    return matmul(chain_to_dense(chain), X);
}

} // namespace fasth::reference
