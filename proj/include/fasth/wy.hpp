#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fasth/householder.hpp"
#include "fasth/matrix.hpp"
#include "fasth/parallel.hpp"

namespace fasth {

/// Compact representation I - 2 W Y^T of a product of `width` Householder
/// matrices. Column j of W and Y corresponds to the j-th source factor.
/// The source vectors are kept alongside (W, Y); the backward pass needs them.
struct WYBlock {
    std::size_t dim = 0;
    std::size_t width = 0;
    Matrix W; // d x width
    Matrix Y; // d x width
    std::vector<HouseholderVector> source_vectors;
    std::size_t sequential_steps = 0; // instrumentation: Householder applications used to build W, Y
};

/// Ordered WY blocks P_1..P_q covering a Householder chain. Every block has
/// width `block_width` except possibly the last.
struct CompactedChain {
    std::size_t dim = 0;
    std::size_t block_width = 0;
    std::vector<WYBlock> blocks;

    std::size_t factor_count() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.width;
        return n;
    }

    /// Sequential stages spent in compaction under the counting model where
    /// concurrent block builds count once: the widest block's step count.
    std::size_t compaction_stages() const {
        std::size_t s = 0;
        for (const auto& b : blocks)
            if (b.sequential_steps > s) s = b.sequential_steps;
        return s;
    }
};

/// Builds (W, Y) with I - 2 W Y^T = H_1 ... H_b from b reflection vectors.
/// Starts from the last factor and prepends: with P = I - 2 W Y^T already
/// holding H_{j+1}..H_b, the product H_j P is I - 2 W' Y'^T where
///   Y' = [u_j | Y],  W' = [u_j | H_j W],  u_j = v_j / ||v_j||.
/// Each prepend is one Householder application, b sequential steps total,
/// O(d b^2) flops.
inline WYBlock wy_compact(const std::vector<HouseholderVector>& vectors, std::size_t dim) {
    const std::size_t b = vectors.size();
    if (b == 0)
        throw Error("wy_compact: empty vector list");
    for (const auto& v : vectors)
        if (v.dim() != dim)
            throw DimensionError("wy_compact: vector length mismatch");

    WYBlock block;
    block.dim = dim;
    block.width = b;
    block.W = Matrix(dim, b);
    block.Y = Matrix(dim, b);
    block.source_vectors = vectors;

    for (std::size_t step = 0; step < b; ++step) {
        const std::size_t j = b - 1 - step; // factor being prepended
        const HouseholderVector& v = vectors[j];
        const double inv_norm = 1.0 / std::sqrt(v.norm_sq());
        const double scale = 2.0 / v.norm_sq();

        if (step > 0) {
            // W(:, j+1..b-1) <- H_j * W(:, j+1..b-1)
            const std::size_t active = step; // columns j+1 .. b-1
            std::vector<double> t(active, 0.0);
            for (std::size_t i = 0; i < dim; ++i) {
                const double vi = v[i];
                const double* wi = block.W.row_ptr(i) + j + 1;
                for (std::size_t k = 0; k < active; ++k) t[k] += vi * wi[k];
            }
            for (std::size_t i = 0; i < dim; ++i) {
                const double c = scale * v[i];
                double* wi = block.W.row_ptr(i) + j + 1;
                for (std::size_t k = 0; k < active; ++k) wi[k] -= c * t[k];
            }
        }
        for (std::size_t i = 0; i < dim; ++i) {
            const double u = v[i] * inv_norm;
            block.W(i, j) = u;
            block.Y(i, j) = u;
        }
        ++block.sequential_steps;
    }
    return block;
}

/// X - 2 W (Y^T X): applies the block's product to X in two tall-skinny
/// multiplies, O(d * width * m) flops.
inline Matrix wy_apply(const WYBlock& block, const Matrix& X) {
    const std::size_t d = block.dim;
    const std::size_t b = block.width;
    const std::size_t m = X.cols();
    if (X.rows() != d)
        throw DimensionError("wy_apply: X has " + std::to_string(X.rows()) + " rows, block dim " +
                             std::to_string(d));
    // T = Y^T X  (b x m)
    Matrix T(b, m);
    for (std::size_t i = 0; i < d; ++i) {
        const double* yi = block.Y.row_ptr(i);
        const double* xi = X.row_ptr(i);
        for (std::size_t k = 0; k < b; ++k) {
            const double y = yi[k];
            double* tk = T.row_ptr(k);
            for (std::size_t l = 0; l < m; ++l) tk[l] += y * xi[l];
        }
    }
    Matrix out = X;
    for (std::size_t i = 0; i < d; ++i) {
        const double* wi = block.W.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (std::size_t k = 0; k < b; ++k) {
            const double c = 2.0 * wi[k];
            const double* tk = T.row_ptr(k);
            for (std::size_t l = 0; l < m; ++l) oi[l] -= c * tk[l];
        }
    }
    return out;
}

/// X - 2 Y (W^T X): applies the transposed product, since
/// (I - 2 W Y^T)^T = I - 2 Y W^T.
inline Matrix wy_apply_transpose(const WYBlock& block, const Matrix& X) {
    WYBlock swapped;
    swapped.dim = block.dim;
    swapped.width = block.width;
    // Cheap view swap would avoid the copies; widths are small enough that it
    // has not mattered in profiles.
    swapped.W = block.Y;
    swapped.Y = block.W;
    return wy_apply(swapped, X);
}

/// Partitions the chain into ceil(n / block_width) consecutive groups (last
/// group may be smaller) and compacts each one. Groups are independent and
/// run under parallel_for.
inline CompactedChain compact_chain(const HouseholderChain& chain, std::size_t block_width) {
    const std::size_t n = chain.size();
    if (block_width < 1 || block_width > n)
        throw Error("compact_chain: block width " + std::to_string(block_width) +
                    " outside [1, " + std::to_string(n) + "]");
    const std::size_t q = (n + block_width - 1) / block_width;

    CompactedChain out;
    out.dim = chain.dim();
    out.block_width = block_width;
    out.blocks.resize(q);
    parallel_for(q, [&](std::size_t i) {
        const std::size_t lo = i * block_width;
        const std::size_t hi = std::min(lo + block_width, n);
        std::vector<HouseholderVector> group(chain.vectors().begin() + lo,
                                             chain.vectors().begin() + hi);
        out.blocks[i] = wy_compact(group, chain.dim());
    });
    return out;
}

} // namespace fasth
