#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <random>
#include <utility>
#include <vector>

#include "fasth/householder.hpp"
#include "fasth/matrix.hpp"
#include "fasth/parallel.hpp"
#include "fasth/wy.hpp"

namespace fasth {

/// Everything the backward pass needs from a forward run: the compacted chain
/// and the per-block activations A_1..A_{q+1}, with A_{q+1} = X (the input)
/// and A_1 = the output. activations[i] holds A_{i+1} (0-based).
struct TapeForward {
    CompactedChain compacted;
    std::vector<Matrix> activations;

    const Matrix& output() const { return activations.front(); }
    const Matrix& input() const { return activations.back(); }
    std::size_t block_count() const { return compacted.blocks.size(); }
};

struct BackwardResult {
    Matrix grad_input;                            // dL/dX, d x m
    std::vector<std::vector<double>> grad_vectors; // dL/dv_1 .. dL/dv_n
};

/// Blocked forward pass. Step 1 compacts the chain into WY blocks (parallel
/// across blocks); Step 2 applies blocks right-to-left sequentially,
/// A_i = A_{i+1} - 2 W_i (Y_i^T A_{i+1}), recording every activation.
/// block_width is clamped to [1, n]; n = 0 yields a tape whose output is X.
inline TapeForward fasth_forward(const HouseholderChain& chain, const Matrix& X,
                                 std::size_t block_width) {
    if (X.rows() != chain.dim())
        throw DimensionError("fasth_forward: X row count != chain dim");
    TapeForward tape;
    const std::size_t n = chain.size();
    if (n == 0) {
        tape.compacted.dim = chain.dim();
        tape.compacted.block_width = block_width;
        tape.activations.push_back(X);
        return tape;
    }
    const std::size_t b = std::min(std::max<std::size_t>(block_width, 1), n);
    tape.compacted = compact_chain(chain, b);
    const std::size_t q = tape.compacted.blocks.size();

    tape.activations.resize(q + 1);
    tape.activations[q] = X;
    for (std::size_t i = q; i-- > 0;)
        tape.activations[i] = wy_apply(tape.compacted.blocks[i], tape.activations[i + 1]);
    return tape;
}

/// Blocked backward pass. Step 1 walks blocks left-to-right applying the
/// transposed blocks to propagate dL/dA_i (sequential). Step 2 runs per block
/// (parallel): starting from the block's tape activation, reconstruct the
/// within-block activations via A_{j+1} = H_j^T A_j rather than storing them,
/// propagate dL/dA_{j+1} = H_j^T dL/dA_j the same way, and accumulate each
/// reflection-vector gradient from (A_{j+1}, dL/dA_j).
inline BackwardResult fasth_backward(const TapeForward& tape, const Matrix& grad_output) {
    const std::size_t q = tape.block_count();
    const Matrix& out = tape.output();
    if (!grad_output.same_shape(out))
        throw DimensionError("fasth_backward: grad_output shape mismatch");

    BackwardResult res;
    if (q == 0) {
        res.grad_input = grad_output;
        return res;
    }

    // Step 1: dA[i] = dL/dA_{i+1} (0-based), dA[0] = grad_output.
    std::vector<Matrix> dA(q + 1);
    dA[0] = grad_output;
    for (std::size_t i = 0; i < q; ++i)
        dA[i + 1] = wy_apply_transpose(tape.compacted.blocks[i], dA[i]);
    res.grad_input = dA[q];

    // Step 2: per-block subproblems, disjoint output slots.
    std::vector<std::size_t> offset(q, 0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < q; ++i) {
        offset[i] = n;
        n += tape.compacted.blocks[i].width;
    }
    res.grad_vectors.resize(n);

    parallel_for(q, [&](std::size_t i) {
        const WYBlock& block = tape.compacted.blocks[i];
        Matrix a = tape.activations[i]; // A_i in 1-based terms
        Matrix g = dA[i];               // dL/dA_i
        for (std::size_t j = 0; j < block.width; ++j) {
            const HouseholderVector& v = block.source_vectors[j];
            householder_apply_left_inplace(v, a); // A_{j+1} = H_j^T A_j (H symmetric)
            res.grad_vectors[offset[i] + j] = householder_grad(v, a, g);
            householder_apply_left_inplace(v, g); // dL/dA_{j+1}
        }
    });
    return res;
}

struct StageCounts {
    std::size_t forward = 0;
    std::size_t backward = 0;
};

/// Exact sequential-stage counters from an instrumented run on synthetic
/// data: forward = block applications + (concurrent) compaction steps counted
/// once; backward = step-1 applications + widest block's inner iterations.
inline StageCounts count_sequential_stages(std::size_t d, std::size_t n, std::size_t m,
                                           std::size_t b) {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    HouseholderChain chain(d);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> v(d);
        for (auto& x : v) x = gauss(rng);
        chain.push_back(HouseholderVector(std::move(v)));
    }
    Matrix X(d, m);
    for (auto& x : X.data()) x = gauss(rng);
    Matrix G(d, m);
    for (auto& x : G.data()) x = gauss(rng);

    TapeForward tape = fasth_forward(chain, X, b);
    fasth_backward(tape, G);

    StageCounts c;
    c.forward = tape.block_count() + tape.compacted.compaction_stages();
    c.backward = tape.block_count() + tape.compacted.compaction_stages();
    return c;
}

/// Picks the block width. With timing enabled, runs forward+backward on
/// synthetic data for each candidate in {2, ..., 2*ceil(sqrt(d))} plus m and
/// returns the fastest, caching the answer per (d, m). Otherwise returns the
/// analytic optimum round(sqrt(d)), which minimizes ceil(n/b) + b.
inline std::size_t tune_block_width(std::size_t d, std::size_t m, bool timed = false,
                                    std::uint64_t seed = 0x5eed) {
    if (!timed) {
        auto b = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
        return std::max<std::size_t>(b, 1);
    }

    static std::mutex cache_mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::size_t> cache;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({d, m});
        if (it != cache.end()) return it->second;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    HouseholderChain chain(d);
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> v(d);
        for (auto& x : v) x = gauss(rng);
        chain.push_back(HouseholderVector(std::move(v)));
    }
    Matrix X(d, m);
    for (auto& x : X.data()) x = gauss(rng);
    Matrix G(d, m);
    for (auto& x : G.data()) x = gauss(rng);

    std::vector<std::size_t> candidates;
    const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    for (std::size_t b = 2; b <= 2 * root && b <= d; ++b) candidates.push_back(b);
    if (m >= 1 && m <= d) candidates.push_back(m);
    if (candidates.empty()) candidates.push_back(1);

    std::size_t best = candidates.front();
    double best_time = -1.0;
    for (std::size_t b : candidates) {
        auto t0 = std::chrono::steady_clock::now();
        TapeForward tape = fasth_forward(chain, X, b);
        fasth_backward(tape, G);
        double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (best_time < 0.0 || t < best_time) {
            best_time = t;
            best = b;
        }
    }
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache[{d, m}] = best;
    return best;
}

} // namespace fasth
