#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fasth/fasth.hpp"
#include "fasth/matops.hpp"
#include "fasth/matrix.hpp"
#include "fasth/parallel.hpp"
#include "fasth/reference.hpp"
#include "fasth/svd_layer.hpp"

namespace fasth::bench {

struct BenchConfig {
    std::vector<std::size_t> dims;         // d values
    std::size_t m = 32;                    // mini-batch columns
    std::size_t k = 0;                     // block width, 0 = auto (timed search)
    std::vector<std::string> algos{"fasth"}; // sequential | dense-parallel | fasth
    std::string op = "mul";                // mul | inverse | det | exp | cayley | layer
    std::size_t reps = 100;
    std::uint64_t seed = 0;
    int threads = 0; // 0 = all cores

    void validate() const {
        if (reps < 1) throw Error("config: reps must be >= 1");
        if (dims.empty()) throw Error("config: no dimensions given");
        for (std::size_t d : dims)
            if (d < 1) throw Error("config: dimensions must be positive");
        if (m < 1) throw Error("config: m must be positive");
        static const char* kOps[] = {"mul", "inverse", "det", "exp", "cayley", "layer"};
        bool ok = false;
        for (const char* o : kOps) ok = ok || op == o;
        if (!ok) throw Error("config: unknown op '" + op + "'");
        for (const auto& a : algos) {
            if (a != "sequential" && a != "dense-parallel" && a != "fasth")
                throw Error("config: unknown algo '" + a + "'");
            if (a == "dense-parallel" && op != "mul")
                throw Error("config: dense-parallel supports op=mul only");
        }
        if (algos.empty()) throw Error("config: no algorithms given");
    }
};

struct BenchRecord {
    std::string algo;
    std::string op;
    std::size_t d = 0;
    std::size_t m = 0;
    std::size_t k = 0;
    std::size_t reps = 0;
    int threads = 0;
    double mean_s = 0.0;
    double std_s = 0.0;
    std::string checksum;
};

inline constexpr const char* kCsvHeader = "algo,op,d,m,k,reps,threads,mean_s,std_s,checksum";

// ---------------------------------------------------------------------------
// Synthetic data, matching the timed methodology: X_ij, G_ij ~ N(0, 1) and
// one Gaussian reflection vector per Householder factor.
// ---------------------------------------------------------------------------

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix x(rows, cols);
    for (auto& e : x.data()) e = gauss(rng);
    return x;
}

inline HouseholderChain random_chain(std::size_t dim, std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    HouseholderChain chain(dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) x = gauss(rng);
        chain.push_back(HouseholderVector(std::move(v)));
    }
    return chain;
}

/// FNV-1a over entries rounded to 8 decimal digits: equal across algorithms
/// that agree to tolerance, robust to last-bit differences.
inline std::string matrix_checksum(const Matrix& m) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::int64_t q) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= static_cast<std::uint64_t>(q >> (8 * byte)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::int64_t>(m.rows()));
    mix(static_cast<std::int64_t>(m.cols()));
    for (double x : m.data()) mix(std::llround(x * 1e8));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

/// One full timed unit for the given algorithm; returns the forward output
/// for checksumming. For op != "mul" this is the matrix operation plus the
/// layer forward and its gradients, mirroring how the operations are used.
class Workload {
public:
    Workload(const BenchConfig& cfg, std::size_t d) : op_(cfg.op) {
        std::mt19937_64 rng(cfg.seed + d); // distinct data per size, fixed by seed
        if (op_ == "mul") {
            chain_ = random_chain(d, d, rng);
            x_ = random_matrix(d, cfg.m, rng);
        } else if (op_ == "exp" || op_ == "cayley") {
            // symmetric form: one chain, signed spectrum away from the Cayley pole
            param_ = SvdParam::random(d, d, d, 0, rng);
            std::uniform_real_distribution<double> u(-0.9, 0.9);
            for (auto& s : param_.sigma) s = u(rng);
            x_ = random_matrix(d, cfg.m, rng);
        } else {
            param_ = SvdParam::random(d, d, d, d, rng);
            std::uniform_real_distribution<double> u(0.5, 2.0);
            for (auto& s : param_.sigma) s = u(rng);
            x_ = random_matrix(d, cfg.m, rng);
        }
        g_ = random_matrix(d, cfg.m, rng);
        block_width_ = cfg.k != 0 ? cfg.k : tune_block_width(d, cfg.m, /*timed=*/true, cfg.seed);
    }

    std::size_t block_width() const { return block_width_; }

    Matrix run(const std::string& algo) const {
        if (op_ == "mul") return run_mul(algo);
        SvdParam derived = derive_param(); // the timed "matrix operation", O(d) sigma work
        return run_layer(derived, algo);
    }

private:
    Matrix run_mul(const std::string& algo) const {
        if (algo == "fasth") {
            TapeForward tape = fasth_forward(chain_, x_, block_width_);
            fasth_backward(tape, g_);
            return tape.output();
        }
        if (algo == "sequential") {
            auto [out, back] = reference::sequential_forward_backward(chain_, x_, g_);
            (void)back;
            return out;
        }
        // dense-parallel: materialize, multiply, and propagate the input
        // gradient densely. Vector gradients are not part of this baseline.
        Matrix q = chain_to_dense(chain_);
        Matrix out = matmul(q, x_);
        matmul(transpose(q), g_);
        return out;
    }

    SvdParam derive_param() const {
        SvdParam q = param_;
        if (op_ == "layer" || op_ == "det") {
            if (op_ == "det") log_abs_det(param_);
            return q;
        }
        if (op_ == "inverse") {
            // W^{-1} = V Sigma^{-1} U^T is itself an SVD-form layer.
            q.U = param_.V;
            q.V = param_.U;
            for (auto& s : q.sigma) s = 1.0 / s;
            return q;
        }
        // symmetric-form spectra: U f(Sigma) U^T
        q.V = param_.U;
        if (op_ == "exp")
            for (auto& s : q.sigma) s = std::exp(s);
        else // cayley
            for (auto& s : q.sigma) s = (1.0 - s) / (1.0 + s);
        return q;
    }

    Matrix run_layer(const SvdParam& p, const std::string& algo) const {
        if (algo == "fasth") {
            auto [y, tape] = svd_forward(p, x_, block_width_);
            svd_backward(p, tape, g_);
            return y;
        }
        // sequential: same composition, factor-at-a-time legs
        HouseholderChain vt = p.V.reversed();
        Matrix t1 = chain_apply_sequential(vt, x_);
        Matrix t2(p.out_dim, x_.cols());
        for (std::size_t i = 0; i < p.sigma.size(); ++i)
            for (std::size_t l = 0; l < x_.cols(); ++l) t2(i, l) = p.sigma[i] * t1(i, l);
        Matrix y = chain_apply_sequential(p.U, t2);

        BackwardResult bu = reference::sequential_backward(p.U, y, g_);
        Matrix grad_t1(p.in_dim, x_.cols());
        for (std::size_t i = 0; i < p.sigma.size(); ++i)
            for (std::size_t l = 0; l < x_.cols(); ++l)
                grad_t1(i, l) = p.sigma[i] * bu.grad_input(i, l);
        reference::sequential_backward(vt, t1, grad_t1);
        return y;
    }

    std::string op_;
    HouseholderChain chain_{0};
    SvdParam param_;
    Matrix x_;
    Matrix g_;
    std::size_t block_width_ = 1;
};

} // namespace detail

/// Runs the configured sweep and returns one record per (d, algo). Every
/// record carries a checksum of the forward output; differing checksums for
/// the same (d, seed) across algorithms are a hard failure, since a benchmark
/// of wrong results is meaningless.
inline std::vector<BenchRecord> run_bench(const BenchConfig& cfg) {
    cfg.validate();
    const int saved_threads = num_threads();
    set_num_threads(cfg.threads);

    std::vector<BenchRecord> records;
    try {
        for (std::size_t d : cfg.dims) {
            detail::Workload work(cfg, d);
            std::string reference_checksum;
            for (const auto& algo : cfg.algos) {
                Matrix warm = work.run(algo); // warm-up rep, excluded from stats
                std::string checksum = matrix_checksum(warm);
                if (reference_checksum.empty()) {
                    reference_checksum = checksum;
                } else if (checksum != reference_checksum) {
                    throw Error("run_bench: checksum mismatch at d=" + std::to_string(d) +
                                " between algorithms (got " + checksum + ", expected " +
                                reference_checksum + ")");
                }

                std::vector<double> times(cfg.reps);
                for (std::size_t r = 0; r < cfg.reps; ++r) {
                    auto t0 = std::chrono::steady_clock::now();
                    work.run(algo);
                    times[r] =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
                }
                double mean = 0.0;
                for (double t : times) mean += t;
                mean /= static_cast<double>(cfg.reps);
                double var = 0.0;
                for (double t : times) var += (t - mean) * (t - mean);
                var /= static_cast<double>(cfg.reps);

                BenchRecord rec;
                rec.algo = algo;
                rec.op = cfg.op;
                rec.d = d;
                rec.m = cfg.m;
                rec.k = algo == "fasth" ? work.block_width() : 0;
                rec.reps = cfg.reps;
                rec.threads = cfg.threads;
                rec.mean_s = mean;
                rec.std_s = std::sqrt(var);
                rec.checksum = checksum;
                records.push_back(std::move(rec));
            }
        }
    } catch (...) {
        set_num_threads(saved_threads);
        throw;
    }
    set_num_threads(saved_threads);
    return records;
}

inline void write_csv(const std::vector<BenchRecord>& records, std::ostream& os) {
    os << kCsvHeader << "\n";
    char buf[64];
    for (const auto& r : records) {
        os << r.algo << ',' << r.op << ',' << r.d << ',' << r.m << ',' << r.k << ',' << r.reps
           << ',' << r.threads << ',';
        std::snprintf(buf, sizeof(buf), "%.9e", r.mean_s);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.9e", r.std_s);
        os << buf << ',' << r.checksum << "\n";
    }
}

// ---------------------------------------------------------------------------
// Verification suite: cross-algorithm and self-consistency checks that need
// no external oracle. Exit contract: all checks pass <=> success.
// ---------------------------------------------------------------------------

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline double fd_grad_component(const HouseholderChain& chain, const Matrix& X, const Matrix& G,
                                std::size_t vec, std::size_t comp, double h) {
    auto loss = [&](double delta) {
        std::vector<HouseholderVector> vs = chain.vectors();
        std::vector<double> v = vs[vec].coeffs();
        v[comp] += delta;
        vs[vec] = HouseholderVector(std::move(v));
        Matrix out = chain_apply_sequential(HouseholderChain(chain.dim(), std::move(vs)), X);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.data().size(); ++i) acc += G.data()[i] * out.data()[i];
        return acc;
    };
    return (loss(h) - loss(-h)) / (2.0 * h);
}

} // namespace detail

/// Runs the built-in verification suite. Sizes are chosen to finish in
/// seconds; the checks mirror the library's core contracts.
inline std::vector<VerifyCheck> verify() {
    std::vector<VerifyCheck> checks;
    std::mt19937_64 rng(1234);
    auto add = [&](const std::string& name, bool ok, std::string detail = "") {
        checks.push_back({name, ok, std::move(detail)});
    };

    // forward equivalence: fasth vs sequential across block widths
    {
        bool ok = true;
        double worst = 0.0;
        for (std::size_t d : std::vector<std::size_t>{16, 64}) {
            HouseholderChain chain = random_chain(d, d, rng);
            Matrix X = random_matrix(d, 8, rng);
            Matrix expect = chain_apply_sequential(chain, X);
            for (std::size_t b : {std::size_t{1}, std::size_t{3}, std::size_t{8}, d}) {
                double err = relative_error(fasth_forward(chain, X, b).output(), expect);
                worst = std::max(worst, err);
                ok = ok && err < 1e-10;
            }
        }
        add("forward-equivalence", ok, "max rel err " + std::to_string(worst));
    }
    // backward equivalence: fasth vs sequential baseline
    {
        bool ok = true;
        const std::size_t d = 24;
        HouseholderChain chain = random_chain(d, d, rng);
        Matrix X = random_matrix(d, 4, rng);
        Matrix G = random_matrix(d, 4, rng);
        auto [out, seq] = reference::sequential_forward_backward(chain, X, G);
        (void)out;
        BackwardResult fast = fasth_backward(fasth_forward(chain, X, 5), G);
        ok = ok && relative_error(fast.grad_input, seq.grad_input) < 1e-10;
        for (std::size_t kx = 0; kx < d && ok; ++kx)
            for (std::size_t i = 0; i < d; ++i) {
                double a = fast.grad_vectors[kx][i], b = seq.grad_vectors[kx][i];
                if (std::fabs(a - b) > 1e-10 * std::max(1.0, std::fabs(b))) ok = false;
            }
        add("backward-equivalence", ok);
    }
    // gradients vs central finite differences
    {
        bool ok = true;
        const std::size_t d = 6, n = 6, m = 3;
        HouseholderChain chain = random_chain(d, n, rng);
        Matrix X = random_matrix(d, m, rng);
        Matrix G = random_matrix(d, m, rng);
        BackwardResult back = fasth_backward(fasth_forward(chain, X, 2), G);
        for (std::size_t v = 0; v < n && ok; ++v)
            for (std::size_t c = 0; c < d; ++c) {
                double fd = detail::fd_grad_component(chain, X, G, v, c, 1e-5);
                double got = back.grad_vectors[v][c];
                double denom = std::max(std::fabs(fd), 1e-2);
                if (std::fabs(got - fd) / denom > 1e-6) ok = false;
            }
        add("finite-difference-gradients", ok);
    }
    // orthogonality of materialized chains
    {
        const std::size_t d = 48;
        Matrix q = chain_to_dense(random_chain(d, d, rng));
        Matrix qtq = matmul(transpose(q), q);
        double err = frobenius_distance(qtq, Matrix::identity(d));
        add("chain-orthogonality", err < 1e-10, "||Q^T Q - I||_F = " + std::to_string(err));
    }
    // inverse round trip through the SVD form
    {
        const std::size_t d = 32;
        SvdParam p = SvdParam::random(d, d, d, d, rng);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        for (auto& s : p.sigma) s = u(rng);
        Matrix X = random_matrix(d, 4, rng);
        auto [y, tape] = svd_forward(p, X, 6);
        (void)tape;
        double err = relative_error(apply_inverse(p, y, 6), X);
        add("inverse-round-trip", err < 1e-9, "rel err " + std::to_string(err));
    }
    // exp(W) exp(-W) X = X in the symmetric form
    {
        const std::size_t d = 16;
        SvdParam p = SvdParam::random(d, d, d, 0, rng);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& s : p.sigma) s = u(rng);
        SvdParam neg = p;
        for (auto& s : neg.sigma) s = -s;
        Matrix X = random_matrix(d, 3, rng);
        double err = relative_error(apply_exponential(neg, apply_exponential(p, X, 4), 4), X);
        add("exponential-inverse", err < 1e-8, "rel err " + std::to_string(err));
    }
    // serialization round trip
    {
        SvdParam p = SvdParam::random(7, 5, 7, 5, rng);
        std::stringstream ss;
        save_svd_param(p, ss);
        SvdParam q = load_svd_param(ss);
        bool ok = q.sigma == p.sigma && q.out_dim == p.out_dim && q.in_dim == p.in_dim;
        for (std::size_t k = 0; k < p.U.size() && ok; ++k)
            ok = q.U[k].coeffs() == p.U[k].coeffs();
        for (std::size_t k = 0; k < p.V.size() && ok; ++k)
            ok = q.V[k].coeffs() == p.V[k].coeffs();
        add("serialization-round-trip", ok);
    }
    // stage-count contract
    {
        bool ok = true;
        for (auto [n, b, want] : {std::tuple<std::size_t, std::size_t, std::size_t>{16, 4, 8},
                                  {16, 16, 17},
                                  {16, 1, 17}})
            ok = ok && count_sequential_stages(16, n, 8, b).forward == want;
        add("stage-count", ok);
    }
    // invalid parameter detection
    {
        SvdParam p = SvdParam::random(4, 4, 4, 4, rng);
        p.sigma[2] = std::nan("");
        bool caught = false;
        try {
            p.validate();
        } catch (const Error&) {
            caught = true;
        }
        add("nan-sigma-detected", caught);
    }
    // sequential baseline survives d = 512
    {
        bool ok = true;
        std::string note;
        try {
            const std::size_t d = 512;
            HouseholderChain chain = random_chain(d, d, rng);
            Matrix X = random_matrix(d, 32, rng);
            Matrix G = random_matrix(d, 32, rng);
            auto [out, back] = reference::sequential_forward_backward(chain, X, G);
            ok = out.rows() == d && back.grad_vectors.size() == d;
        } catch (const std::exception& e) {
            ok = false;
            note = e.what();
        }
        add("sequential-d512", ok, note);
    }
    return checks;
}

} // namespace fasth::bench
