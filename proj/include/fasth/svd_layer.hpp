#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fasth/fasth.hpp"
#include "fasth/householder.hpp"
#include "fasth/matrix.hpp"

namespace fasth {

/// A weight matrix held in factored form W = U Sigma V^T: two Householder
/// chains and a diagonal. Gradient steps act on the reflection vectors, so
/// both orthogonal factors stay orthogonal by construction.
struct SvdParam {
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
    HouseholderChain U{0};
    HouseholderChain V{0};
    std::vector<double> sigma; // length min(out_dim, in_dim)

    std::size_t min_dim() const { return std::min(out_dim, in_dim); }

    void validate() const {
        if (U.dim() != out_dim || V.dim() != in_dim)
            throw DimensionError("SvdParam: chain dims inconsistent");
        if (sigma.size() != min_dim())
            throw DimensionError("SvdParam: sigma length != min(out_dim, in_dim)");
        for (double s : sigma)
            if (!std::isfinite(s))
                throw Error("SvdParam: non-finite sigma entry");
    }

    /// Unit-Gaussian reflection vectors normalized to unit length, sigma all
    /// ones (identity spectrum).
    static SvdParam random(std::size_t out_dim, std::size_t in_dim, std::size_t n_u,
                           std::size_t n_v, std::mt19937_64& rng) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto make_chain = [&](std::size_t dim, std::size_t n) {
            HouseholderChain c(dim);
            for (std::size_t k = 0; k < n; ++k) {
                std::vector<double> v(dim);
                double s = 0.0;
                for (auto& x : v) {
                    x = gauss(rng);
                    s += x * x;
                }
                const double inv = 1.0 / std::sqrt(s);
                for (auto& x : v) x *= inv;
                c.push_back(HouseholderVector(std::move(v)));
            }
            return c;
        };
        SvdParam p;
        p.out_dim = out_dim;
        p.in_dim = in_dim;
        p.U = make_chain(out_dim, n_u);
        p.V = make_chain(in_dim, n_v);
        p.sigma.assign(std::min(out_dim, in_dim), 1.0);
        return p;
    }
};

struct SvdGradients {
    std::vector<std::vector<double>> grad_U_vectors;
    std::vector<std::vector<double>> grad_V_vectors;
    std::vector<double> grad_sigma;
    Matrix grad_input;
};

/// Forward tape: the V^T leg runs over V's chain in reverse order (each H is
/// symmetric, so the reversed chain is the transpose).
struct SvdTape {
    TapeForward v_tape; // V^T X leg; input = X, output = T1
    TapeForward u_tape; // U leg; input = T2 = Sigma T1, output = Y
};

namespace detail {

/// T2 = Sigma * T1 with rectangular Sigma (out x in): rows past min_dim are
/// zero, rows past in_dim of T1 are dropped.
inline Matrix apply_sigma(const SvdParam& p, const Matrix& T1) {
    Matrix T2(p.out_dim, T1.cols());
    for (std::size_t i = 0; i < p.min_dim(); ++i) {
        const double s = p.sigma[i];
        const double* src = T1.row_ptr(i);
        double* dst = T2.row_ptr(i);
        for (std::size_t l = 0; l < T1.cols(); ++l) dst[l] = s * src[l];
    }
    return T2;
}

} // namespace detail

/// Y = U (Sigma (V^T X)).
inline std::pair<Matrix, SvdTape> svd_forward(const SvdParam& p, const Matrix& X,
                                              std::size_t block_width) {
    p.validate();
    if (X.rows() != p.in_dim)
        throw DimensionError("svd_forward: X has " + std::to_string(X.rows()) +
                             " rows, in_dim " + std::to_string(p.in_dim));
    SvdTape tape;
    tape.v_tape = fasth_forward(p.V.reversed(), X, block_width);
    Matrix T2 = detail::apply_sigma(p, tape.v_tape.output());
    tape.u_tape = fasth_forward(p.U, T2, block_width);
    return {tape.u_tape.output(), std::move(tape)};
}

/// Backpropagates through U, then Sigma, then the V^T leg. The sigma gradient
/// is the diagonal restriction of the dense outer-product gradient; the
/// off-diagonal entries are discarded because Sigma is constrained diagonal.
inline SvdGradients svd_backward(const SvdParam& p, const SvdTape& tape,
                                 const Matrix& grad_output) {
    BackwardResult bu = fasth_backward(tape.u_tape, grad_output);
    const Matrix& grad_T2 = bu.grad_input;
    const Matrix& T1 = tape.v_tape.output();

    SvdGradients g;
    g.grad_U_vectors = std::move(bu.grad_vectors);
    g.grad_sigma.assign(p.min_dim(), 0.0);
    for (std::size_t i = 0; i < p.min_dim(); ++i) {
        const double* gr = grad_T2.row_ptr(i);
        const double* tr = T1.row_ptr(i);
        double acc = 0.0;
        for (std::size_t l = 0; l < grad_T2.cols(); ++l) acc += gr[l] * tr[l];
        g.grad_sigma[i] = acc;
    }

    Matrix grad_T1(p.in_dim, grad_T2.cols());
    for (std::size_t i = 0; i < p.min_dim(); ++i) {
        const double s = p.sigma[i];
        const double* src = grad_T2.row_ptr(i);
        double* dst = grad_T1.row_ptr(i);
        for (std::size_t l = 0; l < grad_T2.cols(); ++l) dst[l] = s * src[l];
    }

    BackwardResult bv = fasth_backward(tape.v_tape, grad_T1);
    const std::size_t nv = p.V.size();
    g.grad_V_vectors.resize(nv);
    for (std::size_t k = 0; k < nv; ++k)
        g.grad_V_vectors[k] = std::move(bv.grad_vectors[nv - 1 - k]); // undo the reversal
    g.grad_input = std::move(bv.grad_input);
    return g;
}

/// v_i <- v_i - eta * grad_v_i for both chains, sigma <- sigma - eta * grad.
/// Returns a new value; rejects the update if any vector would go degenerate.
inline SvdParam svd_step(const SvdParam& p, const SvdGradients& g, double eta) {
    if (!std::isfinite(eta))
        throw Error("svd_step: eta not finite");
    if (g.grad_U_vectors.size() != p.U.size() || g.grad_V_vectors.size() != p.V.size() ||
        g.grad_sigma.size() != p.sigma.size())
        throw DimensionError("svd_step: gradient shapes do not match parameter");

    auto step_chain = [&](const HouseholderChain& chain,
                          const std::vector<std::vector<double>>& grads, const char* name) {
        HouseholderChain out(chain.dim());
        for (std::size_t k = 0; k < chain.size(); ++k) {
            if (grads[k].size() != chain.dim())
                throw DimensionError("svd_step: gradient vector length mismatch");
            std::vector<double> v(chain.dim());
            for (std::size_t i = 0; i < chain.dim(); ++i)
                v[i] = chain[k][i] - eta * grads[k][i];
            try {
                out.push_back(HouseholderVector(std::move(v)));
            } catch (const DegenerateVectorError&) {
                throw DegenerateVectorError("svd_step: update degenerates " + std::string(name) +
                                            " vector " + std::to_string(k));
            }
        }
        return out;
    };

    SvdParam out;
    out.out_dim = p.out_dim;
    out.in_dim = p.in_dim;
    out.U = step_chain(p.U, g.grad_U_vectors, "U");
    out.V = step_chain(p.V, g.grad_V_vectors, "V");
    out.sigma = p.sigma;
    for (std::size_t i = 0; i < out.sigma.size(); ++i) out.sigma[i] -= eta * g.grad_sigma[i];
    return out;
}

/// Projects every sigma entry onto [1 - epsilon, 1 + epsilon]. Clamps the
/// signed value, not its magnitude; callers wanting signed spectra skip this.
inline SvdParam clamp_sigma(const SvdParam& p, double epsilon) {
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw Error("clamp_sigma: epsilon outside [0, 1)");
    SvdParam out = p;
    for (double& s : out.sigma) s = std::clamp(s, 1.0 - epsilon, 1.0 + epsilon);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: flat binary, magic "OSVD", little-endian throughout.
// Header: magic, version u32, out_dim u32, in_dim u32, nU u32, nV u32;
// then U vectors concatenated as f64, then V vectors, then sigma.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kSvdFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof(x));
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t x = 0;
    is.read(reinterpret_cast<char*>(&x), sizeof(x));
    if (!is) throw Error("SvdParam load: truncated header");
    return x;
}

inline void write_doubles(std::ostream& os, const std::vector<double>& xs) {
    os.write(reinterpret_cast<const char*>(xs.data()),
             static_cast<std::streamsize>(xs.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::istream& is, std::size_t n) {
    std::vector<double> xs(n);
    is.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw Error("SvdParam load: truncated payload");
    return xs;
}

} // namespace detail

inline void save_svd_param(const SvdParam& p, std::ostream& os) {
    p.validate();
    os.write("OSVD", 4);
    detail::write_u32(os, kSvdFormatVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(p.out_dim));
    detail::write_u32(os, static_cast<std::uint32_t>(p.in_dim));
    detail::write_u32(os, static_cast<std::uint32_t>(p.U.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(p.V.size()));
    for (const auto& v : p.U.vectors()) detail::write_doubles(os, v.coeffs());
    for (const auto& v : p.V.vectors()) detail::write_doubles(os, v.coeffs());
    detail::write_doubles(os, p.sigma);
    if (!os) throw Error("save_svd_param: write failure");
}

inline SvdParam load_svd_param(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "OSVD", 4) != 0)
        throw Error("load_svd_param: bad magic");
    const std::uint32_t version = detail::read_u32(is);
    if (version != kSvdFormatVersion)
        throw Error("load_svd_param: unsupported version " + std::to_string(version));
    SvdParam p;
    p.out_dim = detail::read_u32(is);
    p.in_dim = detail::read_u32(is);
    const std::uint32_t nu = detail::read_u32(is);
    const std::uint32_t nv = detail::read_u32(is);
    p.U = HouseholderChain(p.out_dim);
    for (std::uint32_t k = 0; k < nu; ++k)
        p.U.push_back(HouseholderVector(detail::read_doubles(is, p.out_dim)));
    p.V = HouseholderChain(p.in_dim);
    for (std::uint32_t k = 0; k < nv; ++k)
        p.V.push_back(HouseholderVector(detail::read_doubles(is, p.in_dim)));
    p.sigma = detail::read_doubles(is, p.min_dim());
    p.validate();
    return p;
}

inline void save_svd_param_file(const SvdParam& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_svd_param_file: cannot open " + path);
    save_svd_param(p, os);
}

inline SvdParam load_svd_param_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("load_svd_param_file: cannot open " + path);
    return load_svd_param(is);
}

} // namespace fasth
