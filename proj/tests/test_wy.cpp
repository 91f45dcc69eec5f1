#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fasth/wy.hpp"
#include "test_support.hpp"

using namespace fasth;
using namespace testsupport;

namespace {

Matrix dense_wy(const WYBlock& block) {
    // I - 2 W Y^T, written out
    Matrix p = Matrix::identity(block.dim);
    for (std::size_t i = 0; i < block.dim; ++i)
        for (std::size_t j = 0; j < block.dim; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < block.width; ++k) acc += block.W(i, k) * block.Y(j, k);
            p(i, j) -= 2.0 * acc;
        }
    return p;
}

} // namespace

TEST_CASE("wy_compact single factor: W = Y = v/||v||") {
    HouseholderVector v(std::vector<double>{3.0, 4.0});
    WYBlock block = wy_compact({v}, 2);
    CHECK(block.W(0, 0) == Catch::Approx(0.6));
    CHECK(block.W(1, 0) == Catch::Approx(0.8));
    CHECK(block.Y(0, 0) == Catch::Approx(0.6));
    CHECK(relative_error(dense_wy(block), dense_householder(v)) < 1e-14);
}

TEST_CASE("wy_compact b=2 with axis vectors") {
    WYBlock block = wy_compact({HouseholderVector(std::vector<double>{1.0, 0.0, 0.0}),
                                HouseholderVector(std::vector<double>{0.0, 1.0, 0.0})},
                               3);
    Matrix p = dense_wy(block);
    CHECK(p(0, 0) == Catch::Approx(-1.0));
    CHECK(p(1, 1) == Catch::Approx(-1.0));
    CHECK(p(2, 2) == Catch::Approx(1.0));
    CHECK(p(0, 1) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("wy_compact matches the dense Householder product") {
    std::mt19937_64 rng(41);
    HouseholderChain chain = random_chain(16, 4, rng);
    WYBlock block = wy_compact(chain.vectors(), 16);
    Matrix expect = dense_chain_product(chain);
    CHECK(relative_error(dense_wy(block), expect) < 1e-12);
}

TEST_CASE("wy_compact rejects empty input and counts its stages") {
    CHECK_THROWS_AS(wy_compact({}, 4), Error);
    std::mt19937_64 rng(43);
    for (std::size_t b : {1, 3, 7}) {
        WYBlock block = wy_compact(random_chain(8, b, rng).vectors(), 8);
        CHECK(block.sequential_steps == b);
    }
}

TEST_CASE("wy_apply agrees with the sequential application") {
    std::mt19937_64 rng(47);
    HouseholderChain chain = random_chain(32, 8, rng);
    WYBlock block = wy_compact(chain.vectors(), 32);
    Matrix x = random_matrix(32, 4, rng);
    CHECK(relative_error(wy_apply(block, x), chain_apply_sequential(chain, x)) < 1e-11);
}

TEST_CASE("wy_apply: single factor and zero input") {
    std::mt19937_64 rng(53);
    HouseholderVector v(random_matrix(6, 1, rng).data());
    WYBlock block = wy_compact({v}, 6);
    Matrix x = random_matrix(6, 3, rng);
    CHECK(relative_error(wy_apply(block, x), householder_apply_left(v, x)) < 1e-13);

    Matrix zero(6, 2);
    Matrix mapped = wy_apply(block, zero);
    for (double e : mapped.data()) CHECK(e == 0.0);
    CHECK_THROWS_AS(wy_apply(block, Matrix(5, 2)), DimensionError);
}

TEST_CASE("wy_apply_transpose properties") {
    std::mt19937_64 rng(59);

    // single factor: H symmetric, transpose application coincides
    HouseholderVector v(random_matrix(8, 1, rng).data());
    WYBlock single = wy_compact({v}, 8);
    Matrix x = random_matrix(8, 3, rng);
    CHECK(relative_error(wy_apply_transpose(single, x), wy_apply(single, x)) < 1e-13);

    // orthogonality: P^T P = I
    WYBlock block = wy_compact(random_chain(24, 6, rng).vectors(), 24);
    Matrix y = random_matrix(24, 5, rng);
    CHECK(relative_error(wy_apply_transpose(block, wy_apply(block, y)), y) < 1e-11);

    // dense transpose oracle on the identity
    WYBlock small = wy_compact(random_chain(12, 4, rng).vectors(), 12);
    Matrix pt = wy_apply_transpose(small, Matrix::identity(12));
    CHECK(relative_error(pt, transpose(wy_apply(small, Matrix::identity(12)))) < 1e-12);
}

TEST_CASE("WY blocks are orthogonal as dense matrices") {
    std::mt19937_64 rng(61);
    for (std::size_t d : {16, 64, 128}) {
        WYBlock block = wy_compact(random_chain(d, 8, rng).vectors(), d);
        Matrix p = dense_wy(block);
        CHECK(frobenius_distance(matmul(transpose(p), p), Matrix::identity(d)) < 1e-10);
    }
}

TEST_CASE("compact_chain partition arithmetic") {
    std::mt19937_64 rng(67);
    HouseholderChain chain = random_chain(8, 8, rng);

    CompactedChain one = compact_chain(chain, 8);
    REQUIRE(one.blocks.size() == 1);
    CHECK(one.blocks[0].width == 8);

    CompactedChain ragged = compact_chain(chain, 3);
    REQUIRE(ragged.blocks.size() == 3);
    CHECK(ragged.blocks[0].width == 3);
    CHECK(ragged.blocks[1].width == 3);
    CHECK(ragged.blocks[2].width == 2);

    CHECK_THROWS_AS(compact_chain(chain, 0), Error);
    CHECK_THROWS_AS(compact_chain(chain, 9), Error);
}

TEST_CASE("compact_chain is a pure repartition (bitwise)") {
    std::mt19937_64 rng(71);
    HouseholderChain chain = random_chain(10, 10, rng);
    CompactedChain cc = compact_chain(chain, 4);
    std::size_t idx = 0;
    for (const auto& block : cc.blocks)
        for (const auto& v : block.source_vectors) {
            CHECK(v.coeffs() == chain[idx].coeffs());
            ++idx;
        }
    CHECK(idx == chain.size());
}

TEST_CASE("product of compacted blocks equals the chain product") {
    std::mt19937_64 rng(73);
    HouseholderChain chain = random_chain(16, 16, rng);
    CompactedChain cc = compact_chain(chain, 4);
    Matrix prod = Matrix::identity(16);
    for (const auto& block : cc.blocks) prod = matmul(prod, dense_wy(block));
    CHECK(relative_error(prod, chain_to_dense(chain)) < 1e-11);
}
