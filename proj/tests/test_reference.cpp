#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fasth/fasth.hpp"
#include "fasth/reference.hpp"
#include "test_support.hpp"

using namespace fasth;
using namespace testsupport;

TEST_CASE("sequential baseline: empty chain") {
    std::mt19937_64 rng(151);
    Matrix x = random_matrix(4, 2, rng);
    Matrix g = random_matrix(4, 2, rng);
    auto [out, back] = reference::sequential_forward_backward(HouseholderChain(4), x, g);
    CHECK(out == x);
    CHECK(back.grad_input == g);
    CHECK(back.grad_vectors.empty());
}

TEST_CASE("sequential baseline: single factor") {
    std::mt19937_64 rng(157);
    HouseholderChain chain = random_chain(6, 1, rng);
    Matrix x = random_matrix(6, 3, rng);
    Matrix g = random_matrix(6, 3, rng);
    auto [out, back] = reference::sequential_forward_backward(chain, x, g);
    CHECK(relative_error(out, householder_apply_left(chain[0], x)) == 0.0);
    std::vector<double> direct = householder_grad(chain[0], x, g);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(back.grad_vectors[0][i] == Catch::Approx(direct[i]).epsilon(1e-12));
}

TEST_CASE("dense parallel forward: identity chain and hand case") {
    std::mt19937_64 rng(163);
    Matrix x = random_matrix(3, 2, rng);
    CHECK(reference::dense_parallel_forward(HouseholderChain(3), x) == x);

    HouseholderChain c(3);
    c.push_back(HouseholderVector(std::vector<double>{1.0, 0.0, 0.0}));
    Matrix r = reference::dense_parallel_forward(c, x);
    CHECK(r(0, 0) == Catch::Approx(-x(0, 0)));
    CHECK(r(1, 1) == Catch::Approx(x(1, 1)));
}

TEST_CASE("all three strategies agree") {
    std::mt19937_64 rng(167);
    for (std::size_t d : {8, 32, 128}) {
        HouseholderChain chain = random_chain(d, d, rng);
        Matrix x = random_matrix(d, 4, rng);
        Matrix g = random_matrix(d, 4, rng);
        auto [seq_out, seq_back] = reference::sequential_forward_backward(chain, x, g);
        (void)seq_back;
        Matrix dense_out = reference::dense_parallel_forward(chain, x);
        Matrix fast_out = fasth_forward(chain, x, tune_block_width(d, 4)).output();
        CHECK(relative_error(dense_out, seq_out) < 1e-10);
        CHECK(relative_error(fast_out, seq_out) < 1e-10);
    }
}
