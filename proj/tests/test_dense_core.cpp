#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fasth/householder.hpp"
#include "fasth/matrix.hpp"
#include "test_support.hpp"

using namespace fasth;
using namespace testsupport;

TEST_CASE("Matrix::from_data validates shape and finiteness") {
    CHECK_THROWS_AS(Matrix::from_data(2, 2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(Matrix::from_data(1, 2, {1.0, std::nan("")}), Error);
    Matrix m = Matrix::from_data(2, 2, {1.0, 2.0, 3.0, 4.0});
    CHECK(m(1, 0) == 3.0);
}

TEST_CASE("HouseholderVector rejects degenerate and non-finite input") {
    CHECK_THROWS_AS(HouseholderVector(std::vector<double>{0.0, 0.0, 0.0}), DegenerateVectorError);
    CHECK_THROWS_AS(HouseholderVector(std::vector<double>{1.0, std::nan("")}), Error);
    HouseholderVector v(std::vector<double>{3.0, 4.0});
    CHECK(v.norm_sq() == Catch::Approx(25.0));
}

TEST_CASE("householder_apply_left: reflection through the first axis") {
    HouseholderVector e1(std::vector<double>{1.0, 0.0, 0.0});
    Matrix r = householder_apply_left(e1, Matrix::identity(3));
    CHECK(r(0, 0) == Catch::Approx(-1.0));
    CHECK(r(1, 1) == Catch::Approx(1.0));
    CHECK(r(2, 2) == Catch::Approx(1.0));
    CHECK(r(0, 1) == Catch::Approx(0.0));
}

TEST_CASE("householder_apply_left: swap-and-negate along (1,1)") {
    // H = I - v v^T for v = (1,1)/sqrt(2) scaled; maps (1,0) to (0,-1)
    HouseholderVector v(std::vector<double>{1.0, 1.0});
    Matrix x = Matrix::from_data(2, 1, {1.0, 0.0});
    Matrix r = householder_apply_left(v, x);
    CHECK(r(0, 0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(r(1, 0) == Catch::Approx(-1.0));
}

TEST_CASE("householder_apply_left: zero matrix stays zero") {
    std::mt19937_64 rng(7);
    HouseholderVector v(random_matrix(5, 1, rng).data());
    Matrix zero(5, 3);
    Matrix r = householder_apply_left(v, zero);
    for (double x : r.data()) CHECK(x == 0.0);
}

TEST_CASE("householder_apply_left errors") {
    HouseholderVector v(std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(householder_apply_left(v, Matrix(3, 2)), DimensionError);
}

TEST_CASE("Householder application is an involution") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        HouseholderVector v(random_matrix(8, 1, rng).data());
        Matrix x = random_matrix(8, 4, rng);
        Matrix back = householder_apply_left(v, householder_apply_left(v, x));
        CHECK(relative_error(back, x) < 1e-12);
    }
}

TEST_CASE("H depends on v only through its direction") {
    std::mt19937_64 rng(13);
    HouseholderVector v(random_matrix(6, 1, rng).data());
    std::vector<double> scaled = v.coeffs();
    for (auto& x : scaled) x *= -17.25;
    HouseholderVector w(std::move(scaled));
    Matrix x = random_matrix(6, 3, rng);
    CHECK(relative_error(householder_apply_left(w, x), householder_apply_left(v, x)) < 1e-12);
}

TEST_CASE("chain_apply_sequential: empty chain and single factor") {
    std::mt19937_64 rng(17);
    Matrix x = random_matrix(4, 2, rng);
    CHECK(chain_apply_sequential(HouseholderChain(4), x) == x);

    HouseholderChain single(4);
    HouseholderVector v(random_matrix(4, 1, rng).data());
    single.push_back(v);
    CHECK(relative_error(chain_apply_sequential(single, x), householder_apply_left(v, x)) == 0.0);
}

TEST_CASE("chain_apply_sequential matches the explicit dense product") {
    std::mt19937_64 rng(19);
    HouseholderChain chain = random_chain(8, 8, rng);
    Matrix x = random_matrix(8, 2, rng);
    Matrix expect = matmul(dense_chain_product(chain), x);
    CHECK(relative_error(chain_apply_sequential(chain, x), expect) < 1e-12);
}

TEST_CASE("chain_apply_sequential equals chain_to_dense times X") {
    std::mt19937_64 rng(23);
    for (std::size_t d : {5, 16, 64}) {
        HouseholderChain chain = random_chain(d, d, rng);
        Matrix x = random_matrix(d, 3, rng);
        Matrix via_dense = matmul(chain_to_dense(chain), x);
        CHECK(relative_error(chain_apply_sequential(chain, x), via_dense) < 1e-10);
    }
}

TEST_CASE("chain_to_dense: identity and single reflection") {
    CHECK(chain_to_dense(HouseholderChain(4)) == Matrix::identity(4));
    HouseholderChain c(3);
    c.push_back(HouseholderVector(std::vector<double>{1.0, 0.0, 0.0}));
    Matrix q = chain_to_dense(c);
    CHECK(q(0, 0) == Catch::Approx(-1.0));
    CHECK(q(1, 1) == Catch::Approx(1.0));
}

TEST_CASE("chain_to_dense output is orthogonal") {
    std::mt19937_64 rng(29);
    for (std::size_t d : {8, 32, 128}) {
        Matrix q = chain_to_dense(random_chain(d, d, rng));
        Matrix qtq = matmul(transpose(q), q);
        CHECK(frobenius_distance(qtq, Matrix::identity(d)) < d * 1e-12);
    }
}

TEST_CASE("householder_grad: zero inputs give zero gradients") {
    std::mt19937_64 rng(31);
    HouseholderVector v(random_matrix(5, 1, rng).data());
    Matrix a = random_matrix(5, 2, rng);
    Matrix zero(5, 2);
    for (double g : householder_grad(v, a, zero)) CHECK(g == 0.0);
    for (double g : householder_grad(v, zero, a)) CHECK(g == 0.0);
}

TEST_CASE("householder_grad matches central finite differences") {
    std::mt19937_64 rng(37);
    const std::size_t d = 6, m = 3;
    for (int seed_trial = 0; seed_trial < 100; ++seed_trial) {
        // L = <G, H(v) A>: the kernel's A_next argument is the multiplication
        // input, which is exactly what the backward pass reconstructs.
        HouseholderChain chain = random_chain(d, 1, rng);
        Matrix a = random_matrix(d, m, rng);
        Matrix g = random_matrix(d, m, rng);
        std::vector<double> grad = householder_grad(chain[0], a, g);
        for (std::size_t c = 0; c < d; ++c) {
            double fd = fd_chain_grad(chain, a, g, 0, c);
            CHECK(close_rel(grad[c], fd, 1e-6));
        }
    }
}

TEST_CASE("householder_grad dimension checks") {
    HouseholderVector v(std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(householder_grad(v, Matrix(2, 3), Matrix(2, 2)), DimensionError);
    CHECK_THROWS_AS(householder_grad(v, Matrix(3, 2), Matrix(3, 2)), DimensionError);
}
