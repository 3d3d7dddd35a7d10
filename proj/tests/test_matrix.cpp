#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/matrix.hpp"
#include "tsad/rng.hpp"

using namespace tsad;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    RngStream rng(seed);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            m(i, j) = rng.next_normal();
    return m;
}

} // namespace

TEST_CASE("matmul matches a hand-computed product") {
    Matrix a(2, 3);
    a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
    a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
    Matrix b(3, 2);
    b(0, 0) = 7;  b(0, 1) = 8;
    b(1, 0) = 9;  b(1, 1) = 10;
    b(2, 0) = 11; b(2, 1) = 12;
    const Matrix p = matmul(a, b);
    REQUIRE(p.rows() == 2);
    REQUIRE(p.cols() == 2);
    CHECK(p(0, 0) == 58.0);
    CHECK(p(0, 1) == 64.0);
    CHECK(p(1, 0) == 139.0);
    CHECK(p(1, 1) == 154.0);
}

TEST_CASE("parallel matmul is bit-identical to the serial reference") {
    const Matrix a = random_matrix(37, 23, 1);
    const Matrix b = random_matrix(23, 41, 2);
    const Matrix serial = matmul_serial(a, b);
    for (int threads : {1, 2, 4, 7}) {
        omp_set_num_threads(threads);
        CHECK(matmul(a, b) == serial);
    }
    omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ArgumentError);
    CHECK_THROWS_AS(matmul_serial(Matrix(2, 3), Matrix(4, 2)), ArgumentError);
}

TEST_CASE("identity is a two-sided multiplicative unit") {
    const Matrix a = random_matrix(5, 5, 3);
    const Matrix i5 = Matrix::identity(5);
    CHECK(matmul(a, i5) == a);
    CHECK(matmul(i5, a) == a);
}

TEST_CASE("transpose flips indices and is an involution") {
    const Matrix a = random_matrix(4, 6, 4);
    const Matrix t = transpose(a);
    REQUIRE(t.rows() == 6);
    REQUIRE(t.cols() == 4);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            CHECK(t(j, i) == a(i, j));
    CHECK(transpose(t) == a);
}

TEST_CASE("take_rows returns the requested slice") {
    const Matrix a = random_matrix(6, 3, 5);
    const Matrix s = take_rows(a, 2, 5);
    REQUIRE(s.rows() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(s(i, j) == a(i + 2, j));
    CHECK(take_rows(a, 3, 3).rows() == 0);
    CHECK_THROWS_AS(take_rows(a, 4, 7), ArgumentError);
    CHECK_THROWS_AS(take_rows(a, 5, 4), ArgumentError);
}

TEST_CASE("select_columns reorders and duplicates columns") {
    const Matrix a = random_matrix(4, 5, 6);
    const Matrix s = select_columns(a, {4, 0, 0});
    REQUIRE(s.cols() == 3);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s(i, 0) == a(i, 4));
        CHECK(s(i, 1) == a(i, 0));
        CHECK(s(i, 2) == a(i, 0));
    }
    CHECK_THROWS_AS(select_columns(a, {5}), ArgumentError);
}

TEST_CASE("max_abs finds the largest magnitude") {
    Matrix a(2, 2);
    a(0, 0) = -3.5; a(0, 1) = 2.0;
    a(1, 0) = 1.0;  a(1, 1) = 3.25;
    CHECK(max_abs(a) == 3.5);
    CHECK(max_abs(Matrix()) == 0.0);
}

TEST_CASE("all_finite detects NaN and infinity") {
    Matrix a(2, 2, 1.0);
    CHECK(a.all_finite());
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(a.all_finite());
    a(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(a.all_finite());
}

TEST_CASE("row spans alias the underlying storage") {
    Matrix a(3, 2, 0.0);
    auto r1 = a.row(1);
    r1[0] = 5.0;
    r1[1] = 6.0;
    CHECK(a(1, 0) == 5.0);
    CHECK(a(1, 1) == 6.0);
    const Matrix& ca = a;
    CHECK(ca.row(1)[1] == 6.0);
}
