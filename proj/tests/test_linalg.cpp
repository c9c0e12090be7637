#include <catch2/catch.hpp>

#include "ccor/linalg.hpp"
#include "ccor/sim.hpp"

using namespace ccor;

TEST_CASE("structured solve matches the dense factorization", "[linalg]") {
    sim::SplitMix64 rng(61);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.next() % 10;
        std::vector<double> d(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = 0.01 + rng.uniform() * 5.0;
            b[i] = rng.normal();
        }
        const double c = rng.uniform() * 2.0;
        const auto x = solve_diag_plus_rank_one(d, c, b);
        Matrix a(n, n, c);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += d[i];
        const auto y = cholesky_solve(cholesky(a), b);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x[i] == Approx(y[i]).margin(1e-10));
    }
}

TEST_CASE("cholesky rejects indefinite input", "[linalg]") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 1.0;
    a(0, 1) = a(1, 0) = 3.0;
    CHECK_THROWS_AS(cholesky(a), SingularMatrixError);
}

TEST_CASE("smallest eigenvalue on known matrices", "[linalg]") {
    Matrix a(2, 2);
    a(0, 0) = a(1, 1) = 2.0;
    a(0, 1) = a(1, 0) = 1.0;
    CHECK(smallest_eigenvalue(a) == Approx(1.0).epsilon(1e-12));

    Matrix b(3, 3);
    b(0, 0) = 2.0; b(1, 1) = 3.0; b(2, 2) = 4.0;
    b(0, 1) = b(1, 0) = 1.0;
    // eigenvalues of [[2,1,0],[1,3,0],[0,0,4]]: (5 +- sqrt(5))/2 and 4
    CHECK(smallest_eigenvalue(b) == Approx((5.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-12));
}
