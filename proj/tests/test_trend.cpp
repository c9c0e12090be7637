#include <catch2/catch.hpp>

#include "ccor/trend.hpp"
#include "test_support.hpp"

using namespace ccor;
using trend::gls_fit;
using trend::ols_fit;
using trend::wls_fit;

TEST_CASE("identity covariance reduces to ols on an exact line", "[trend]") {
    const auto f = gls_fit({1, 2}, {1, 2}, Matrix::identity(2));
    CHECK(f.beta == Approx(1.0).epsilon(1e-14));
    CHECK(f.variance == Approx(0.2).epsilon(1e-14));
}

TEST_CASE("correlated covariance, hand-inverted", "[trend]") {
    Matrix C(2, 2);
    C(0, 0) = C(1, 1) = 2.0;
    C(0, 1) = C(1, 0) = 1.0;
    const auto f = gls_fit({1, 1}, {2, 4}, C);
    CHECK(f.beta == Approx(3.0).epsilon(1e-13));
    CHECK(f.variance == Approx(1.5).epsilon(1e-13));
}

TEST_CASE("wls on hand-computed weights", "[trend]") {
    const auto f = wls_fit({1, 2}, {2, 4}, {1, 4});
    CHECK(f.beta == Approx(2.0).epsilon(1e-13));
    const auto o = ols_fit({1, 2}, {2, 4});
    CHECK(o.beta == Approx(2.0).epsilon(1e-13));   // exact line
}

TEST_CASE("unit weights equal ols", "[trend]") {
    const auto w = wls_fit({1, 3, 5}, {0.5, 2.0, 4.0}, {1, 1, 1});
    const auto o = ols_fit({1, 3, 5}, {0.5, 2.0, 4.0});
    CHECK(w.beta == Approx(o.beta).epsilon(1e-14));
    CHECK(w.variance == Approx(o.variance).epsilon(1e-14));
}

TEST_CASE("gls with a diagonal matrix equals wls", "[trend][property]") {
    sim::SplitMix64 rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng.next() % 6;
        std::vector<double> x(n), eta(n), v(n);
        Matrix C(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = testsupport::uniform(rng, 0.5, 20.0);
            eta[i] = rng.normal();
            v[i] = testsupport::uniform(rng, 0.05, 3.0);
            C(i, i) = v[i];
        }
        const auto g = gls_fit(x, eta, C);
        const auto w = wls_fit(x, eta, v);
        CHECK(std::abs(g.beta - w.beta) < 1e-12 * std::max(1.0, std::abs(g.beta)));
        CHECK(std::abs(g.variance - w.variance) < 1e-12 * g.variance);
    }
}

TEST_CASE("reported variance equals the recomputed normal-equation inverse", "[trend]") {
    sim::SplitMix64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng.next() % 5;
        std::vector<double> x(n), eta(n);
        Matrix C(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = testsupport::uniform(rng, 0.5, 10.0);
            eta[i] = rng.normal();
            C(i, i) = testsupport::uniform(rng, 0.2, 2.0);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                C(i, j) = C(j, i) = 0.05 * std::sqrt(C(i, i) * C(j, j));
        const auto f = gls_fit(x, eta, C);
        const Matrix l = cholesky(C);
        const auto w = cholesky_solve(l, x);
        CHECK(f.variance == Approx(1.0 / dot(x, w)).epsilon(1e-12));
    }
}

TEST_CASE("non-spd covariance fails loudly", "[trend]") {
    Matrix C(2, 2);
    C(0, 0) = 1.0;
    C(1, 1) = 1.0;
    C(0, 1) = C(1, 0) = 2.0;   // indefinite
    CHECK_THROWS_AS(gls_fit({1, 2}, {1, 2}, C), SingularMatrixError);
}

TEST_CASE("intercept variant reports the slope coefficient", "[trend]") {
    // exact affine data: eta = 1 + 2x; through-origin misses, intercept recovers
    const std::vector<double> x{1, 2, 3}, eta{3, 5, 7};
    const auto with = ols_fit(x, eta, true);
    CHECK(with.beta == Approx(2.0).epsilon(1e-12));
    const auto without = ols_fit(x, eta, false);
    CHECK(without.beta > 2.0);
}
