#include <catch2/catch.hpp>

#include "ccor/covariance.hpp"
#include "ccor/hamling.hpp"
#include "test_support.hpp"

using namespace ccor;
using covariance::covariance_matrix;
using covariance::pairwise_correlation;

namespace {

PseudoCounts make_counts(EffectMeasure m, std::vector<double> A, double a0,
                         std::vector<double> B, double b0) {
    PseudoCounts c;
    c.measure = m;
    c.A = std::move(A);
    c.a0 = a0;
    c.B = std::move(B);
    c.b0 = b0;
    return c;
}

}  // namespace

TEST_CASE("uniform counts give correlation one half", "[covariance]") {
    const auto c = make_counts(EffectMeasure::odds_ratio, {1, 1}, 1, {1, 1}, 1);
    CHECK(pairwise_correlation(c, 0, 1) == Approx(0.5).epsilon(1e-15));
    const auto c7 = make_counts(EffectMeasure::odds_ratio, {7, 7}, 7, {7, 7}, 7);
    CHECK(pairwise_correlation(c7, 0, 1) == Approx(0.5).epsilon(1e-15));
}

TEST_CASE("rr correlation on hand-computed counts", "[covariance]") {
    const auto c = make_counts(EffectMeasure::relative_risk, {1, 1}, 1, {2, 2}, 2);
    CHECK(pairwise_correlation(c, 0, 1) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("correlations are invariant under count scaling", "[covariance][property]") {
    sim::SplitMix64 rng(91);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 2 + rng.next() % 5;
        PseudoCounts c;
        c.measure = EffectMeasure::odds_ratio;
        c.a0 = testsupport::uniform(rng, 1, 300);
        c.b0 = testsupport::uniform(rng, 1, 300);
        for (std::size_t i = 0; i < n; ++i) {
            c.A.push_back(testsupport::uniform(rng, 1, 300));
            c.B.push_back(testsupport::uniform(rng, 1, 300));
        }
        const double r_base = pairwise_correlation(c, 0, n - 1);
        for (double k : {0.1, 10.0, 3.7}) {
            PseudoCounts ck = c;
            ck.a0 *= k;
            ck.b0 *= k;
            for (auto& v : ck.A) v *= k;
            for (auto& v : ck.B) v *= k;
            CHECK(std::abs(pairwise_correlation(ck, 0, n - 1) - r_base) < 1e-12);
        }
        CHECK(r_base > 0.0);
        CHECK(r_base < 1.0);
    }
}

TEST_CASE("matrix carries reported variances on the diagonal", "[covariance]") {
    const auto c = make_counts(EffectMeasure::odds_ratio, {3, 3}, 6, {3, 3}, 6);
    const auto w = covariance_matrix(c, {0.25, 0.49});
    CHECK(w.matrix(0, 0) == 0.25);
    CHECK(w.matrix(1, 1) == 0.49);
    CHECK(w.matrix(0, 1) == w.matrix(1, 0));
    CHECK(w.correlations(0, 0) == 1.0);
}

TEST_CASE("counts solving the variance identity give equal off-diagonals", "[covariance]") {
    // a Hamling solution reproduces V_i, so C_ij = 1/a0 + 1/b0 exactly
    const auto c = make_counts(EffectMeasure::odds_ratio, {3, 3}, 6, {3, 3}, 6);
    const auto w = covariance_matrix(c, {1.0, 1.0});
    CHECK(w.matrix(0, 1) == Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("hamling identity r = (1/a0 + 1/b0)/sqrt(Vi Vj)", "[covariance][property]") {
    sim::SplitMix64 rng(13);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng.next() % 6;
        hamling::HamlingInput in;
        in.measure = EffectMeasure::odds_ratio;
        for (std::size_t i = 0; i < n; ++i) {
            in.ratios.push_back(testsupport::uniform(rng, 0.05, 20.0));
            in.variances.push_back(testsupport::uniform(rng, 0.01, 5.0));
        }
        in.p = testsupport::uniform(rng, 0.05, 0.95);
        in.z = testsupport::uniform(rng, 0.1, 10.0);
        const auto r = hamling::solve(in);
        REQUIRE(r.report.termination == Termination::converged);
        const auto& c = *r.counts;
        const double shared = 1.0 / c.a0 + 1.0 / c.b0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double expect = shared / std::sqrt(in.variances[i] * in.variances[j]);
                CHECK(std::abs(pairwise_correlation(c, i, j) - expect) < 1e-8);
            }
    }
}

TEST_CASE("minimum eigenvalue is reported", "[covariance]") {
    const auto c = make_counts(EffectMeasure::odds_ratio, {3, 3}, 6, {3, 3}, 6);
    const auto w = covariance_matrix(c, {1.0, 1.0});
    // 2x2 with unit diagonal and off-diagonal 1/3: eigenvalues 2/3 and 4/3
    CHECK(w.min_eigenvalue == Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("rr radicand failures raise instead of clamping", "[covariance]") {
    // B < A makes the per-level term negative for relative risks
    const auto bad = make_counts(EffectMeasure::relative_risk, {10, 10}, 2, {1, 1}, 4);
    CHECK_THROWS_AS(pairwise_correlation(bad, 0, 1), InfeasiblePointError);
}

TEST_CASE("index handling", "[covariance]") {
    const auto c = make_counts(EffectMeasure::odds_ratio, {3, 3}, 6, {3, 3}, 6);
    CHECK_THROWS_AS(pairwise_correlation(c, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(pairwise_correlation(c, 0, 5), std::out_of_range);
}
