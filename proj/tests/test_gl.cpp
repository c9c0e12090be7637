#include <catch2/catch.hpp>

#include <cmath>

#include "ccor/gl.hpp"
#include "test_support.hpp"

using namespace ccor;
using testsupport::SplitMix64;

namespace {

StudyInput sym_study() {
    StudyInput s;
    s.measure = EffectMeasure::odds_ratio;
    s.log_estimates = {0.0};
    s.variances = {1.0};
    s.group_totals = {10, 10};
    s.total_cases = 10;
    return s;
}

StudyInput quad_study() {
    // n=1, N=(4,6), M1=5, OR=2: the stationary point solves A^2 - 21A + 60 = 0
    StudyInput s;
    s.measure = EffectMeasure::odds_ratio;
    s.log_estimates = {std::log(2.0)};
    s.variances = {1.0};
    s.group_totals = {4, 6};
    s.total_cases = 5;
    return s;
}

StudyInput rr_study() {
    StudyInput s;
    s.measure = EffectMeasure::relative_risk;
    s.log_estimates = {0.0};
    s.variances = {1.0};
    s.group_totals = {4, 6};
    s.total_cases = 5;
    return s;
}

const double kQuadRoot = (21.0 - std::sqrt(201.0)) / 2.0;   // 3.4112765606210873

}  // namespace

TEST_CASE("objective matches hand evaluation", "[gl]") {
    // symmetric: four equal entropic terms, zero linear term
    CHECK(gl::objective({5.0}, sym_study()) == Approx(4.0 * (5.0 * std::log(5.0) - 5.0)).epsilon(1e-14));
    CHECK(gl::objective({5.0}, sym_study()) == Approx(12.188758248682007).epsilon(1e-13));
    // entropic building block at 1
    CHECK(gl::entropic(1.0) == Approx(-1.0));
    CHECK(gl::entropic(0.0) == 0.0);
    // rr case, independent scalar evaluation of the integrated objective:
    // A (ln n0 - ln N1) + (A ln A - A) + (a0 ln a0 - a0) at A=3, a0=2
    const double hand = 3.0 * (std::log(4.0) - std::log(6.0)) + (3 * std::log(3.0) - 3) +
                        (2 * std::log(2.0) - 2);
    CHECK(gl::objective({3.0}, rr_study()) == Approx(hand).epsilon(1e-14));
    CHECK(gl::objective({3.0}, rr_study()) == Approx(-1.5342640972002735).epsilon(1e-13));
}

TEST_CASE("objective refuses infeasible points", "[gl]") {
    CHECK_THROWS_AS(gl::objective({11.0}, sym_study()), InfeasiblePointError);
    CHECK_THROWS_AS(gl::gradient({-1.0}, sym_study()), InfeasiblePointError);
}

TEST_CASE("gradient vanishes where the closed-form oracle says", "[gl]") {
    CHECK(gl::gradient({5.0}, sym_study())[0] == Approx(0.0).margin(1e-14));
    CHECK(gl::gradient({kQuadRoot}, quad_study())[0] == Approx(0.0).margin(1e-9));
}

TEST_CASE("gradient matches central differences on random feasible points", "[gl]") {
    SplitMix64 rng(2024);
    for (auto measure : {EffectMeasure::odds_ratio, EffectMeasure::relative_risk}) {
        for (int rep = 0; rep < 100; ++rep) {
            const StudyInput s = testsupport::random_gl_study(rng, measure);
            const auto A = testsupport::random_feasible_point(rng, s);
            const auto g = gl::gradient(A, s);
            const auto fd = testsupport::central_difference_gradient(A, s);
            double err = 0.0, scale = 1.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                err = std::max(err, std::abs(g[i] - fd[i]));
                scale = std::max(scale, std::abs(g[i]));
            }
            CHECK(err / scale < 1e-6);
        }
    }
}

TEST_CASE("hessian matches hand arithmetic and differentiated gradient", "[gl]") {
    CHECK(gl::hessian({5.0}, sym_study())(0, 0) == Approx(0.8).epsilon(1e-14));
    CHECK(gl::hessian({3.0}, rr_study())(0, 0) == Approx(5.0 / 6.0).epsilon(1e-14));

    SplitMix64 rng(7);
    for (auto measure : {EffectMeasure::odds_ratio, EffectMeasure::relative_risk}) {
        for (int rep = 0; rep < 40; ++rep) {
            const StudyInput s = testsupport::random_gl_study(rng, measure);
            const auto A = testsupport::random_feasible_point(rng, s);
            const Matrix H = gl::hessian(A, s);
            const std::size_t n = A.size();
            const double h0 = std::cbrt(2.2e-16);
            double err = 0.0, scale = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                auto ap = A, am = A;
                const double h = h0 * std::max(1.0, std::abs(A[j]));
                ap[j] += h;
                am[j] -= h;
                const auto gp = gl::gradient(ap, s), gm = gl::gradient(am, s);
                for (std::size_t i = 0; i < n; ++i) {
                    const double fd = (gp[i] - gm[i]) / (2.0 * h);
                    err = std::max(err, std::abs(H(i, j) - fd));
                    scale = std::max(scale, std::abs(H(i, j)));
                }
            }
            CHECK(err / scale < 1e-5);
            CHECK(smallest_eigenvalue(H) > 0.0);
            CHECK_NOTHROW(cholesky(H));
        }
    }
}

TEST_CASE("default init is the null expected value", "[gl]") {
    StudyInput s = sym_study();
    CHECK(gl::default_init(s)[0] == Approx(5.0));
    s.group_totals = {4, 6};
    s.total_cases = 5;
    CHECK(gl::default_init(s)[0] == Approx(3.0));
    s.log_estimates = {0.0, 0.0};
    s.variances = {1.0, 1.0};
    s.group_totals = {2, 3, 5};
    s.total_cases = 4;
    const auto init = gl::default_init(s);
    CHECK(init[0] == Approx(1.2));
    CHECK(init[1] == Approx(2.0));
}

TEST_CASE("convex solver finds the closed-form minimizer", "[gl]") {
    const auto sym = gl::solve_convex(sym_study());
    REQUIRE(sym.report.termination == Termination::converged);
    CHECK(sym.counts->A[0] == Approx(5.0).margin(1e-9));
    CHECK(sym.counts->a0 == Approx(5.0).margin(1e-9));
    CHECK(sym.counts->B[0] == Approx(5.0).margin(1e-9));
    CHECK(sym.counts->b0 == Approx(5.0).margin(1e-9));

    const auto quad = gl::solve_convex(quad_study());
    REQUIRE(quad.report.termination == Termination::converged);
    CHECK(quad.counts->A[0] == Approx(kQuadRoot).margin(1e-9));
    CHECK(quad.counts->a0 == Approx(5.0 - kQuadRoot).margin(1e-9));
    CHECK(quad.counts->b0 == Approx(kQuadRoot - 1.0).margin(1e-9));
    CHECK(quad.counts->B[0] == Approx(6.0 - kQuadRoot).margin(1e-9));
}

TEST_CASE("convexity holds along random segments", "[gl]") {
    SplitMix64 rng(99);
    for (auto measure : {EffectMeasure::odds_ratio, EffectMeasure::relative_risk}) {
        for (int rep = 0; rep < 60; ++rep) {
            const StudyInput s = testsupport::random_gl_study(rng, measure);
            const auto A1 = testsupport::random_feasible_point(rng, s);
            const auto A2 = testsupport::random_feasible_point(rng, s);
            const double f1 = gl::objective(A1, s), f2 = gl::objective(A2, s);
            for (double lam : {0.25, 0.5, 0.75}) {
                std::vector<double> mid(A1.size());
                for (std::size_t i = 0; i < mid.size(); ++i)
                    mid[i] = lam * A1[i] + (1 - lam) * A2[i];
                CHECK(gl::objective(mid, s) <= lam * f1 + (1 - lam) * f2 + 1e-10);
            }
        }
    }
}

TEST_CASE("minimizer is independent of the starting point", "[gl]") {
    SplitMix64 rng(512);
    for (int rep = 0; rep < 20; ++rep) {
        const auto measure = rep % 2 ? EffectMeasure::relative_risk : EffectMeasure::odds_ratio;
        const StudyInput s = testsupport::random_gl_study(rng, measure);
        std::vector<double> reference;
        for (int start = 0; start < 5; ++start) {
            gl::GlOptions opts;
            opts.init = testsupport::random_feasible_point(rng, s);
            const auto r = gl::solve_convex(s, opts);
            REQUIRE(r.report.termination == Termination::converged);
            if (reference.empty()) {
                reference = r.counts->A;
            } else {
                for (std::size_t i = 0; i < reference.size(); ++i)
                    CHECK(std::abs(r.counts->A[i] - reference[i]) < 1e-6);
            }
        }
    }
}

TEST_CASE("solution reproduces the reported estimates and conserves totals", "[gl]") {
    SplitMix64 rng(31);
    for (auto measure : {EffectMeasure::odds_ratio, EffectMeasure::relative_risk}) {
        for (int rep = 0; rep < 25; ++rep) {
            const StudyInput s = testsupport::random_gl_study(rng, measure);
            const auto r = gl::solve_convex(s);
            REQUIRE(r.report.termination == Termination::converged);
            const auto& c = *r.counts;
            double sumA = 0.0;
            for (std::size_t i = 0; i < c.A.size(); ++i) {
                const double plug =
                    measure == EffectMeasure::odds_ratio
                        ? std::log(c.A[i] * c.b0 / (c.a0 * c.B[i]))
                        : std::log(c.A[i] * s.reference_total() / (s.alternative_total(i) * c.a0));
                CHECK(std::abs(plug - s.log_estimates[i]) < 1e-8);
                sumA += c.A[i];
                if (measure == EffectMeasure::odds_ratio)
                    CHECK(c.A[i] + c.B[i] == Approx(s.alternative_total(i)).epsilon(1e-12));
            }
            CHECK(sumA + c.a0 == Approx(*s.total_cases).epsilon(1e-12));
            if (measure == EffectMeasure::odds_ratio)
                CHECK(c.a0 + c.b0 == Approx(s.reference_total()).epsilon(1e-12));
        }
    }
}

TEST_CASE("infeasible problems are reported as such", "[gl]") {
    StudyInput s = sym_study();
    s.total_cases = 19.0;   // valid study, but interior requires A in (9,10) & a0 in (9,10)
    const auto r = gl::solve_convex(s);
    CHECK(r.report.termination == Termination::converged);   // still feasible

    // classic baseline survives the symmetric case
    const auto cls = gl::solve_classic(sym_study());
    REQUIRE(cls.report.termination == Termination::converged);
    CHECK(cls.counts->A[0] == Approx(5.0).margin(1e-6));
}

TEST_CASE("rr counts above the group total trigger a warning, not an error", "[gl]") {
    StudyInput s;
    s.measure = EffectMeasure::relative_risk;
    s.log_estimates = {std::log(10.0)};
    s.variances = {1.0};
    s.group_totals = {100, 5};   // tiny exposed group, large reported risk
    s.total_cases = 50;
    const auto r = gl::solve_convex(s);
    REQUIRE(r.report.termination == Termination::converged);
    CHECK(r.counts->A[0] > 5.0);
    CHECK(r.report.diagnostic.find("warning") != std::string::npos);
}

TEST_CASE("classic iteration walks out of the domain on tight controls", "[gl]") {
    // one control per group: adjusted estimates are far from the crude table
    StudyInput s;
    s.measure = EffectMeasure::odds_ratio;
    s.log_estimates = {std::log(0.938083032005531), std::log(1.017776140013085),
                       std::log(1.25), std::log(15.063755630590853)};
    s.variances = {0.1, 0.1, 0.1, 0.1};
    const std::vector<double> cases = {120, 78, 105, 38, 25};
    double m1 = 0.0;
    for (double c : cases) m1 += c;
    s.total_cases = m1;
    for (double c : cases) s.group_totals.push_back(c + 1.0);

    const auto cls = gl::solve_classic(s);
    CHECK(cls.report.termination == Termination::domain_violation);

    const auto cvx = gl::solve_convex(s);
    REQUIRE(cvx.report.termination == Termination::converged);
    CHECK(cvx.counts->strictly_positive());
}
