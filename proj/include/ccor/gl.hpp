#pragma once

// Pseudo-count reconstruction from group totals and total cases, cast as a
// strictly convex entropic minimization over the case counts A, plus the
// classic undamped Newton iteration it replaces.
//
// OR objective (minimized over 0 < A < N_+, with a0 = M1 - sum A and the
// complements B = N_+ - A, b0 = n0 - a0 implied):
//     G(A) = -L^T A + f(a0) + sum f(B_i) + sum f(A_i) + f(b0),
// RR objective (only A > 0 and a0 > 0 constrain; N_+ and n0 stay fixed):
//     H(A) = A^T (-R - log N_+ + log n0) + sum f(A_i) + f(a0),
// where f(x) = x log x - x is the entropic distance. Both have a unique
// interior minimizer whenever the feasible region is nonempty, so a Newton
// method safeguarded by a fraction-to-boundary rule and an Armijo line
// search converges from any feasible start.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ccor/linalg.hpp"
#include "ccor/types.hpp"

namespace ccor {
namespace gl {

struct GlOptions {
    double tol_grad = 1e-10;           // infinity norm of the gradient
    int max_iter = 100;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double boundary_fraction = 0.99;   // fraction-to-boundary rule
    std::optional<std::vector<double>> init;  // overrides the null expected value
};

struct GlSolve {
    std::optional<PseudoCounts> counts;
    SolveReport report;
};

// Derived quantities at a work point A. For OR all four cell groups are
// complements of A; for RR the totals are carried through unchanged.
struct Workpoint {
    std::vector<double> A;
    double a0 = 0.0;
    std::vector<double> B;   // OR: non-cases; RR: alternative group totals
    double b0 = 0.0;         // OR: reference non-cases; RR: reference total
};

inline Workpoint derive_cells(const std::vector<double>& A, const StudyInput& study) {
    Workpoint w;
    w.A = A;
    double sumA = 0.0;
    for (double v : A) sumA += v;
    w.a0 = *study.total_cases - sumA;
    const std::size_t n = A.size();
    w.B.resize(n);
    if (study.measure == EffectMeasure::odds_ratio) {
        for (std::size_t i = 0; i < n; ++i) w.B[i] = study.alternative_total(i) - A[i];
        w.b0 = study.reference_total() - w.a0;
    } else {
        for (std::size_t i = 0; i < n; ++i) w.B[i] = study.alternative_total(i);
        w.b0 = study.reference_total();
    }
    return w;
}

inline bool feasible(const std::vector<double>& A, const StudyInput& study) {
    const Workpoint w = derive_cells(A, study);
    if (w.a0 <= 0.0) return false;
    for (double v : w.A) if (v <= 0.0) return false;
    if (study.measure == EffectMeasure::odds_ratio) {
        if (w.b0 <= 0.0) return false;
        for (double v : w.B) if (v <= 0.0) return false;
    }
    return true;
}

// Entropic distance x log x - x, continuously extended by 0 at x = 0.
inline double entropic(double x) {
    return x > 0.0 ? x * std::log(x) - x : 0.0;
}

inline double objective(const std::vector<double>& A, const StudyInput& study) {
    if (!feasible(A, study))
        throw InfeasiblePointError("objective requested at an infeasible point");
    const Workpoint w = derive_cells(A, study);
    const auto& L = study.log_estimates;
    double g = 0.0;
    if (study.measure == EffectMeasure::odds_ratio) {
        for (std::size_t i = 0; i < A.size(); ++i)
            g += -L[i] * A[i] + entropic(A[i]) + entropic(w.B[i]);
        g += entropic(w.a0) + entropic(w.b0);
    } else {
        const double log_n0 = std::log(study.reference_total());
        for (std::size_t i = 0; i < A.size(); ++i)
            g += A[i] * (-L[i] - std::log(study.alternative_total(i)) + log_n0) + entropic(A[i]);
        g += entropic(w.a0);
    }
    return g;
}

inline std::vector<double> gradient(const std::vector<double>& A, const StudyInput& study) {
    if (!feasible(A, study))
        throw InfeasiblePointError("gradient requested at an infeasible point");
    const Workpoint w = derive_cells(A, study);
    const auto& L = study.log_estimates;
    std::vector<double> g(A.size());
    if (study.measure == EffectMeasure::odds_ratio) {
        const double la0 = std::log(w.a0), lb0 = std::log(w.b0);
        for (std::size_t i = 0; i < A.size(); ++i)
            g[i] = -L[i] - la0 - std::log(w.B[i]) + std::log(A[i]) + lb0;
    } else {
        const double la0 = std::log(w.a0), ln0 = std::log(study.reference_total());
        for (std::size_t i = 0; i < A.size(); ++i)
            g[i] = -L[i] + std::log(A[i]) - std::log(study.alternative_total(i)) - la0 + ln0;
    }
    return g;
}

// Hessian is diag(1/A + 1/B) + (1/a0 + 1/b0) 11^T for OR and
// diag(1/A) + (1/a0) 11^T for RR; both symmetric positive definite on the
// open feasible region.
struct HessianParts {
    std::vector<double> diag;
    double rank_one = 0.0;
};

inline HessianParts hessian_parts(const std::vector<double>& A, const StudyInput& study) {
    if (!feasible(A, study))
        throw InfeasiblePointError("hessian requested at an infeasible point");
    const Workpoint w = derive_cells(A, study);
    HessianParts h;
    h.diag.resize(A.size());
    if (study.measure == EffectMeasure::odds_ratio) {
        for (std::size_t i = 0; i < A.size(); ++i) h.diag[i] = 1.0 / w.A[i] + 1.0 / w.B[i];
        h.rank_one = 1.0 / w.a0 + 1.0 / w.b0;
    } else {
        for (std::size_t i = 0; i < A.size(); ++i) h.diag[i] = 1.0 / w.A[i];
        h.rank_one = 1.0 / w.a0;
    }
    return h;
}

inline Matrix hessian(const std::vector<double>& A, const StudyInput& study) {
    const HessianParts h = hessian_parts(A, study);
    const std::size_t n = A.size();
    Matrix m(n, n, h.rank_one);
    for (std::size_t i = 0; i < n; ++i) m(i, i) += h.diag[i];
    return m;
}

// Null expected value M1 * N_+ / sum(N), clipped into the strict interior
// when it lands within 1e-9 of a bound.
inline std::vector<double> default_init(const StudyInput& study) {
    const std::size_t n = study.n_levels();
    double sumN = 0.0;
    for (double v : study.group_totals) sumN += v;
    std::vector<double> A(n);
    for (std::size_t i = 0; i < n; ++i)
        A[i] = *study.total_cases * study.alternative_total(i) / sumN;
    for (std::size_t i = 0; i < n; ++i) {
        const double hi = study.measure == EffectMeasure::odds_ratio
                              ? study.alternative_total(i)
                              : std::numeric_limits<double>::infinity();
        const double mid = std::isfinite(hi) ? 0.5 * hi : A[i] + 1.0;
        if (A[i] < 1e-9) A[i] += 0.99 * (mid - A[i]);
        else if (std::isfinite(hi) && hi - A[i] < 1e-9) A[i] -= 0.99 * (A[i] - mid);
    }
    return A;
}

inline PseudoCounts counts_from(const Workpoint& w, EffectMeasure measure) {
    PseudoCounts c;
    c.measure = measure;
    c.A = w.A;
    c.a0 = w.a0;
    c.B = w.B;
    c.b0 = w.b0;
    return c;
}

// Globally convergent damped Newton minimizer. The step is the Newton
// direction -H^{-1} g solved through the diagonal-plus-rank-one structure,
// shortened first by the fraction-to-boundary rule and then by Armijo
// backtracking on the objective.
inline GlSolve solve_convex(const StudyInput& study_raw, const GlOptions& opts = {}) {
    const StudyInput study = validate_study(study_raw, Method::gl);
    GlSolve out;
    const std::size_t n = study.n_levels();

    std::vector<double> A = opts.init ? *opts.init : default_init(study);
    if (!feasible(A, study)) {
        out.report.termination = Termination::infeasible;
        out.report.diagnostic = "no strictly feasible starting point (check M1 < sum N and "
                                "per-group bounds)";
        return out;
    }

    for (int it = 0; it < opts.max_iter; ++it) {
        const std::vector<double> g = gradient(A, study);
        const double gnorm = norm_inf(g);
        out.report.trajectory.push_back(gnorm);
        if (gnorm <= opts.tol_grad) {
            out.report.iterations = it;
            out.report.final_residual_norm = gnorm;
            out.report.final_objective = objective(A, study);
            out.report.termination = Termination::converged;
            out.counts = counts_from(derive_cells(A, study), study.measure);
            if (study.measure == EffectMeasure::relative_risk) {
                // nothing bounds A by the group totals in RR mode; flag counts
                // that exceed them since such cells cannot be real
                for (std::size_t i = 0; i < n; ++i)
                    if (out.counts->A[i] > study.alternative_total(i)) {
                        out.report.diagnostic =
                            "warning: fitted cases exceed the group total at level " +
                            std::to_string(i + 1);
                        break;
                    }
            }
            return out;
        }

        const HessianParts h = hessian_parts(A, study);
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
        const std::vector<double> d = solve_diag_plus_rank_one(h.diag, h.rank_one, rhs);

        // fraction-to-boundary, relaxed toward 1 as the gradient shrinks so the
        // clip cannot throttle the quadratic tail
        const double frac = std::max(opts.boundary_fraction, 1.0 - std::min(0.01, gnorm));
        double t = 1.0;
        const Workpoint w = derive_cells(A, study);
        double sum_d = 0.0;
        for (double v : d) sum_d += v;
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i] < 0.0) t = std::min(t, frac * A[i] / -d[i]);
            if (study.measure == EffectMeasure::odds_ratio && d[i] > 0.0)
                t = std::min(t, frac * w.B[i] / d[i]);
        }
        if (sum_d > 0.0) t = std::min(t, frac * w.a0 / sum_d);
        if (study.measure == EffectMeasure::odds_ratio && sum_d < 0.0)
            t = std::min(t, frac * w.b0 / -sum_d);

        const double f0 = objective(A, study);
        const double slope = dot(g, d);
        // allow rounding-level objective noise; otherwise the decrease test can
        // reject every step once |f(trial) - f0| falls below double resolution
        const double noise =
            16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));
        const double t_safeguard = t;
        std::vector<double> trial(n);
        while (t > 1e-18) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = A[i] + t * d[i];
            if (feasible(trial, study) &&
                objective(trial, study) <= f0 + opts.armijo_c * t * slope + noise)
                break;
            t *= opts.backtrack_factor;
        }
        if (t <= 1e-18) {
            t = t_safeguard;
            for (std::size_t i = 0; i < n; ++i) trial[i] = A[i] + t * d[i];
        }
        A = trial;
    }

    out.report.iterations = opts.max_iter;
    out.report.final_residual_norm = norm_inf(gradient(A, study));
    out.report.final_objective = objective(A, study);
    out.report.termination = Termination::max_iterations;
    out.report.diagnostic = "gradient norm did not reach tolerance";
    out.counts = counts_from(derive_cells(A, study), study.measure);
    return out;
}

// The original undamped Newton iteration, kept verbatim as a baseline:
// convergence is declared on the step norm ||H^{-1} e||_2 < 1e-4 and any
// iterate that drives a logarithm argument non-positive aborts with
// DomainViolation. For RR the analogous iteration on h(A) is used.
inline GlSolve solve_classic(const StudyInput& study_raw, const GlOptions& opts = {}) {
    const StudyInput study = validate_study(study_raw, Method::gl);
    GlSolve out;
    const std::size_t n = study.n_levels();
    const double step_tol = 1e-4;

    std::vector<double> A = opts.init ? *opts.init : default_init(study);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (!feasible(A, study)) {
            out.report.iterations = it;
            out.report.termination = Termination::domain_violation;
            out.report.diagnostic = "iterate left the domain of the logarithms";
            return out;
        }
        const std::vector<double> g = gradient(A, study);   // e = -g in the usual writing
        const HessianParts h = hessian_parts(A, study);
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
        const std::vector<double> step = solve_diag_plus_rank_one(h.diag, h.rank_one, rhs);
        for (std::size_t i = 0; i < n; ++i) A[i] += step[i];
        const double diff = norm2(step);
        out.report.trajectory.push_back(diff);
        if (diff < step_tol) {
            if (!feasible(A, study)) {
                out.report.iterations = it + 1;
                out.report.termination = Termination::domain_violation;
                out.report.diagnostic = "converged step landed outside the domain";
                return out;
            }
            out.report.iterations = it + 1;
            out.report.final_residual_norm = norm_inf(gradient(A, study));
            out.report.final_objective = objective(A, study);
            out.report.termination = Termination::converged;
            out.counts = counts_from(derive_cells(A, study), study.measure);
            return out;
        }
    }
    out.report.iterations = opts.max_iter;
    out.report.termination = Termination::max_iterations;
    if (feasible(A, study)) {
        out.report.final_residual_norm = norm_inf(gradient(A, study));
        out.counts = counts_from(derive_cells(A, study), study.measure);
    }
    return out;
}

}  // namespace gl
}  // namespace ccor
