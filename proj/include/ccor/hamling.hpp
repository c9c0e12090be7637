#pragma once

// Pseudo-count reconstruction from reported variances plus the control
// ratios p and z. The production solver targets the explicit two-equation
// system in (a0, b0)
//     f1 = ((1-p)/p) b0          - sum_i B_i(a0, b0)
//     f2 = b0/(z p) - a0         - sum_i A_i(a0, b0)
// with the cells
//     OR: A_i = (1 + a0 R_i/b0) / D_i,  B_i = (1 + b0/(a0 R_i)) / D_i,
//         D_i = V_i - 1/a0 - 1/b0
//     RR: A_i = (1 - a0 R_i/b0) / D_i,  B_i = (b0/(a0 R_i) - 1) / D_i,
//         D_i = V_i - 1/a0 + 1/b0
// solved by a damped Gauss-Newton iteration whose line search never lets a
// denominator reach zero. The large initialization a0 = b0 = 10/V_min makes
// every OR denominator positive at the start; from there the OR system is
// always solvable, while the RR system can genuinely have no solution and
// then terminates with an informative infeasibility diagnostic.
//
// When all variances are equal the solution has a closed form through a
// quadratic in c = a0/b0; those equivariant paths double as diagnostics
// (the RR discriminant D < 0 certifies unsolvability).

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccor/types.hpp"

namespace ccor {
namespace hamling {

struct HamlingInput {
    EffectMeasure measure = EffectMeasure::odds_ratio;
    std::vector<double> ratios;      // R_i = exp(log estimate), all positive
    std::vector<double> variances;   // V_i > 0
    double p = 0.0;                  // in (0,1)
    double z = 0.0;                  // > 0

    std::size_t n_levels() const { return ratios.size(); }
};

inline HamlingInput input_from_study(const StudyInput& study) {
    validate_study(study, Method::hamling);
    HamlingInput in;
    in.measure = study.measure;
    in.ratios.reserve(study.n_levels());
    for (double l : study.log_estimates) in.ratios.push_back(std::exp(l));
    in.variances = study.variances;
    in.p = *study.p;
    in.z = *study.z;
    return in;
}

struct HamlingOptions {
    double tol_residual = 1e-10;   // 2-norm of (f1, f2)
    int max_iter = 500;
    std::optional<std::pair<double, double>> init;  // overrides robust init
};

struct HamlingSolve {
    std::optional<PseudoCounts> counts;
    SolveReport report;
    double a0 = 0.0, b0 = 0.0;     // final iterate even when not converged
    double f1 = 0.0, f2 = 0.0;     // final residual components
};

inline double denominator(double a0, double b0, double v, EffectMeasure m) {
    return m == EffectMeasure::odds_ratio ? v - 1.0 / a0 - 1.0 / b0
                                          : v - 1.0 / a0 + 1.0 / b0;
}

// Cell counts implied by a candidate (a0, b0). Throws when a denominator is
// not positive; counts themselves may still come out negative for RR and are
// validated by the caller.
inline void cells(double a0, double b0, const HamlingInput& in,
                  std::vector<double>& A, std::vector<double>& B) {
    const std::size_t n = in.n_levels();
    A.resize(n);
    B.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double den = denominator(a0, b0, in.variances[i], in.measure);
        if (!(den > 0.0))
            throw DenominatorNonPositiveError(i, den);
        const double q = a0 * in.ratios[i] / b0;
        if (in.measure == EffectMeasure::odds_ratio) {
            A[i] = (1.0 + q) / den;
            B[i] = (1.0 + 1.0 / q) / den;
        } else {
            A[i] = (1.0 - q) / den;
            B[i] = (1.0 / q - 1.0) / den;
        }
    }
}

inline std::pair<double, double> residual(double a0, double b0, const HamlingInput& in) {
    std::vector<double> A, B;
    cells(a0, b0, in, A, B);
    double sumA = 0.0, sumB = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) { sumA += A[i]; sumB += B[i]; }
    const double f1 = (1.0 - in.p) / in.p * b0 - sumB;
    const double f2 = b0 / (in.z * in.p) - a0 - sumA;
    return {f1, f2};
}

// Magnitude of the terms cancelled inside the residual; the achievable
// residual in doubles is this times a small multiple of machine epsilon, so
// convergence tests use max(tolerance, rounding floor).
inline double residual_scale(double a0, double b0, const HamlingInput& in) {
    std::vector<double> A, B;
    cells(a0, b0, in, A, B);
    double sumA = 0.0, sumB = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) { sumA += A[i]; sumB += B[i]; }
    return std::max((1.0 - in.p) / in.p * b0 + sumB, b0 / (in.z * in.p) + a0 + sumA);
}

inline double effective_tolerance(double tol, double a0, double b0, const HamlingInput& in) {
    return std::max(tol, 32.0 * 2.220446049250313e-16 * residual_scale(a0, b0, in));
}

// Analytic Jacobian of (f1, f2) with respect to (a0, b0).
inline void jacobian(double a0, double b0, const HamlingInput& in, double J[2][2]) {
    const bool odds = in.measure == EffectMeasure::odds_ratio;
    double dA_da = 0.0, dA_db = 0.0, dB_da = 0.0, dB_db = 0.0;
    for (std::size_t i = 0; i < in.n_levels(); ++i) {
        const double den = denominator(a0, b0, in.variances[i], in.measure);
        if (!(den > 0.0))
            throw DenominatorNonPositiveError(i, den);
        const double dden_da = 1.0 / (a0 * a0);
        const double dden_db = odds ? 1.0 / (b0 * b0) : -1.0 / (b0 * b0);
        const double r = in.ratios[i];
        const double q = a0 * r / b0;
        const double numA = odds ? 1.0 + q : 1.0 - q;
        const double numB = odds ? 1.0 + 1.0 / q : 1.0 / q - 1.0;
        const double dnumA_da = (odds ? 1.0 : -1.0) * r / b0;
        const double dnumA_db = (odds ? -1.0 : 1.0) * a0 * r / (b0 * b0);
        const double dnumB_da = -b0 / (a0 * a0 * r);
        const double dnumB_db = 1.0 / (a0 * r);
        dA_da += (dnumA_da * den - numA * dden_da) / (den * den);
        dA_db += (dnumA_db * den - numA * dden_db) / (den * den);
        dB_da += (dnumB_da * den - numB * dden_da) / (den * den);
        dB_db += (dnumB_db * den - numB * dden_db) / (den * den);
    }
    J[0][0] = -dB_da;
    J[0][1] = (1.0 - in.p) / in.p - dB_db;
    J[1][0] = -1.0 - dA_da;
    J[1][1] = 1.0 / (in.z * in.p) - dA_db;
}

// Initialization a0 = b0 = 10/V_min; then 1/a0 + 1/b0 = V_min/5 < V_min, so
// every OR denominator starts positive.
inline std::pair<double, double> robust_init(const HamlingInput& in) {
    double vmin = in.variances[0];
    for (double v : in.variances) vmin = std::min(vmin, v);
    return {10.0 / vmin, 10.0 / vmin};
}

// Relative misfit of the ratios implied by a candidate point:
// ((p - p')/p)^2 + ((z - z')/z)^2 with p' = b0/(b0 + sum B) and
// z' = (b0 + sum B)/(a0 + sum A). Zero exactly at a solution; usable as a
// compatibility score for externally produced (a0, b0).
inline double classic_pz_residual(double a0, double b0, const HamlingInput& in) {
    std::vector<double> A, B;
    cells(a0, b0, in, A, B);
    double sumA = a0, sumB = b0;
    for (std::size_t i = 0; i < A.size(); ++i) { sumA += A[i]; sumB += B[i]; }
    const double pp = b0 / sumB;
    const double zp = sumB / sumA;
    const double dp = (in.p - pp) / in.p;
    const double dz = (in.z - zp) / in.z;
    return dp * dp + dz * dz;
}

namespace detail {

inline bool denominators_positive(double a0, double b0, const HamlingInput& in) {
    if (!(a0 > 0.0) || !(b0 > 0.0)) return false;
    for (double v : in.variances)
        if (!(denominator(a0, b0, v, in.measure) > 0.0)) return false;
    return true;
}

// Largest setback along (da, db) keeping all denominators positive: the
// boundary is located by bisection and the step stops at 90% of it.
inline double truncate_step(double a0, double b0, double da, double db,
                            const HamlingInput& in) {
    if (denominators_positive(a0 + da, b0 + db, in)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (denominators_positive(a0 + mid * da, b0 + mid * db, in)) lo = mid;
        else hi = mid;
    }
    return 0.9 * lo;
}

inline HamlingSolve solve_from(double a0, double b0, const HamlingInput& in,
                               const HamlingOptions& opts);

}  // namespace detail

namespace detail {

inline HamlingSolve solve_from(double a0, double b0, const HamlingInput& in,
                               const HamlingOptions& opts) {
    HamlingSolve out;

    if (!detail::denominators_positive(a0, b0, in)) {
        out.a0 = a0; out.b0 = b0;
        out.report.termination = Termination::infeasible;
        out.report.diagnostic = "initialization violates denominator positivity; "
                                "use the default 10/V_min start";
        return out;
    }

    double f1 = 0.0, f2 = 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
        std::tie(f1, f2) = residual(a0, b0, in);
        const double nf = std::sqrt(f1 * f1 + f2 * f2);
        out.report.trajectory.push_back(nf);
        if (nf <= effective_tolerance(opts.tol_residual, a0, b0, in)) {
            out.report.iterations = it;
            out.report.final_residual_norm = nf;
            out.a0 = a0; out.b0 = b0; out.f1 = f1; out.f2 = f2;
            PseudoCounts c;
            c.measure = in.measure;
            cells(a0, b0, in, c.A, c.B);
            c.a0 = a0;
            c.b0 = b0;
            const bool valid = c.strictly_positive() &&
                               (in.measure == EffectMeasure::odds_ratio || c.rr_ordered());
            if (!valid) {
                out.report.termination = Termination::infeasible;
                out.report.diagnostic =
                    "residual vanished but the implied cells are not a valid "
                    "reconstruction (non-positive or mis-ordered counts); the inputs "
                    "R, V, p, z admit no solution";
                return out;
            }
            out.report.termination = Termination::converged;
            out.counts = std::move(c);
            return out;
        }

        double J[2][2];
        jacobian(a0, b0, in, J);
        const double phi0 = f1 * f1 + f2 * f2;

        // Gauss-Newton direction, escalating Levenberg-Marquardt damping when
        // the plain step cannot decrease the residual.
        bool moved = false;
        const double jtj00 = J[0][0] * J[0][0] + J[1][0] * J[1][0];
        const double jtj01 = J[0][0] * J[0][1] + J[1][0] * J[1][1];
        const double jtj11 = J[0][1] * J[0][1] + J[1][1] * J[1][1];
        const double g0 = -(J[0][0] * f1 + J[1][0] * f2);
        const double g1r = -(J[0][1] * f1 + J[1][1] * f2);
        for (double lambda : {0.0, 1e-6, 1e-3, 1e-1, 10.0, 1e4}) {
            const double m00 = jtj00 * (1.0 + lambda);
            const double m11 = jtj11 * (1.0 + lambda);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (!(std::abs(det) > 1e-300)) continue;
            const double da = (g0 * m11 - g1r * jtj01) / det;
            const double db = (m00 * g1r - jtj01 * g0) / det;
            double t = detail::truncate_step(a0, b0, da, db, in);
            while (t > 1e-16) {
                try {
                    auto [h1, h2] = residual(a0 + t * da, b0 + t * db, in);
                    if (h1 * h1 + h2 * h2 <= phi0 * (1.0 - 1e-4 * t)) break;
                } catch (const DenominatorNonPositiveError&) {
                    // fell exactly on the boundary; shrink
                }
                t *= 0.5;
            }
            if (t > 1e-16) {
                a0 += t * da;
                b0 += t * db;
                moved = true;
                break;
            }
        }
        if (!moved) {
            out.report.iterations = it;
            out.report.final_residual_norm = nf;
            out.a0 = a0; out.b0 = b0; out.f1 = f1; out.f2 = f2;
            out.report.termination = Termination::infeasible;
            out.report.diagnostic = "descent stalled even with damping; the residual has a "
                                    "non-zero local minimum for these inputs";
            return out;
        }
    }

    std::tie(f1, f2) = residual(a0, b0, in);
    out.a0 = a0; out.b0 = b0; out.f1 = f1; out.f2 = f2;
    out.report.iterations = opts.max_iter;
    out.report.final_residual_norm = std::sqrt(f1 * f1 + f2 * f2);
    out.report.termination = in.measure == EffectMeasure::relative_risk
                                 ? Termination::infeasible
                                 : Termination::max_iterations;
    std::ostringstream ss;
    ss << "no solution reached after " << opts.max_iter << " iterations; residual ("
       << f1 << ", " << f2 << ")";
    if (in.measure == EffectMeasure::relative_risk)
        ss << "; check the inputs R, V, p, z or use the group-total reconstruction, "
              "which always succeeds";
    out.report.diagnostic = ss.str();
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Equivariant (all variances equal) closed forms.

struct EquivariantSummary {
    std::size_t n = 0;
    double r1 = 0.0;   // sum 1/R_i
    double r2 = 0.0;   // sum R_i
    double v = 0.0;    // common variance
};

inline EquivariantSummary summarize(const std::vector<double>& ratios, double v) {
    EquivariantSummary s;
    s.n = ratios.size();
    for (double r : ratios) { s.r1 += 1.0 / r; s.r2 += r; }
    s.v = v;
    return s;
}

struct OrClosedForm {
    double a0 = 0.0, b0 = 0.0;
    double c = 0.0;   // a0/b0
    double D = 0.0;   // quadratic discriminant, provably positive
};

// Unique positive root of the equivariant OR quadratic. D satisfies
// D >= z (n + p r1)^2 > 0, so the + branch always yields the one positive c.
inline OrClosedForm equivariant_or(std::size_t n_, double p, double z,
                                   double r1, double r2, double v) {
    const double n = static_cast<double>(n_);
    OrClosedForm out;
    const double b = n * p * z - n * z + n - p * r1 * z;
    out.D = b * b + 4.0 * z * (n * p + (1.0 - p) * r2) * r1;
    out.c = (b + std::sqrt(out.D)) / (2.0 * z * (n * p + (1.0 - p) * r2));
    out.b0 = (1.0 / v) * (p / (1.0 - p) * (n + r1 / out.c) + 1.0 + 1.0 / out.c);
    out.a0 = out.c * out.b0;
    return out;
}

struct RrEquivariant {
    double D = 0.0;
    bool cond_z_ge_one = false;      // (1-p) z >= 1
    bool cond_r2_bound = false;      // (1-p) z >= ((1-p)/p)^2 4 r2
    std::optional<OrClosedForm> solution;   // present only when feasible
    std::string reason;              // set when infeasible
};

// Residual of the summed system at (a0, b0); the cell sums only involve the
// summaries r1 and r2, so this works without the individual ratios.
inline std::pair<double, double> equivariant_residual(double a0, double b0, std::size_t n_,
                                                      double p, double z, double r1,
                                                      double r2, double v,
                                                      EffectMeasure measure) {
    const double n = static_cast<double>(n_);
    const double den = denominator(a0, b0, v, measure);
    double sumA, sumB;
    if (measure == EffectMeasure::odds_ratio) {
        sumB = (n + b0 * r1 / a0) / den;
        sumA = (n + a0 * r2 / b0) / den;
    } else {
        sumB = (b0 * r1 / a0 - n) / den;
        sumA = (n - a0 * r2 / b0) / den;
    }
    return {(1.0 - p) / p * b0 - sumB, b0 / (z * p) - a0 - sumA};
}

// Equivariant RR solvability check and closed form. Both quadratic branches
// are evaluated; a feasible root must satisfy 0 < c < 1, give b0 > a0 > 0
// and positive cell sums, and reproduce the system residual to 1e-10.
inline RrEquivariant equivariant_rr(std::size_t n_, double p, double z,
                                    double r1, double r2, double v) {
    const double n = static_cast<double>(n_);
    RrEquivariant out;
    const double b = n * (p * z - z - 1.0) - r1 * z * p;
    out.D = b * b - 4.0 * r1 * (n * z * p + r2 * z - r2 * p * z);
    out.cond_z_ge_one = (1.0 - p) * z >= 1.0;
    const double lhs = (1.0 - p) * z;
    const double rhs = ((1.0 - p) / p) * ((1.0 - p) / p) * 4.0 * r2;
    out.cond_r2_bound = lhs >= rhs;
    if (out.D < 0.0) {
        std::ostringstream ss;
        ss << "discriminant D = " << out.D << " is negative: no solution exists; "
           << "(1-p)z = " << lhs << (out.cond_z_ge_one ? " >= 1" : " < 1")
           << ", ((1-p)/p)^2 4 r2 = " << rhs;
        out.reason = ss.str();
        return out;
    }
    const double num = n * (z - p * z + 1.0) + p * r1 * z;
    const double den = 2.0 * z * (n * p + (1.0 - p) * r2);
    const double sq = std::sqrt(out.D);
    for (double root : {(num - sq) / den, (num + sq) / den}) {
        if (!(root > 0.0 && root < 1.0)) continue;
        OrClosedForm cand;
        cand.c = root;
        cand.D = out.D;
        cand.b0 = (1.0 / (v * root)) * (p / (1.0 - p) * (r1 - root * n) + (1.0 - root));
        cand.a0 = root * cand.b0;
        if (!(cand.b0 > cand.a0 && cand.a0 > 0.0)) continue;
        if (!(denominator(cand.a0, cand.b0, v, EffectMeasure::relative_risk) > 0.0)) continue;
        auto [f1, f2] = equivariant_residual(cand.a0, cand.b0, n_, p, z, r1, r2, v,
                                             EffectMeasure::relative_risk);
        if (std::sqrt(f1 * f1 + f2 * f2) > 1e-10 * std::max(1.0, cand.b0)) continue;
        out.solution = cand;
        break;
    }
    if (!out.solution) {
        std::ostringstream ss;
        ss << "D = " << out.D << " is non-negative but neither quadratic root gives "
           << "0 < c < 1 with positive ordered counts";
        out.reason = ss.str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Production entry point.
//
// The symmetric start a0 = b0 = 10/V_min is provably safe for OR but the
// damped iteration can still park at a non-zero local minimum of |f|^2 on
// hard inputs, and for RR the symmetric point sits exactly on the a0 = b0
// ridge while any solution has a0 < b0. A deterministic ladder of restarts
// covers both: the equivariant closed form at the mean variance (exact when
// the variances are equal, a good warm start otherwise) and a set of
// asymmetric/rescaled starts. Everything stays reproducible run to run.

namespace detail {

// OR-only guaranteed solve by nested bisection in (u, c) coordinates with
// u = 1/a0 + 1/b0 and c = a0/b0, where a0 = (1 + c)/u, b0 = (1 + 1/c)/u and
// the cells read A_i = (1 + c R_i)/(V_i - u), B_i = (1 + 1/(c R_i))/(V_i - u).
//
// For fixed c the first equation
//     phi(u) = ((1-p)/p) b0(u) - sum B_i(u)
// is strictly decreasing on the open box 0 < u < V_min and spans +inf..-inf,
// so its root u*(c) always exists and bisection cannot miss it. Substituting
// u*(c) into the second equation leaves one continuous function of c whose
// sign change is scanned on a log grid and then bisected. Any root found this
// way automatically has positive denominators and therefore positive cells.
inline HamlingSolve solve_or_nested(const HamlingInput& in, const HamlingOptions& opts) {
    double vmin = in.variances[0];
    for (double v : in.variances) vmin = std::min(vmin, v);

    const auto phi1 = [&](double u, double c) {
        const double b0 = (1.0 + 1.0 / c) / u;
        double sumB = 0.0;
        for (std::size_t i = 0; i < in.n_levels(); ++i)
            sumB += (1.0 + 1.0 / (c * in.ratios[i])) / (in.variances[i] - u);
        return (1.0 - in.p) / in.p * b0 - sumB;
    };
    int evals = 0;
    const auto u_star = [&](double c) {
        double lo = vmin * 1e-14, hi = vmin * (1.0 - 1e-14);
        for (int k = 0; k < 80; ++k) {
            const double mid = 0.5 * (lo + hi);
            ++evals;
            (phi1(mid, c) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const auto psi = [&](double c) {
        const double u = u_star(c);
        const double a0 = (1.0 + c) / u;
        const double b0 = (1.0 + 1.0 / c) / u;
        double sumA = 0.0;
        for (std::size_t i = 0; i < in.n_levels(); ++i)
            sumA += (1.0 + c * in.ratios[i]) / (in.variances[i] - u);
        return b0 / (in.z * in.p) - a0 - sumA;
    };

    HamlingSolve out;
    // bracket the outer root on a log grid
    double lo = std::log(1e-10), hi = std::log(1e10);
    const int grid = 161;
    double prev_c = std::exp(lo), prev_psi = psi(prev_c);
    double blo = 0.0, bhi = 0.0;
    bool bracketed = false;
    for (int g = 1; g < grid; ++g) {
        const double cg = std::exp(lo + (hi - lo) * g / (grid - 1));
        const double pg = psi(cg);
        if (std::isfinite(prev_psi) && std::isfinite(pg) &&
            ((prev_psi <= 0.0) != (pg <= 0.0))) {
            blo = prev_c;
            bhi = cg;
            bracketed = true;
            break;
        }
        prev_c = cg;
        prev_psi = pg;
    }
    if (!bracketed) {
        out.report.termination = Termination::infeasible;
        out.report.diagnostic = "no sign change of the reduced equation over the scanned "
                                "ratio range";
        out.report.final_residual_norm = std::abs(prev_psi);
        return out;
    }
    double psi_lo = prev_psi;   // psi at blo by construction of the bracket
    for (int k = 0; k < 200; ++k) {
        const double mid = std::sqrt(blo * bhi);
        const double pm = psi(mid);
        if ((pm <= 0.0) == (psi_lo <= 0.0)) {
            blo = mid;
            psi_lo = pm;
        } else {
            bhi = mid;
        }
        if (bhi / blo < 1.0 + 4e-16) break;
    }
    const double c = std::sqrt(blo * bhi);
    const double u = u_star(c);
    double a0 = (1.0 + c) / u;
    double b0 = (1.0 + 1.0 / c) / u;

    // two plain Newton polish steps push the residual to the rounding floor
    for (int k = 0; k < 3; ++k) {
        auto [f1, f2] = residual(a0, b0, in);
        double J[2][2];
        jacobian(a0, b0, in, J);
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        if (!(std::abs(det) > 1e-300)) break;
        const double da = (-f1 * J[1][1] + f2 * J[0][1]) / det;
        const double db = (f1 * J[1][0] - f2 * J[0][0]) / det;
        if (!denominators_positive(a0 + da, b0 + db, in)) break;
        auto [g1, g2] = residual(a0 + da, b0 + db, in);
        if (g1 * g1 + g2 * g2 >= f1 * f1 + f2 * f2) break;
        a0 += da;
        b0 += db;
    }

    auto [f1, f2] = residual(a0, b0, in);
    out.a0 = a0;
    out.b0 = b0;
    out.f1 = f1;
    out.f2 = f2;
    out.report.iterations = evals;
    out.report.final_residual_norm = std::sqrt(f1 * f1 + f2 * f2);
    out.report.trajectory.push_back(out.report.final_residual_norm);
    if (out.report.final_residual_norm <= effective_tolerance(opts.tol_residual, a0, b0, in)) {
        PseudoCounts counts;
        counts.measure = in.measure;
        cells(a0, b0, in, counts.A, counts.B);
        counts.a0 = a0;
        counts.b0 = b0;
        if (counts.strictly_positive()) {
            out.report.termination = Termination::converged;
            out.counts = std::move(counts);
            return out;
        }
    }
    out.report.termination = Termination::max_iterations;
    out.report.diagnostic = "bisection localized the root but the residual stayed above "
                            "tolerance";
    return out;
}

}  // namespace detail

inline HamlingSolve solve(const HamlingInput& in, const HamlingOptions& opts = {}) {
    if (opts.init)
        return detail::solve_from(opts.init->first, opts.init->second, in, opts);

    double vmin = in.variances[0], vbar = 0.0;
    for (double v : in.variances) {
        vmin = std::min(vmin, v);
        vbar += v / static_cast<double>(in.n_levels());
    }
    const EquivariantSummary s = summarize(in.ratios, vbar);

    if (in.measure == EffectMeasure::odds_ratio) {
        // damped Gauss-Newton from the robust symmetric start handles the
        // well-behaved bulk quickly; the nested bisection is the guaranteed
        // fallback for anything it leaves behind
        const auto [a0, b0] = robust_init(in);
        HamlingSolve out = detail::solve_from(a0, b0, in, opts);
        if (out.report.termination == Termination::converged) return out;
        HamlingSolve nested = detail::solve_or_nested(in, opts);
        return nested.report.termination == Termination::converged ||
                       nested.report.final_residual_norm < out.report.final_residual_norm
                   ? nested
                   : out;
    }

    // relative risks: the symmetric start sits on the a0 = b0 ridge while any
    // solution has a0 < b0, so follow up with asymmetric starts and the
    // equivariant warm start when one exists
    const auto [a0, b0] = robust_init(in);
    HamlingSolve out = detail::solve_from(a0, b0, in, opts);
    if (out.report.termination == Termination::converged) return out;
    std::vector<std::pair<double, double>> restarts;
    const RrEquivariant rr = equivariant_rr(s.n, in.p, in.z, s.r1, s.r2, vbar);
    if (rr.solution && 1.0 / rr.solution->a0 - 1.0 / rr.solution->b0 < 0.9 * vmin)
        restarts.push_back({rr.solution->a0, rr.solution->b0});
    for (double c : {0.1, 0.025, 0.005}) {
        // a0 = c b0 with 1/a0 - 1/b0 = V_min/2 keeps every denominator
        // at V_i - V_min/2 > 0
        const double a0r = 2.0 * (1.0 - c) / vmin;
        restarts.push_back({a0r, a0r / c});
    }
    for (const auto& [ra, rb] : restarts) {
        HamlingSolve retry = detail::solve_from(ra, rb, in, opts);
        if (retry.report.termination == Termination::converged) return retry;
        if (retry.report.final_residual_norm < out.report.final_residual_norm) out = retry;
    }
    return out;
}

inline HamlingSolve solve(const StudyInput& study, const HamlingOptions& opts = {}) {
    return solve(input_from_study(study), opts);
}

}  // namespace hamling
}  // namespace ccor
