#pragma once

// Core domain types for within-study correlation correction of reported
// log odds ratios / log relative risks.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccor {

enum class EffectMeasure { odds_ratio, relative_risk };

inline const char* to_string(EffectMeasure m) {
    return m == EffectMeasure::odds_ratio ? "or" : "rr";
}

// One study's reported metadata. Vectors run over the n alternative
// (non-reference) exposure levels; group_totals, when present, has length
// n+1 with the reference group first.
struct StudyInput {
    EffectMeasure measure = EffectMeasure::odds_ratio;
    std::vector<double> exposures;       // optional; empty = not supplied
    std::vector<double> log_estimates;   // log OR or log RR, length n
    std::vector<double> variances;       // squared log-units, length n
    std::vector<double> group_totals;    // optional; length n+1, reference first
    std::optional<double> total_cases;
    std::optional<double> p;             // unexposed controls : total controls
    std::optional<double> z;             // total controls : total cases

    std::size_t n_levels() const { return log_estimates.size(); }
    bool has_gl_fields() const { return !group_totals.empty() && total_cases.has_value(); }
    bool has_hamling_fields() const { return p.has_value() && z.has_value(); }

    double reference_total() const { return group_totals.at(0); }
    double alternative_total(std::size_t i) const { return group_totals.at(i + 1); }
};

// Reconstructed cell counts. Semantics depend on the measure:
//   OR: A = cases, B = non-cases, a0/b0 the reference cells.
//   RR: A = cases, B = group totals, b0 the reference total; a0 is the
//       reference cell paired with b0 (b0 > a0, B > A element-wise).
struct PseudoCounts {
    EffectMeasure measure = EffectMeasure::odds_ratio;
    std::vector<double> A;
    double a0 = 0.0;
    std::vector<double> B;
    double b0 = 0.0;

    std::size_t n_levels() const { return A.size(); }
    bool strictly_positive() const {
        if (a0 <= 0.0 || b0 <= 0.0) return false;
        for (double v : A) if (v <= 0.0) return false;
        for (double v : B) if (v <= 0.0) return false;
        return true;
    }
    // RR-specific ordering required for a valid reconstruction.
    bool rr_ordered() const {
        if (b0 <= a0) return false;
        for (std::size_t i = 0; i < A.size(); ++i)
            if (B[i] <= A[i]) return false;
        return true;
    }
};

enum class Termination { converged, max_iterations, infeasible, domain_violation };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iterations: return "max_iterations";
        case Termination::infeasible: return "infeasible";
        case Termination::domain_violation: return "domain_violation";
    }
    return "unknown";
}

struct SolveReport {
    int iterations = 0;
    double final_residual_norm = 0.0;
    std::optional<double> final_objective;   // GL solvers only
    Termination termination = Termination::converged;
    std::vector<double> trajectory;          // per-iteration residual norms
    std::string diagnostic;                  // human-readable failure detail
};

// ---------------------------------------------------------------------------
// Errors

// Structured validation failure; collects every violated invariant.
class ValidationError : public std::runtime_error {
public:
    struct Violation {
        std::string code;     // e.g. "NonPositiveVariance"
        std::string detail;
        int index = -1;       // offending element, -1 when not applicable
    };

    explicit ValidationError(std::vector<Violation> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const { return violations_; }

    bool has_code(const std::string& code) const {
        for (const auto& v : violations_)
            if (v.code == code) return true;
        return false;
    }

private:
    static std::string join(const std::vector<Violation>& vs) {
        std::string msg = "study validation failed:";
        for (const auto& v : vs) {
            msg += "\n  [" + v.code + "] " + v.detail;
        }
        return msg;
    }
    std::vector<Violation> violations_;
};

// Evaluation requested at a point outside the open feasible region.
class InfeasiblePointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A Hamling cell denominator V_i - 1/a0 -/+ 1/b0 was <= 0.
class DenominatorNonPositiveError : public std::runtime_error {
public:
    DenominatorNonPositiveError(std::size_t index, double value)
        : std::runtime_error("cell denominator non-positive at level " +
                             std::to_string(index + 1) + " (value " +
                             std::to_string(value) + ")"),
          index_(index), value_(value) {}
    std::size_t index() const { return index_; }
    double value() const { return value_; }
private:
    std::size_t index_;
    double value_;
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Validation

enum class Method { none, gl, hamling };

// Validates a parsed study, returning it unchanged when sound. All generic
// invariants are checked; when `method` is gl or hamling the fields that
// method requires must be present. Warnings (non-fatal oddities such as
// z < 1 for relative risks) are appended to *warnings when provided.
inline StudyInput validate_study(const StudyInput& raw, Method method = Method::none,
                                 std::vector<std::string>* warnings = nullptr) {
    std::vector<ValidationError::Violation> errs;
    const std::size_t n = raw.log_estimates.size();

    if (n < 1)
        errs.push_back({"LengthMismatch", "at least one alternative exposure level required", -1});
    if (raw.variances.size() != n)
        errs.push_back({"LengthMismatch",
                        "variances has length " + std::to_string(raw.variances.size()) +
                        ", expected " + std::to_string(n), -1});
    if (!raw.exposures.empty() && raw.exposures.size() != n + 1 && raw.exposures.size() != n)
        errs.push_back({"LengthMismatch",
                        "exposures has length " + std::to_string(raw.exposures.size()) +
                        ", expected " + std::to_string(n + 1) + " (reference first) or " +
                        std::to_string(n), -1});
    if (!raw.group_totals.empty() && raw.group_totals.size() != n + 1)
        errs.push_back({"LengthMismatch",
                        "group_totals has length " + std::to_string(raw.group_totals.size()) +
                        ", expected " + std::to_string(n + 1), -1});

    for (std::size_t i = 0; i < raw.log_estimates.size(); ++i)
        if (!std::isfinite(raw.log_estimates[i]))
            errs.push_back({"NonFiniteEstimate",
                            "log estimate at level " + std::to_string(i + 1) + " is not finite",
                            static_cast<int>(i)});
    for (std::size_t i = 0; i < raw.variances.size(); ++i)
        if (!(raw.variances[i] > 0.0) || !std::isfinite(raw.variances[i]))
            errs.push_back({"NonPositiveVariance",
                            "variance at level " + std::to_string(i + 1) + " must be positive",
                            static_cast<int>(i)});
    for (std::size_t i = 0; i < raw.group_totals.size(); ++i)
        if (!(raw.group_totals[i] > 0.0) || !std::isfinite(raw.group_totals[i]))
            errs.push_back({"NonPositiveCount",
                            "group total at position " + std::to_string(i) + " must be positive",
                            static_cast<int>(i)});

    if (raw.total_cases && !(*raw.total_cases > 0.0))
        errs.push_back({"NonPositiveCount", "total_cases must be positive", -1});
    if (raw.total_cases && raw.group_totals.size() == n + 1) {
        double sumN = 0.0;
        for (double v : raw.group_totals) sumN += v;
        if (*raw.total_cases >= sumN)
            errs.push_back({"CasesExceedSubjects",
                            "total_cases must be smaller than the sum of group totals", -1});
    }
    if (raw.p && !(*raw.p > 0.0 && *raw.p < 1.0))
        errs.push_back({"InvalidRatio", "p must lie strictly between 0 and 1", -1});
    if (raw.z && !(*raw.z > 0.0))
        errs.push_back({"InvalidRatio", "z must be positive", -1});

    if (method == Method::gl && !raw.has_gl_fields())
        errs.push_back({"MissingRequiredField",
                        "GL reconstruction requires group_totals and total_cases", -1});
    if (method == Method::hamling && !raw.has_hamling_fields())
        errs.push_back({"MissingRequiredField",
                        "Hamling reconstruction requires p and z", -1});

    if (!errs.empty())
        throw ValidationError(std::move(errs));

    if (warnings && raw.measure == EffectMeasure::relative_risk && raw.z && *raw.z < 1.0)
        warnings->push_back("z < 1 although z >= 1 is expected for relative-risk inputs");

    return raw;
}

}  // namespace ccor
