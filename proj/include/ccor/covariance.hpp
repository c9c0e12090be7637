#pragma once

// Assembly of within-study correlation and covariance matrices from
// reconstructed pseudo-counts and reported variances. The diagonal always
// carries the reported variances; only the off-diagonal entries come from
// the counts:
//     OR: r_ij = (1/a0 + 1/b0) / sqrt(s_i s_j), s_k = 1/a0 + 1/b0 + 1/A_k + 1/B_k
//     RR: same with every plus between reciprocal pairs replaced by minus.
// Scaling all counts by a common factor leaves every correlation unchanged.

#include <cmath>
#include <cstddef>
#include <vector>

#include "ccor/linalg.hpp"
#include "ccor/types.hpp"

namespace ccor {
namespace covariance {

struct WithinStudyCovariance {
    Matrix matrix;         // reported variances on the diagonal
    Matrix correlations;   // unit diagonal
    double min_eigenvalue = 0.0;   // of `matrix`; reported, not asserted
};

namespace detail {

inline double shared_term(const PseudoCounts& c) {
    return c.measure == EffectMeasure::odds_ratio ? 1.0 / c.a0 + 1.0 / c.b0
                                                  : 1.0 / c.a0 - 1.0 / c.b0;
}

inline double level_term(const PseudoCounts& c, std::size_t k) {
    return c.measure == EffectMeasure::odds_ratio
               ? shared_term(c) + 1.0 / c.A[k] + 1.0 / c.B[k]
               : shared_term(c) + 1.0 / c.A[k] - 1.0 / c.B[k];
}

}  // namespace detail

inline double pairwise_correlation(const PseudoCounts& counts, std::size_t i, std::size_t j) {
    if (i == j || i >= counts.n_levels() || j >= counts.n_levels())
        throw std::out_of_range("pairwise_correlation needs two distinct valid levels");
    if (!counts.strictly_positive())
        throw InfeasiblePointError("pseudo-counts must be strictly positive");
    const double si = detail::level_term(counts, i);
    const double sj = detail::level_term(counts, j);
    if (counts.measure == EffectMeasure::relative_risk && (si <= 0.0 || sj <= 0.0))
        throw InfeasiblePointError("non-positive radicand in the RR correlation; "
                                   "the counts are not a valid RR reconstruction");
    return detail::shared_term(counts) / (std::sqrt(si) * std::sqrt(sj));
}

inline WithinStudyCovariance covariance_matrix(const PseudoCounts& counts,
                                               const std::vector<double>& variances) {
    const std::size_t n = counts.n_levels();
    if (variances.size() != n)
        throw ValidationError({{"LengthMismatch", "variances and counts disagree in length", -1}});
    for (double v : variances)
        if (!(v > 0.0))
            throw ValidationError({{"NonPositiveVariance", "variances must be positive", -1}});

    WithinStudyCovariance out;
    out.correlations = Matrix::identity(n);
    out.matrix = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) out.matrix(i, i) = variances[i];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = pairwise_correlation(counts, i, j);
            out.correlations(i, j) = out.correlations(j, i) = r;
            const double cij = r * std::sqrt(variances[i] * variances[j]);
            out.matrix(i, j) = out.matrix(j, i) = cij;
        }
    }
    out.min_eigenvalue = smallest_eigenvalue(out.matrix);
    return out;
}

}  // namespace covariance
}  // namespace ccor
