#pragma once

// Study-level dose-response slope estimation:
//     GLS:  beta = (X^T C^-1 X)^-1 X^T C^-1 eta,  V[beta] = (X^T C^-1 X)^-1
//     WLS:  the same with C = diag(V)
//     OLS:  the same with C = I
// The default design is the single column of exposure differences from the
// reference midpoint (a line through the reference origin); an optional
// intercept column reproduces the free-intercept variant. With an intercept
// the reported beta/variance refer to the slope coefficient.

#include <cmath>
#include <string>
#include <vector>

#include "ccor/linalg.hpp"
#include "ccor/types.hpp"

namespace ccor {
namespace trend {

enum class FitMethod { gls, wls, ols };

inline const char* to_string(FitMethod m) {
    switch (m) {
        case FitMethod::gls: return "gls";
        case FitMethod::wls: return "wls";
        case FitMethod::ols: return "ols";
    }
    return "unknown";
}

struct TrendFit {
    double beta = 0.0;
    double variance = 0.0;
    FitMethod method = FitMethod::gls;
};

// General d-column fit; the slope is the coefficient of the LAST column.
inline TrendFit gls_fit_design(const Matrix& X, const std::vector<double>& eta, const Matrix& C) {
    const std::size_t n = X.rows, d = X.cols;
    if (eta.size() != n || C.rows != n || C.cols != n)
        throw ValidationError({{"LengthMismatch", "design, estimates and covariance disagree", -1}});
    Matrix l = cholesky(C);   // throws SingularMatrixError when C is not SPD

    // W = C^-1 X column by column, then form X^T W and X^T C^-1 eta.
    Matrix XtCiX(d, d);
    std::vector<double> XtCie(d, 0.0);
    std::vector<double> col(n), w(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = X(i, j);
        w = cholesky_solve(l, col);
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += X(i, k) * w[i];
            XtCiX(k, j) = s;
        }
        XtCie[j] = dot(w, eta);
    }

    Matrix lf = cholesky(XtCiX);   // rank-deficient designs fail here
    const std::vector<double> coef = cholesky_solve(lf, XtCie);

    // variance of the slope coefficient: last diagonal entry of (X^T C^-1 X)^-1
    std::vector<double> e(d, 0.0);
    e[d - 1] = 1.0;
    const std::vector<double> last_col = cholesky_solve(lf, e);

    TrendFit fit;
    fit.beta = coef[d - 1];
    fit.variance = last_col[d - 1];
    fit.method = FitMethod::gls;
    return fit;
}

inline Matrix design_column(const std::vector<double>& x, bool intercept) {
    Matrix X(x.size(), intercept ? 2 : 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (intercept) X(i, 0) = 1.0;
        X(i, intercept ? 1 : 0) = x[i];
    }
    return X;
}

inline TrendFit gls_fit(const std::vector<double>& x, const std::vector<double>& eta,
                        const Matrix& C, bool intercept = false) {
    return gls_fit_design(design_column(x, intercept), eta, C);
}

inline TrendFit wls_fit(const std::vector<double>& x, const std::vector<double>& eta,
                        const std::vector<double>& variances, bool intercept = false) {
    const std::size_t n = x.size();
    for (double v : variances)
        if (!(v > 0.0))
            throw ValidationError({{"NonPositiveVariance", "weights must be positive", -1}});
    Matrix C(n, n);
    for (std::size_t i = 0; i < n; ++i) C(i, i) = variances[i];
    TrendFit fit = gls_fit_design(design_column(x, intercept), eta, C);
    fit.method = FitMethod::wls;
    return fit;
}

inline TrendFit ols_fit(const std::vector<double>& x, const std::vector<double>& eta,
                        bool intercept = false) {
    TrendFit fit = wls_fit(x, eta, std::vector<double>(x.size(), 1.0), intercept);
    fit.method = FitMethod::ols;
    return fit;
}

}  // namespace trend
}  // namespace ccor
