#pragma once

// Small dense linear algebra for the n <= ~20 systems that arise here:
// Cholesky factorization/solve, a diagonal-plus-rank-one solve via the
// Sherman-Morrison identity, and a Jacobi eigenvalue sweep for symmetric
// matrices (used only to report the smallest eigenvalue of assembled
// covariance matrices).

#include <cmath>
#include <cstddef>
#include <vector>

#include "ccor/types.hpp"

namespace ccor {

struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    explicit Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline std::vector<double> matvec(const Matrix& m, const std::vector<double>& v) {
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            out[i] += m(i, j) * v[j];
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// Throws SingularMatrixError on a non-positive pivot (relative tolerance 1e-12).
inline Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows;
    Matrix l(n, n);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 1e-12 * max_diag))
            throw SingularMatrixError("matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

inline std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b) {
    const std::size_t n = l.rows;
    for (std::size_t i = 0; i < n; ++i) {          // L y = b
        for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
        b[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {            // L^T x = y
        for (std::size_t k = i + 1; k < n; ++k) b[i] -= l(k, i) * b[k];
        b[i] /= l(i, i);
    }
    return b;
}

// Solves (diag(d) + c * 1 1^T) x = b exactly in O(n); falls back to a dense
// Cholesky when the Sherman-Morrison denominator degenerates.
inline std::vector<double> solve_diag_plus_rank_one(const std::vector<double>& d, double c,
                                                    const std::vector<double>& b) {
    const std::size_t n = d.size();
    std::vector<double> dinv_b(n), dinv_one(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] <= 0.0) { ok = false; break; }
        dinv_b[i] = b[i] / d[i];
        dinv_one[i] = 1.0 / d[i];
    }
    if (ok) {
        double s1 = 0.0, sb = 0.0;
        for (std::size_t i = 0; i < n; ++i) { s1 += dinv_one[i]; sb += dinv_b[i]; }
        const double denom = 1.0 + c * s1;
        if (std::abs(denom) > 1e-14) {
            const double f = c * sb / denom;
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = dinv_b[i] - f * dinv_one[i];
            return x;
        }
    }
    Matrix a(n, n, c);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += d[i];
    return cholesky_solve(cholesky(a), b);
}

// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double smallest_eigenvalue(Matrix a) {
    const std::size_t n = a.rows;
    if (n == 1) return a(0, 0);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-30) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cth = 1.0 / std::sqrt(t * t + 1.0);
                const double sth = t * cth;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = cth * akp - sth * akq;
                    a(k, q) = sth * akp + cth * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = cth * apk - sth * aqk;
                    a(q, k) = sth * apk + cth * aqk;
                }
            }
        }
    }
    double mn = a(0, 0);
    for (std::size_t i = 1; i < n; ++i) mn = std::min(mn, a(i, i));
    return mn;
}

}  // namespace ccor
