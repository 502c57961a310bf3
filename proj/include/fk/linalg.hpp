#pragma once

// Small dense and tridiagonal linear algebra for the chain solvers.  Problem
// sizes here are a few hundred at most, so a pivoted LU, a Jacobi eigensolver
// and Sturm counts cover everything without an external dependency.

#include <algorithm>
#include <cmath>

#include "fk/common.hpp"

namespace fk {

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill)
    {
    }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec a_;
};

/// Solve A x = b by LU with partial pivoting.  Throws NumericalError when the
/// matrix is singular to working precision.
inline Vec lu_solve(Mat a, Vec b)
{
    const std::size_t n = a.rows();
    std::vector<std::size_t> piv(n);
    double scale = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::fabs(a(i, j)));
    if (scale == 0) throw NumericalError("lu_solve: zero matrix");

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a(i, k)) > std::fabs(a(p, k))) p = i;
        piv[k] = p;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(b[k], b[p]);
        }
        if (std::fabs(a(k, k)) < 1e-300 * scale)
            throw NumericalError("lu_solve: singular matrix");
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = a(i, k) / a(k, k);
            a(i, k) = m;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
            b[i] -= m * b[k];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

/// Determinant by LU with partial pivoting (0 for numerically singular).
inline double lu_det(Mat a)
{
    const std::size_t n = a.rows();
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a(i, k)) > std::fabs(a(p, k))) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            det = -det;
        }
        if (a(k, k) == 0.0) return 0.0;
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = a(i, k) / a(k, k);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
        }
    }
    return det;
}

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotations.
/// Optionally accumulates eigenvectors (columns of *vecs).
inline Vec symmetric_eigenvalues(Mat a, Mat* vecs = nullptr)
{
    const std::size_t n = a.rows();
    if (vecs) {
        *vecs = Mat(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) (*vecs)(i, i) = 1.0;
    }
    if (n == 1) return Vec{a(0, 0)};

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-300) break;
        double diag = 0;
        for (std::size_t i = 0; i < n; ++i) diag = std::max(diag, std::fabs(a(i, i)));
        if (std::sqrt(off) < 1e-16 * std::max(diag, 1e-300) && sweep > 2) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1);
                double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                if (vecs) {
                    for (std::size_t i = 0; i < n; ++i) {
                        double vip = (*vecs)(i, p), viq = (*vecs)(i, q);
                        (*vecs)(i, p) = c * vip - s * viq;
                        (*vecs)(i, q) = s * vip + c * viq;
                    }
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return ev[i] < ev[j]; });
    Vec sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = ev[order[i]];
    if (vecs) {
        Mat v = *vecs;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) (*vecs)(i, j) = v(i, order[j]);
    }
    return sorted;
}

/// Solve a tridiagonal system (lower[i] x_{i-1} + diag[i] x_i + upper[i] x_{i+1} = b_i)
/// with partial pivoting between adjacent rows.
inline Vec tridiag_solve(Vec lower, Vec diag, Vec upper, Vec b)
{
    const std::size_t n = diag.size();
    Vec extra(n, 0.0);  // fill-in two above the diagonal created by pivoting
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (std::fabs(lower[k + 1]) > std::fabs(diag[k])) {
            std::swap(diag[k], lower[k + 1]);
            std::swap(upper[k], diag[k + 1]);
            if (k + 2 < n) std::swap(extra[k], upper[k + 1]);
            std::swap(b[k], b[k + 1]);
        }
        if (std::fabs(diag[k]) < 1e-300) throw NumericalError("tridiag_solve: singular matrix");
        double m = lower[k + 1] / diag[k];
        diag[k + 1] -= m * upper[k];
        if (k + 2 < n) upper[k + 1] -= m * extra[k];
        b[k + 1] -= m * b[k];
    }
    if (std::fabs(diag[n - 1]) < 1e-300) throw NumericalError("tridiag_solve: singular matrix");
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        if (ii + 1 < n) s -= upper[ii] * x[ii + 1];
        if (ii + 2 < n) s -= extra[ii] * x[ii + 2];
        x[ii] = s / diag[ii];
    }
    return x;
}

/// Number of eigenvalues of the symmetric tridiagonal (diag, off) that are
/// strictly less than `shift`, by Sturm sequence count.
inline std::size_t sturm_count_below(const Vec& diag, const Vec& off, double shift)
{
    const std::size_t n = diag.size();
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double offsq = (i == 0) ? 0.0 : off[i - 1] * off[i - 1];
        d = diag[i] - shift - offsq / d;
        if (d == 0.0) d = -1e-300;
        if (d < 0) ++count;
    }
    return count;
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
inline double tridiag_max_eigenvalue(const Vec& diag, const Vec& off)
{
    const std::size_t n = diag.size();
    double lo = diag[0], hi = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
        double r = (i > 0 ? std::fabs(off[i - 1]) : 0.0) + (i + 1 < n ? std::fabs(off[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    hi += 1e-12 + 1e-12 * std::fabs(hi);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1 + std::fabs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (sturm_count_below(diag, off, mid) < n)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace fk
