#pragma once

#include <cstddef>
#include <vector>

namespace streamforge {

using Vec = std::vector<double>;

// Dense row-major matrix. Small sizes only (F x F and (F*d) x (F*d) blocks),
// so everything here is straightforward O(n^3) math without blocking.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    static Mat identity(std::size_t n);
    static Mat diag(const Vec& w);

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

Mat operator+(const Mat& x, const Mat& y);
Mat operator-(const Mat& x, const Mat& y);
Mat operator*(const Mat& x, const Mat& y);
Mat operator*(double s, const Mat& x);

Mat transpose(const Mat& x);

// y = A * x for column vector x.
Vec matvec(const Mat& A, const Vec& x);

// Rank-1 accumulate: A += s * u * v^T.
void add_outer(Mat& A, const Vec& u, const Vec& v, double s = 1.0);

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
void axpy(Vec& y, double s, const Vec& x);  // y += s*x

double frobenius_norm(const Mat& x);
double frobenius_dot(const Mat& x, const Mat& y);
double max_abs(const Mat& x);
bool all_finite(const Mat& x);
bool all_finite(const Vec& x);

// Symmetric eigendecomposition A = V diag(w) V^T via cyclic Jacobi.
// Eigenvalues ascend; V columns are the matching eigenvectors.
struct Eigh {
    Vec w;
    Mat v;
};
Eigh jacobi_eigh(const Mat& sym, double tol = 1e-12, int max_sweeps = 64);

// Lower Cholesky factor of an SPD matrix. Throws ConfigError when the
// matrix is not positive definite.
Mat cholesky(const Mat& spd);

// Solve (spd) X = B via Cholesky.
Mat cholesky_solve(const Mat& spd, const Mat& b);

// Symmetric PSD square root via eigendecomposition; eigenvalues below zero
// are clamped to zero before the root.
Mat sym_sqrt(const Mat& sym);

// 0.5 * (A + A^T)
Mat symmetrize(const Mat& x);

}  // namespace streamforge
