#include "streamforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "streamforge/errors.hpp"

namespace streamforge {

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diag(const Vec& w) {
    Mat m(w.size(), w.size());
    for (std::size_t i = 0; i < w.size(); ++i) m(i, i) = w[i];
    return m;
}

static void check_same_shape(const Mat& x, const Mat& y, const char* op) {
    if (!x.same_shape(y)) throw std::invalid_argument(std::string("shape mismatch in ") + op);
}

Mat operator+(const Mat& x, const Mat& y) {
    check_same_shape(x, y, "operator+");
    Mat r = x;
    for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
    return r;
}

Mat operator-(const Mat& x, const Mat& y) {
    check_same_shape(x, y, "operator-");
    Mat r = x;
    for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
    return r;
}

Mat operator*(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw std::invalid_argument("inner dimension mismatch in operator*");
    Mat r(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double xv = x(i, k);
            if (xv == 0.0) continue;
            const double* yrow = &y.a[k * y.cols];
            double* rrow = &r.a[i * r.cols];
            for (std::size_t j = 0; j < y.cols; ++j) rrow[j] += xv * yrow[j];
        }
    }
    return r;
}

Mat operator*(double s, const Mat& x) {
    Mat r = x;
    for (double& v : r.a) v *= s;
    return r;
}

Mat transpose(const Mat& x) {
    Mat r(x.cols, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) r(j, i) = x(i, j);
    return r;
}

Vec matvec(const Mat& A, const Vec& x) {
    if (A.cols != x.size()) throw std::invalid_argument("matvec dimension mismatch");
    Vec y(A.rows, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* row = &A.a[i * A.cols];
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

void add_outer(Mat& A, const Vec& u, const Vec& v, double s) {
    if (A.rows != u.size() || A.cols != v.size()) throw std::invalid_argument("add_outer dimension mismatch");
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double su = s * u[i];
        double* row = &A.a[i * A.cols];
        for (std::size_t j = 0; j < v.size(); ++j) row[j] += su * v[j];
    }
}

double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

void axpy(Vec& y, double s, const Vec& x) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

double frobenius_norm(const Mat& x) {
    double s = 0.0;
    for (double v : x.a) s += v * v;
    return std::sqrt(s);
}

double frobenius_dot(const Mat& x, const Mat& y) {
    check_same_shape(x, y, "frobenius_dot");
    double s = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) s += x.a[i] * y.a[i];
    return s;
}

double max_abs(const Mat& x) {
    double m = 0.0;
    for (double v : x.a) m = std::max(m, std::fabs(v));
    return m;
}

bool all_finite(const Mat& x) {
    for (double v : x.a)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

Eigh jacobi_eigh(const Mat& sym, double tol, int max_sweeps) {
    if (sym.rows != sym.cols) throw std::invalid_argument("jacobi_eigh expects a square matrix");
    const std::size_t n = sym.rows;
    Mat a = symmetrize(sym);
    Mat v = Mat::identity(n);

    auto offdiag = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    double scale = 0.0;
    for (double x : a.a) scale = std::max(scale, std::fabs(x));
    if (scale == 0.0) scale = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (offdiag() <= tol * scale * static_cast<double>(n)) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= 1e-300) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = 0.5 * (aqq - app) / apq;
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    Eigh e;
    e.w.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.w[i] = a(i, i);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return e.w[x] < e.w[y]; });

    Eigh sorted;
    sorted.w.resize(n);
    sorted.v = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted.w[j] = e.w[order[j]];
        for (std::size_t i = 0; i < n; ++i) sorted.v(i, j) = v(i, order[j]);
    }
    return sorted;
}

Mat cholesky(const Mat& spd) {
    if (spd.rows != spd.cols) throw std::invalid_argument("cholesky expects a square matrix");
    const std::size_t n = spd.rows;
    Mat l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw ConfigError("cholesky: matrix is not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

Mat cholesky_solve(const Mat& spd, const Mat& b) {
    if (spd.rows != b.rows) throw std::invalid_argument("cholesky_solve dimension mismatch");
    const Mat l = cholesky(spd);
    const std::size_t n = spd.rows;
    Mat x = b;
    // forward: L y = b
    for (std::size_t col = 0; col < b.cols; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
            x(i, col) = s / l(i, i);
        }
        // backward: L^T x = y
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, col);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, col);
            x(ii, col) = s / l(ii, ii);
        }
    }
    return x;
}

Mat sym_sqrt(const Mat& sym) {
    Eigh e = jacobi_eigh(sym);
    const std::size_t n = sym.rows;
    Mat r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = std::sqrt(std::max(0.0, e.w[k]));
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double wv = w * e.v(i, k);
            if (wv == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) r(i, j) += wv * e.v(j, k);
        }
    }
    return r;
}

Mat symmetrize(const Mat& x) {
    if (x.rows != x.cols) throw std::invalid_argument("symmetrize expects a square matrix");
    Mat r(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) r(i, j) = 0.5 * (x(i, j) + x(j, i));
    return r;
}

}  // namespace streamforge
