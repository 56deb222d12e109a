#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace clvlab {

using Vec = std::vector<double>;

// Phase-space point and tangent displacement; both are length-n coordinate
// tuples, distinguished by role only.
using StateVector = Vec;
using TangentVector = Vec;

inline bool all_finite(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return std::isfinite(s);
}

// Small dense row-major matrix. Sizes here are the phase-space dimension
// (n <= 8 in practice), so everything is direct loops, no blocking.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    bool empty() const { return rows == 0 || cols == 0; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vec col(int j) const {
        Vec v(rows);
        for (int i = 0; i < rows; ++i) v[i] = (*this)(i, j);
        return v;
    }

    void set_col(int j, std::span<const double> v) {
        for (int i = 0; i < rows; ++i) (*this)(i, j) = v[i];
    }
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix z(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double s = x(i, k);
            for (int j = 0; j < y.cols; ++j) z(i, j) += s * y(k, j);
        }
    return z;
}

inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        out[i] = s;
    }
}

inline Vec matvec(const Matrix& m, std::span<const double> x) {
    Vec out(m.rows);
    matvec(m, x, out);
    return out;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

inline double trace(const Matrix& m) {
    double s = 0.0;
    for (int i = 0; i < m.rows && i < m.cols; ++i) s += m(i, i);
    return s;
}

// Angle between the lines spanned by two vectors (sign-insensitive), radians.
inline double line_angle(std::span<const double> u, std::span<const double> v) {
    const double c = std::abs(dot(u, v)) / (norm2(u) * norm2(v));
    return std::acos(std::min(1.0, c));
}

// LU decomposition with partial pivoting; `perm_sign` tracks the permutation
// parity for determinants. Throws on (numerically) singular input.
struct Lu {
    Matrix lu;
    std::vector<int> piv;
    double perm_sign = 1.0;
};

inline Lu lu_decompose(Matrix m) {
    if (m.rows != m.cols) throw std::invalid_argument("lu_decompose: matrix not square");
    const int n = m.rows;
    Lu f{std::move(m), std::vector<int>(n), 1.0};
    for (int i = 0; i < n; ++i) f.piv[i] = i;
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > std::abs(f.lu(p, k))) p = i;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
            std::swap(f.piv[k], f.piv[p]);
            f.perm_sign = -f.perm_sign;
        }
        const double d = f.lu(k, k);
        if (d == 0.0) throw std::runtime_error("lu_decompose: singular matrix");
        for (int i = k + 1; i < n; ++i) {
            f.lu(i, k) /= d;
            const double m_ik = f.lu(i, k);
            for (int j = k + 1; j < n; ++j) f.lu(i, j) -= m_ik * f.lu(k, j);
        }
    }
    return f;
}

inline Vec lu_solve(const Lu& f, std::span<const double> b) {
    const int n = f.lu.rows;
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = b[f.piv[i]];
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

inline double determinant(const Matrix& m) {
    if (m.rows == 1) return m.a[0];
    Lu f;
    try {
        f = lu_decompose(m);
    } catch (const std::runtime_error&) {
        return 0.0;
    }
    double d = f.perm_sign;
    for (int i = 0; i < m.rows; ++i) d *= f.lu(i, i);
    return d;
}

inline Matrix inverse(const Matrix& m) {
    const Lu f = lu_decompose(m);
    const int n = m.rows;
    Matrix inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vec x = lu_solve(f, e);
        for (int i = 0; i < n; ++i) inv(i, j) = x[i];
        e[j] = 0.0;
    }
    return inv;
}

struct QrFactors {
    Matrix q;  // n x m, orthonormal columns
    Matrix r;  // m x m upper triangular, nonnegative diagonal
};

// Modified Gram-Schmidt QR of an n x m matrix (m <= n). The diagonal of R is
// the remaining column norm, hence >= 0 by construction. Throws when a column
// norm underflows (rank collapse).
inline QrFactors mgs_qr(const Matrix& a, double min_diag = 1e-300) {
    const int n = a.rows, m = a.cols;
    if (m > n) throw std::invalid_argument("mgs_qr: more columns than rows");
    QrFactors f{a, Matrix(m, m)};
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < j; ++i) {
            double r = 0.0;
            for (int k = 0; k < n; ++k) r += f.q(k, i) * f.q(k, j);
            f.r(i, j) = r;
            for (int k = 0; k < n; ++k) f.q(k, j) -= r * f.q(k, i);
        }
        double nrm = 0.0;
        for (int k = 0; k < n; ++k) nrm += f.q(k, j) * f.q(k, j);
        nrm = std::sqrt(nrm);
        if (!(nrm >= min_diag))
            throw std::runtime_error("mgs_qr: rank collapse in column " + std::to_string(j) +
                                     "; use a shorter re-orthonormalization interval");
        f.r(j, j) = nrm;
        for (int k = 0; k < n; ++k) f.q(k, j) /= nrm;
    }
    return f;
}

// Solves R x = b for upper-triangular R.
inline void upper_solve(const Matrix& r, std::span<double> x) {
    const int m = r.rows;
    for (int i = m - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < m; ++j) s -= r(i, j) * x[j];
        x[i] = s / r(i, i);
    }
}

// 1-norm condition number of an upper-triangular matrix, via its explicit
// inverse (fine for the m <= 8 factors handled here).
inline double upper_condition(const Matrix& r) {
    const int m = r.rows;
    auto norm1 = [m](const Matrix& x) {
        double best = 0.0;
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += std::abs(x(i, j));
            best = std::max(best, s);
        }
        return best;
    };
    Matrix inv(m, m);
    Vec e(m, 0.0);
    for (int j = 0; j < m; ++j) {
        e[j] = 1.0;
        Vec x = e;
        upper_solve(r, x);
        for (int i = 0; i < m; ++i) inv(i, j) = x[i];
        e[j] = 0.0;
    }
    return norm1(r) * norm1(inv);
}

}  // namespace clvlab
