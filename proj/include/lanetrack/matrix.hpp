#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace lanetrack {

/// Fixed-size dense matrix with value semantics. Everything the filters
/// need fits in 4x4, so there is no heap allocation anywhere.
template <int Rows, int Cols>
struct Matrix {
    static_assert(Rows > 0 && Cols > 0);

    std::array<double, static_cast<std::size_t>(Rows) * Cols> m{};

    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r) * Cols + c]; }
    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r) * Cols + c]; }

    // Column vectors index like arrays.
    double& operator[](int i)
        requires(Cols == 1)
    {
        return m[static_cast<std::size_t>(i)];
    }
    double operator[](int i) const
        requires(Cols == 1)
    {
        return m[static_cast<std::size_t>(i)];
    }

    static Matrix zero() { return {}; }

    static Matrix identity()
        requires(Rows == Cols)
    {
        Matrix out;
        for (int i = 0; i < Rows; ++i) out(i, i) = 1.0;
        return out;
    }

    Matrix<Cols, Rows> transposed() const {
        Matrix<Cols, Rows> out;
        for (int r = 0; r < Rows; ++r)
            for (int c = 0; c < Cols; ++c) out(c, r) = (*this)(r, c);
        return out;
    }

    double trace() const
        requires(Rows == Cols)
    {
        double t = 0.0;
        for (int i = 0; i < Rows; ++i) t += (*this)(i, i);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += o.m[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] -= o.m[i];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (auto& v : m) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend bool operator==(const Matrix& a, const Matrix& b) { return a.m == b.m; }
};

template <int R, int K, int C>
Matrix<R, C> operator*(const Matrix<R, K>& a, const Matrix<K, C>& b) {
    Matrix<R, C> out;
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k) {
            const double ark = a(r, k);
            for (int c = 0; c < C; ++c) out(r, c) += ark * b(k, c);
        }
    return out;
}

using Vec2 = Matrix<2, 1>;
using Vec4 = Matrix<4, 1>;
using Mat2 = Matrix<2, 2>;
using Mat4 = Matrix<4, 4>;
using Mat24 = Matrix<2, 4>;
using Mat42 = Matrix<4, 2>;

inline Vec2 vec2(double a, double b) { return Vec2{{a, b}}; }
inline Vec4 vec4(double a, double b, double c, double d) { return Vec4{{a, b, c, d}}; }
inline Mat2 mat2(double a, double b, double c, double d) { return Mat2{{a, b, c, d}}; }

inline Mat2 diag2(double a, double b) { return Mat2{{a, 0.0, 0.0, b}}; }

inline Mat4 diag4(double a, double b, double c, double d) {
    Mat4 out;
    out(0, 0) = a;
    out(1, 1) = b;
    out(2, 2) = c;
    out(3, 3) = d;
    return out;
}

template <int N>
double dot(const Matrix<N, 1>& a, const Matrix<N, 1>& b) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <int N>
Matrix<N, N> symmetrized(const Matrix<N, N>& a) {
    Matrix<N, N> out;
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) out(r, c) = 0.5 * (a(r, c) + a(c, r));
    return out;
}

inline double det2(const Mat2& a) { return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0); }

inline Mat2 inverse2(const Mat2& a) {
    const double d = det2(a);
    if (d == 0.0) throw std::domain_error("inverse2: singular matrix");
    const double inv = 1.0 / d;
    return mat2(a(1, 1) * inv, -a(0, 1) * inv, -a(1, 0) * inv, a(0, 0) * inv);
}

/// Lower-triangular Cholesky factor of a symmetric PSD matrix. Singular
/// directions (zero pivots, e.g. sigma = 0 process noise) yield zero
/// columns instead of failing; genuinely indefinite input throws.
template <int N>
Matrix<N, N> cholesky_lower(const Matrix<N, N>& a) {
    Matrix<N, N> l;
    double scale = 1.0;
    for (int i = 0; i < N; ++i) scale = std::max(scale, std::abs(a(i, i)));
    for (int j = 0; j < N; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d < -1e-9 * scale) throw std::domain_error("cholesky_lower: matrix not PSD");
        if (d <= 1e-14 * scale) {
            // zero pivot: leave the whole column at zero
            continue;
        }
        const double root = std::sqrt(d);
        l(j, j) = root;
        for (int i = j + 1; i < N; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / root;
        }
    }
    return l;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
/// Plenty for 2x2/4x4 covariance health checks.
template <int N>
std::array<double, N> symmetric_eigenvalues(const Matrix<N, N>& a_in) {
    Matrix<N, N> a = symmetrized(a_in);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < N; ++p)
            for (int q = p + 1; q < N; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < N; ++p) {
            for (int q = p + 1; q < N; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < N; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < N; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::array<double, N> eig{};
    for (int i = 0; i < N; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

template <int N>
bool is_symmetric_psd(const Matrix<N, N>& a, double tol = 1e-9) {
    for (int r = 0; r < N; ++r)
        for (int c = r + 1; c < N; ++c)
            if (std::abs(a(r, c) - a(c, r)) > tol) return false;
    return symmetric_eigenvalues(a)[0] >= -tol;
}

}  // namespace lanetrack
