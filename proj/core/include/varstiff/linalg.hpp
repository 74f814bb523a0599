#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace varstiff {

/// Thrown when pivoting detects rank deficiency in a 6x6 solve/inverse.
struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fixed-size 6-vector. Interpretation is context dependent:
/// pose deviation (m, rad), wrench (N, Nm) or twist (m/s, rad/s),
/// always ordered x, y, z, rx, ry, rz.
struct Vec6 {
    std::array<double, 6> e{};

    double& operator[](std::size_t i) { return e[i]; }
    double operator[](std::size_t i) const { return e[i]; }

    Vec6& operator+=(const Vec6& o) {
        for (int i = 0; i < 6; ++i) e[i] += o.e[i];
        return *this;
    }
    Vec6& operator-=(const Vec6& o) {
        for (int i = 0; i < 6; ++i) e[i] -= o.e[i];
        return *this;
    }
    Vec6& operator*=(double s) {
        for (double& v : e) v *= s;
        return *this;
    }

    friend Vec6 operator+(Vec6 a, const Vec6& b) { return a += b; }
    friend Vec6 operator-(Vec6 a, const Vec6& b) { return a -= b; }
    friend Vec6 operator*(Vec6 a, double s) { return a *= s; }
    friend Vec6 operator*(double s, Vec6 a) { return a *= s; }
    friend Vec6 operator-(Vec6 a) { return a *= -1.0; }

    bool operator==(const Vec6&) const = default;
};

inline double dot(const Vec6& a, const Vec6& b) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec6& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const Vec6& v) {
    double m = 0.0;
    for (double x : v.e) m = std::max(m, std::abs(x));
    return m;
}

inline bool is_finite(const Vec6& v) {
    for (double x : v.e)
        if (!std::isfinite(x)) return false;
    return true;
}

/// 3x3 matrix, row major.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    double& operator()(std::size_t r, std::size_t c) { return m[r][c]; }
    double operator()(std::size_t r, std::size_t c) const { return m[r][c]; }

    static Mat3 identity() {
        Mat3 a;
        for (int i = 0; i < 3; ++i) a(i, i) = 1.0;
        return a;
    }

    Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(c, r) = m[r][c];
        return t;
    }

    friend Mat3 operator*(const Mat3& a, const Mat3& b) {
        Mat3 p;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
                p(r, c) = s;
            }
        return p;
    }

    bool operator==(const Mat3&) const = default;
};

/// 6x6 matrix, row major. Houses stiffness matrices, gain matrices and
/// the virtual inertia of the admittance model.
struct Mat6 {
    std::array<std::array<double, 6>, 6> m{};

    double& operator()(std::size_t r, std::size_t c) { return m[r][c]; }
    double operator()(std::size_t r, std::size_t c) const { return m[r][c]; }

    static Mat6 identity() {
        Mat6 a;
        for (int i = 0; i < 6; ++i) a(i, i) = 1.0;
        return a;
    }

    static Mat6 diagonal(const Vec6& d) {
        Mat6 a;
        for (int i = 0; i < 6; ++i) a(i, i) = d[i];
        return a;
    }

    /// Block diagonal [t 0; 0 r] from two 3x3 blocks (translation, rotation).
    static Mat6 from_blocks(const Mat3& t, const Mat3& r) {
        Mat6 a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                a(i, j) = t(i, j);
                a(i + 3, j + 3) = r(i, j);
            }
        return a;
    }

    Vec6 diagonal() const {
        Vec6 d;
        for (int i = 0; i < 6; ++i) d[i] = m[i][i];
        return d;
    }

    Mat6 transposed() const {
        Mat6 t;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) t(c, r) = m[r][c];
        return t;
    }

    Mat6& operator+=(const Mat6& o) {
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) m[r][c] += o.m[r][c];
        return *this;
    }
    Mat6& operator-=(const Mat6& o) {
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) m[r][c] -= o.m[r][c];
        return *this;
    }
    Mat6& operator*=(double s) {
        for (auto& row : m)
            for (double& v : row) v *= s;
        return *this;
    }

    friend Mat6 operator+(Mat6 a, const Mat6& b) { return a += b; }
    friend Mat6 operator-(Mat6 a, const Mat6& b) { return a -= b; }
    friend Mat6 operator*(Mat6 a, double s) { return a *= s; }
    friend Mat6 operator*(double s, Mat6 a) { return a *= s; }

    friend Vec6 operator*(const Mat6& a, const Vec6& x) {
        Vec6 y;
        for (int r = 0; r < 6; ++r) {
            double s = 0.0;
            for (int c = 0; c < 6; ++c) s += a(r, c) * x[c];
            y[r] = s;
        }
        return y;
    }

    friend Mat6 operator*(const Mat6& a, const Mat6& b) {
        Mat6 p;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) {
                double s = 0.0;
                for (int k = 0; k < 6; ++k) s += a(r, k) * b(k, c);
                p(r, c) = s;
            }
        return p;
    }

    bool operator==(const Mat6&) const = default;
};

double norm_inf(const Mat6& a);
bool is_finite(const Mat6& a);

/// Solve a*x = b by partial-pivot Gaussian elimination.
/// Throws SingularMatrix when a pivot falls below 1e-12 * max|entry|.
Vec6 solve(const Mat6& a, const Vec6& b);

/// Columnwise inverse via solve(). Same singularity behaviour.
Mat6 invert(const Mat6& a);

/// Infinity-norm condition estimate ||a|| * ||a^-1||.
double condition_estimate(const Mat6& a);

/// Rotation about z by `angle` (rad). Orthonormal, det +1.
Mat3 rotation_z(double angle);

/// Block-diagonal embedding diag(R, R) used to rotate a stiffness
/// design to another in-plane direction.
Mat6 yaw_rotation6(double angle);

// Semantic aliases; all share the x,y,z,rx,ry,rz layout.
using Pose6 = Vec6;
using Twist6 = Vec6;
using Wrench6 = Vec6;

}  // namespace varstiff
