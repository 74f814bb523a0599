#include "varstiff/linalg.hpp"

#include <algorithm>
#include <utility>

namespace varstiff {

double norm_inf(const Mat6& a) {
    double m = 0.0;
    for (const auto& row : a.m) {
        double s = 0.0;
        for (double v : row) s += std::abs(v);
        m = std::max(m, s);
    }
    return m;
}

bool is_finite(const Mat6& a) {
    for (const auto& row : a.m)
        for (double v : row)
            if (!std::isfinite(v)) return false;
    return true;
}

namespace {

double max_abs_entry(const Mat6& a) {
    double m = 0.0;
    for (const auto& row : a.m)
        for (double v : row) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

Vec6 solve(const Mat6& a, const Vec6& b) {
    // LU with partial pivoting on an augmented copy. The matrix is always
    // 6x6 so the elimination is unrolled by the compiler; the 1 ms loop
    // calls this at kHz rates.
    const double tol = 1e-12 * max_abs_entry(a);

    std::array<std::array<double, 7>, 6> w{};
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) w[r][c] = a(r, c);
        w[r][6] = b[r];
    }

    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(w[r][col]) > std::abs(w[piv][col])) piv = r;
        if (std::abs(w[piv][col]) <= tol)
            throw SingularMatrix("6x6 solve: pivot below tolerance");
        if (piv != col) std::swap(w[piv], w[col]);

        const double inv_p = 1.0 / w[col][col];
        for (int r = col + 1; r < 6; ++r) {
            const double f = w[r][col] * inv_p;
            if (f == 0.0) continue;
            for (int c = col; c < 7; ++c) w[r][c] -= f * w[col][c];
        }
    }

    Vec6 x;
    for (int r = 5; r >= 0; --r) {
        double s = w[r][6];
        for (int c = r + 1; c < 6; ++c) s -= w[r][c] * x[c];
        x[r] = s / w[r][r];
    }
    return x;
}

Mat6 invert(const Mat6& a) {
    Mat6 inv;
    for (int col = 0; col < 6; ++col) {
        Vec6 e;
        e[col] = 1.0;
        const Vec6 x = solve(a, e);
        for (int r = 0; r < 6; ++r) inv(r, col) = x[r];
    }
    return inv;
}

double condition_estimate(const Mat6& a) {
    return norm_inf(a) * norm_inf(invert(a));
}

Mat3 rotation_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    r(2, 2) = 1.0;
    return r;
}

Mat6 yaw_rotation6(double angle) {
    const Mat3 r = rotation_z(angle);
    return Mat6::from_blocks(r, r);
}

}  // namespace varstiff
