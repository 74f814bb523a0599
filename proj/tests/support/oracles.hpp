#pragma once

// Test-only reference implementations, deliberately written on different
// algorithms than the library paths they check: full-pivot Gauss-Jordan
// instead of partially pivoted LU, closed-form 3x3 eigenvalues instead of
// anything iterative, naive loops instead of fused arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "varstiff/agent.hpp"
#include "varstiff/linalg.hpp"

namespace oracles {

using varstiff::Mat3;
using varstiff::Mat6;
using varstiff::Vec6;

/// Full-pivot Gauss-Jordan solve of a*x = b.
inline Vec6 gj_solve(const Mat6& a, const Vec6& b) {
    double w[6][7];
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) w[r][c] = a(r, c);
        w[r][6] = b[r];
    }
    std::array<int, 6> col_of{0, 1, 2, 3, 4, 5};  // variable held by column

    for (int k = 0; k < 6; ++k) {
        int pr = k, pc = k;
        double best = 0.0;
        for (int r = k; r < 6; ++r)
            for (int c = k; c < 6; ++c)
                if (std::abs(w[r][c]) > best) {
                    best = std::abs(w[r][c]);
                    pr = r;
                    pc = c;
                }
        if (best == 0.0) throw std::runtime_error("gj_solve: singular");
        for (int c = 0; c < 7; ++c) std::swap(w[k][c], w[pr][c]);
        if (pc != k) {
            for (int r = 0; r < 6; ++r) std::swap(w[r][k], w[r][pc]);
            std::swap(col_of[k], col_of[pc]);
        }
        const double p = w[k][k];
        for (int c = 0; c < 7; ++c) w[k][c] /= p;
        for (int r = 0; r < 6; ++r) {
            if (r == k) continue;
            const double f = w[r][k];
            if (f == 0.0) continue;
            for (int c = 0; c < 7; ++c) w[r][c] -= f * w[k][c];
        }
    }

    Vec6 x;
    for (int k = 0; k < 6; ++k) x[col_of[k]] = w[k][6];
    return x;
}

inline Mat6 gj_invert(const Mat6& a) {
    Mat6 inv;
    for (int c = 0; c < 6; ++c) {
        Vec6 e;
        e[c] = 1.0;
        const Vec6 x = gj_solve(a, e);
        for (int r = 0; r < 6; ++r) inv(r, c) = x[r];
    }
    return inv;
}

/// Eigenvalues of a symmetric 3x3 via the trigonometric solution of the
/// characteristic polynomial, ascending.
inline std::array<double, 3> eig3_sym(const Mat3& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    if (p1 == 0.0) {
        std::array<double, 3> e{a(0, 0), a(1, 1), a(2, 2)};
        std::sort(e.begin(), e.end());
        return e;
    }
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Mat3 b;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) b(r, c) = (a(r, c) - (r == c ? q : 0.0)) / p;
    const double detb =
        b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
        b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
        b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double pi = 3.14159265358979323846;
    std::array<double, 3> e{q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0),
                            q + 2.0 * p * std::cos(phi + 4.0 * pi / 3.0),
                            q + 2.0 * p * std::cos(phi)};
    std::sort(e.begin(), e.end());
    return e;
}

/// Plain loop for the discounted return.
inline double naive_return(const std::vector<double>& rewards, double gamma) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rewards.size(); ++k)
        acc += std::pow(gamma, static_cast<double>(k)) * rewards[k];
    return acc;
}

// --- finite differences over QNetwork parameters ---

inline std::vector<double*> parameter_view(varstiff::QNetwork& net) {
    std::vector<double*> view;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (double& v : net.weights[l]) view.push_back(&v);
        for (double& v : net.biases[l]) view.push_back(&v);
    }
    return view;
}

/// Central finite-difference gradient of a scalar function of the
/// network parameters.
template <typename F>
std::vector<double> fd_gradient(varstiff::QNetwork& net, F&& f, double h = 1e-6) {
    std::vector<double*> params = parameter_view(net);
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double fp = f();
        *params[i] = saved - h;
        const double fm = f();
        *params[i] = saved;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

inline varstiff::Mat6 random_well_conditioned(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    varstiff::Mat6 a;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) a(r, c) = u(rng) + (r == c ? 4.0 : 0.0);
    return a;
}

inline varstiff::Vec6 random_vec6(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    varstiff::Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = u(rng);
    return v;
}

}  // namespace oracles
