#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "varstiff/stiffness.hpp"

using namespace varstiff;

namespace {

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace

TEST_CASE("builtin catalogs carry the published matrices") {
    const ActionCatalog peg = peg_in_hole_catalog();
    REQUIRE(peg.size() == 4);

    const Mat6& k1 = peg[0].k;
    CHECK(k1(0, 0) == 525.0);
    CHECK(k1(0, 1) == 194.0);
    CHECK(k1(0, 2) == -194.0);
    CHECK(k1(1, 1) == 662.0);
    CHECK(k1(1, 2) == 137.0);
    CHECK(k1(2, 2) == 662.0);

    const Mat6& k2 = peg[1].k;
    CHECK(k2(0, 0) == 525.0);
    CHECK(k2(0, 2) == -275.0);
    CHECK(k2(1, 1) == 800.0);
    CHECK(k2(2, 2) == 525.0);

    const Mat6& k3 = peg[2].k;
    CHECK(k3(0, 0) == 800.0);
    CHECK(k3(1, 1) == 525.0);
    CHECK(k3(1, 2) == 275.0);

    const Mat6& k4 = peg[3].k;
    CHECK(k4(0, 0) == 300.0);
    CHECK(k4(1, 1) == 300.0);
    CHECK(k4(2, 2) == 800.0);

    // Rotational block diag(50,50,50) on every entry of the catalog.
    for (const StiffnessMatrix& s : peg.matrices) {
        for (int i = 3; i < 6; ++i) CHECK(s.k(i, i) == 50.0);
        for (int r = 0; r < 3; ++r)
            for (int c = 3; c < 6; ++c) {
                CHECK(s.k(r, c) == 0.0);
                CHECK(s.k(c, r) == 0.0);
            }
        CHECK(s.symmetric());
        CHECK(s.is_static());
    }

    const Mat3 kr = rotational_block_kr();
    for (int i = 0; i < 3; ++i) CHECK(kr(i, i) == 50.0);
    CHECK(kr(0, 1) == 0.0);
}

TEST_CASE("gear catalog appends the dithered K5") {
    const ActionCatalog gear = gear_catalog();
    REQUIRE(gear.size() == 5);
    const StiffnessMatrix& k5 = gear[4];
    CHECK(k5.k(0, 0) == 300.0);
    CHECK(k5.k(2, 2) == 400.0);
    CHECK_FALSE(k5.is_static());
    CHECK(k5.dither->row == 5);
    CHECK(k5.dither->col == 2);
    CHECK(k5.dither->amplitude == 200.0);

    // sin(0) = 0: the static (rz,z) entry vanishes at t = 0.
    CHECK(k5.at(0.0)(5, 2) == 0.0);
    // Quarter period: the entry is the full amplitude.
    const double quarter = 0.25 * 2.0 * 3.14159265358979323846 /
                           k5.dither->angular_frequency;
    CHECK(k5.at(quarter)(5, 2) == doctest::Approx(200.0).epsilon(1e-12));

    // Invertible at every sampled time across a dither period.
    for (int i = 0; i <= 100; ++i) {
        const double t = i * 0.01;
        CHECK_NOTHROW((void)steady_state_deviation(k5, Vec6{}, t));
    }
}

TEST_CASE("catalog fingerprint is order- and value-sensitive") {
    const ActionCatalog a = peg_in_hole_catalog();
    ActionCatalog b = peg_in_hole_catalog();
    CHECK(a.fingerprint() == b.fingerprint());

    std::swap(b.matrices[0], b.matrices[1]);
    CHECK(a.fingerprint() != b.fingerprint());

    ActionCatalog c = peg_in_hole_catalog();
    c.matrices[2].k(0, 0) += 1.0;
    CHECK(a.fingerprint() != c.fingerprint());

    CHECK(a.fingerprint() != gear_catalog().fingerprint());
}

TEST_CASE("design_stiffness: diagonal spec reproduces K4 with the Kr block") {
    DeformationSpec spec;
    const Vec6 k{{300, 300, 800, 50, 50, 50}};
    for (int axis = 0; axis < 6; ++axis) {
        spec.expected_force[axis] = 1.0;
        Vec6 d;
        d[axis] = 1.0 / k[axis];
        spec.deformation[axis] = d;
    }
    const StiffnessMatrix s = design_stiffness(spec);
    const Mat6& k4 = peg_in_hole_catalog()[3].k;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            CHECK(s.k(r, c) == doctest::Approx(k4(r, c)).epsilon(1e-9));
}

TEST_CASE("design_stiffness: identity deformation columns give identity") {
    DeformationSpec spec;
    for (int axis = 0; axis < 6; ++axis) {
        spec.expected_force[axis] = 1.0;
        Vec6 d;
        d[axis] = 1.0;
        spec.deformation[axis] = d;
    }
    const StiffnessMatrix s = design_stiffness(spec);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            CHECK(s.k(r, c) == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("design_stiffness: columns of K1^-1 reproduce the K1 entries") {
    // Invert the published matrix with the independent oracle first, feed
    // the columns back as a deformation spec, and expect K1 again.
    const Mat6 k1 = peg_in_hole_catalog()[0].k;
    const Mat6 k1_inv = oracles::gj_invert(k1);

    DeformationSpec spec;
    for (int axis = 0; axis < 6; ++axis) {
        spec.expected_force[axis] = 1.0;
        Vec6 col;
        for (int r = 0; r < 6; ++r) col[r] = k1_inv(r, axis);
        spec.deformation[axis] = col;
    }
    const StiffnessMatrix s = design_stiffness(spec);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            CHECK(std::abs(s.k(r, c) - k1(r, c)) /
                      std::max(std::abs(k1(r, c)), 1.0) <
                  1e-6);
}

TEST_CASE("design_stiffness: dependent columns raise SingularDesign") {
    DeformationSpec spec;
    for (int axis = 0; axis < 6; ++axis) {
        spec.expected_force[axis] = 1.0;
        Vec6 d;
        d[0] = 1.0;  // every axis deforms identically
        spec.deformation[axis] = d;
    }
    CHECK_THROWS_AS((void)design_stiffness(spec), SingularDesign);

    DeformationSpec zero_force;
    zero_force.expected_force[2] = 0.0;
    CHECK_THROWS_AS((void)design_stiffness(zero_force), SingularDesign);
}

TEST_CASE("design round trip: random specs recover every column") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> force(0.5, 20.0);
    int accepted = 0;
    while (accepted < 50) {
        DeformationSpec spec;
        for (int axis = 0; axis < 6; ++axis) {
            spec.expected_force[axis] = force(rng);
            spec.deformation[axis] = oracles::random_vec6(rng, 0.01);
            spec.deformation[axis][axis] += 0.02;  // keep columns independent
        }
        StiffnessMatrix s;
        try {
            s = design_stiffness(spec);
        } catch (const SingularDesign&) {
            continue;
        }
        ++accepted;
        for (int axis = 0; axis < 6; ++axis) {
            Vec6 wrench;
            wrench[axis] = spec.expected_force[axis];
            const Vec6 dev = steady_state_deviation(s, wrench);
            for (int r = 0; r < 6; ++r) {
                const double want = spec.deformation[axis][r];
                CHECK(std::abs(dev[r] - want) <=
                      1e-9 * std::max(std::abs(want), 1e-6));
            }
        }
    }
}

TEST_CASE("steady_state_deviation: zero wrench, published K1 coupling signs") {
    const ActionCatalog peg = peg_in_hole_catalog();
    CHECK(norm(steady_state_deviation(peg[0], Vec6{})) == 0.0);

    // 1 N z-force through K1: +x / -y coupling, exact values against the
    // independent solve oracle.
    Vec6 fz;
    fz[2] = 1.0;
    const Vec6 dev = steady_state_deviation(peg[0], fz);
    CHECK(dev[0] > 0.0);
    CHECK(dev[1] < 0.0);
    const Vec6 want = oracles::gj_solve(peg[0].k, fz);
    for (int i = 0; i < 6; ++i)
        CHECK(dev[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK(rel_err(dev[0], 0.00096829096644422599) < 1e-10);
    CHECK(rel_err(dev[1], -0.00068440529124418309) < 1e-10);
}

TEST_CASE("steady_state_deviation: K5 at sin=0 has no rz response") {
    const ActionCatalog gear = gear_catalog();
    Vec6 fz;
    fz[2] = 1.0;
    const Vec6 dev = steady_state_deviation(gear[4], fz, 0.0);
    CHECK(dev[5] == doctest::Approx(0.0));
    CHECK(dev[2] == doctest::Approx(1.0 / 400).epsilon(1e-12));

    // At a quarter period the dither couples z-force into rz.
    const double quarter = 0.25;
    const Vec6 dev_q = steady_state_deviation(gear[4], fz, quarter / 1.0);
    CHECK(std::abs(dev_q[5]) > 1e-4);
}

TEST_CASE("rotate_design: yaw 0 is identity, yaw pi flips the K2 coupling") {
    const ActionCatalog peg = peg_in_hole_catalog();
    const StiffnessMatrix same = rotate_design(peg[1], 0.0);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            CHECK(same.k(r, c) == doctest::Approx(peg[1].k(r, c)).epsilon(1e-14));

    // Oracle: explicit 3x3 block product R * Kt * R^T with R = Rz(pi)
    // flips the (x,z) coupling from -275 to +275.
    const StiffnessMatrix flipped = rotate_design(peg[1], 3.14159265358979323846);
    CHECK(flipped.k(0, 2) == doctest::Approx(275.0).epsilon(1e-9));
    CHECK(flipped.k(2, 0) == doctest::Approx(275.0).epsilon(1e-9));
    CHECK(flipped.k(0, 0) == doctest::Approx(525.0).epsilon(1e-9));
    CHECK(flipped.k(1, 1) == doctest::Approx(800.0).epsilon(1e-9));
    CHECK(flipped.symmetric(1e-9));
}

TEST_CASE("rotate_design: isotropic lateral stiffness is yaw-invariant") {
    StiffnessMatrix iso;
    iso.k = Mat6::diagonal({400, 400, 800, 50, 50, 50});
    const StiffnessMatrix r = rotate_design(iso, 1.234);
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
            CHECK(r.k(a, b) == doctest::Approx(iso.k(a, b)).epsilon(1e-12));
}

TEST_CASE("rotate_design preserves the eigenvalues of both diagonal blocks") {
    const ActionCatalog peg = peg_in_hole_catalog();
    for (const StiffnessMatrix& s : peg.matrices) {
        const StiffnessMatrix r = rotate_design(s, 0.9);
        Mat3 before, after;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                before(a, b) = s.k(a, b);
                after(a, b) = r.k(a, b);
            }
        const auto eb = oracles::eig3_sym(before);
        const auto ea = oracles::eig3_sym(after);
        for (int i = 0; i < 3; ++i)
            CHECK(ea[i] == doctest::Approx(eb[i]).epsilon(1e-9));
    }
}

TEST_CASE("built-in catalogs stay invertible for all sampled times") {
    for (const StiffnessMatrix& s : gear_catalog().matrices) {
        for (int i = 0; i < 200; ++i) {
            const double t = i * 0.013;
            Vec6 f;
            f[2] = 3.0;
            CHECK(is_finite(steady_state_deviation(s, f, t)));
        }
    }
}
