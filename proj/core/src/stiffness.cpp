#include "varstiff/stiffness.hpp"

#include <bit>
#include <cmath>

namespace varstiff {

Vec6 DeformationSpec::compliance_column(int axis) const {
    if (expected_force[axis] == 0.0)
        throw SingularDesign("deformation spec: expected force on axis " +
                             std::to_string(axis) + " is zero");
    Vec6 c = deformation[axis];
    c *= 1.0 / expected_force[axis];
    return c;
}

bool StiffnessMatrix::symmetric(double tol) const {
    for (int r = 0; r < 6; ++r)
        for (int c = r + 1; c < 6; ++c)
            if (std::abs(k(r, c) - k(c, r)) > tol) return false;
    return true;
}

std::uint64_t ActionCatalog::fingerprint() const {
    // FNV-1a over exact bit patterns; any entry or dither change, or a
    // reordering, changes the hash.
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    for (const StiffnessMatrix& s : matrices) {
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) mix(std::bit_cast<std::uint64_t>(s.k(r, c)));
        if (s.dither) {
            mix(static_cast<std::uint64_t>(s.dither->row));
            mix(static_cast<std::uint64_t>(s.dither->col));
            mix(std::bit_cast<std::uint64_t>(s.dither->amplitude));
            mix(std::bit_cast<std::uint64_t>(s.dither->angular_frequency));
        } else {
            mix(0xfffffffffffffffull);
        }
    }
    return h;
}

StiffnessMatrix design_stiffness(const DeformationSpec& spec) {
    Mat6 columns;
    for (int axis = 0; axis < 6; ++axis) {
        const Vec6 col = spec.compliance_column(axis);
        for (int r = 0; r < 6; ++r) columns(r, axis) = col[r];
    }
    StiffnessMatrix out;
    try {
        out.k = invert(columns);
    } catch (const SingularMatrix&) {
        throw SingularDesign("deformation columns are not invertible");
    }
    out.name = "designed";
    return out;
}

Vec6 steady_state_deviation(const StiffnessMatrix& k, const Wrench6& wrench,
                            double t) {
    return solve(k.at(t), wrench);
}

StiffnessMatrix rotate_design(const StiffnessMatrix& k, double yaw) {
    const Mat6 r = yaw_rotation6(yaw);
    StiffnessMatrix out;
    out.k = r * k.k * r.transposed();
    out.name = k.name.empty() ? std::string("rotated")
                              : k.name + "_rotated";
    return out;
}

Mat3 rotational_block_kr() {
    Mat3 kr;
    kr(0, 0) = kr(1, 1) = kr(2, 2) = 50.0;
    return kr;
}

namespace {

StiffnessMatrix from_translational(const Mat3& t, std::string name) {
    StiffnessMatrix s;
    s.k = Mat6::from_blocks(t, rotational_block_kr());
    s.name = std::move(name);
    return s;
}

Mat3 mat3_rows(double a, double b, double c, double d, double e, double f,
               double g, double h, double i) {
    Mat3 m;
    m(0, 0) = a; m(0, 1) = b; m(0, 2) = c;
    m(1, 0) = d; m(1, 1) = e; m(1, 2) = f;
    m(2, 0) = g; m(2, 1) = h; m(2, 2) = i;
    return m;
}

}  // namespace

ActionCatalog peg_in_hole_catalog() {
    ActionCatalog cat;
    cat.matrices.push_back(from_translational(
        mat3_rows(525, 194, -194, 194, 662, 137, -194, 137, 662), "K1"));
    cat.matrices.push_back(from_translational(
        mat3_rows(525, 0, -275, 0, 800, 0, -275, 0, 525), "K2"));
    cat.matrices.push_back(from_translational(
        mat3_rows(800, 0, 0, 0, 525, 275, 0, 275, 525), "K3"));
    cat.matrices.push_back(from_translational(
        mat3_rows(300, 0, 0, 0, 300, 0, 0, 0, 800), "K4"));
    return cat;
}

ActionCatalog gear_catalog(double dither_angular_frequency) {
    ActionCatalog cat = peg_in_hole_catalog();
    StiffnessMatrix k5 = from_translational(
        mat3_rows(300, 0, 0, 0, 300, 0, 0, 0, 400), "K5");
    // Pressing along z sways rotation about z: the teeth-alignment dither.
    k5.dither = DitherEntry{5, 2, 200.0, dither_angular_frequency};
    cat.matrices.push_back(std::move(k5));
    return cat;
}

}  // namespace varstiff
