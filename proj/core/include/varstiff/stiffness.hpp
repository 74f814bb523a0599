#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varstiff/linalg.hpp"

namespace varstiff {

/// Thrown by design_stiffness when the assembled column matrix is not
/// invertible.
struct SingularDesign : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Desired steady-state deformation per unit of expected wrench, one
/// column per wrench axis: column i is deformation / expected_force[i].
struct DeformationSpec {
    std::array<double, 6> expected_force{1, 1, 1, 1, 1, 1};  // N or Nm
    std::array<Vec6, 6> deformation{};                       // m and rad

    /// Compliance column for axis i: deformation_i / expected_force_i.
    Vec6 compliance_column(int axis) const;
};

/// Single time-varying entry k(row,col) += amplitude * sin(omega * t),
/// used by the gear catalog to dither rotation about z under z load.
struct DitherEntry {
    int row = 0;
    int col = 0;
    double amplitude = 0.0;       // N/m, N/rad, Nm/m or Nm/rad by position
    double angular_frequency = 0.0;  // rad/s
};

/// 6x6 stiffness of the admittance model, optionally with one sinusoidal
/// time-varying entry. Immutable after construction.
struct StiffnessMatrix {
    Mat6 k{};
    std::optional<DitherEntry> dither;
    std::string name;

    bool is_static() const { return !dither.has_value(); }

    /// Matrix sampled at time t (piecewise constant within a control step).
    Mat6 at(double t) const {
        Mat6 s = k;
        if (dither)
            s(dither->row, dither->col) +=
                dither->amplitude * std::sin(dither->angular_frequency * t);
        return s;
    }

    bool symmetric(double tol = 1e-9) const;
};

/// Ordered, fixed action set for the agent. Indices are stable across a
/// training run; the fingerprint guards checkpoints against reordering.
struct ActionCatalog {
    std::vector<StiffnessMatrix> matrices;

    std::size_t size() const { return matrices.size(); }
    const StiffnessMatrix& operator[](std::size_t i) const { return matrices[i]; }

    /// FNV-1a over the bit patterns of every entry and dither parameter.
    std::uint64_t fingerprint() const;
};

/// Assemble K = [k_inv_x ... k_inv_rz]^-1 from the per-axis deformation
/// columns. Throws SingularDesign when the columns are dependent.
StiffnessMatrix design_stiffness(const DeformationSpec& spec);

/// Converged trajectory deviation K^-1(t) * wrench of a stable admittance
/// model under constant wrench.
Vec6 steady_state_deviation(const StiffnessMatrix& k, const Wrench6& wrench,
                            double t = 0.0);

/// R * K * R^T with R = diag(Rz(yaw), Rz(yaw)); reorients a design to
/// another in-plane direction. Static matrices only.
StiffnessMatrix rotate_design(const StiffnessMatrix& k, double yaw);

/// Rotational block used by every published matrix: diag(50,50,50) Nm/rad.
Mat3 rotational_block_kr();

/// The four published peg-in-hole matrices K1..K4 (indices 0..3).
ActionCatalog peg_in_hole_catalog();

/// Default dither angular frequency for K5: 2*pi rad/s (1 Hz).
constexpr double default_dither_omega() { return 6.283185307179586476925286766559; }

/// K1..K4 plus the gear matrix K5 whose (rz,z) entry is 200*sin(omega t).
ActionCatalog gear_catalog(double dither_angular_frequency = default_dither_omega());

}  // namespace varstiff
