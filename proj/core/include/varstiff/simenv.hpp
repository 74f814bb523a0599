#pragma once

#include <array>
#include <optional>
#include <random>

#include "varstiff/admittance.hpp"
#include "varstiff/linalg.hpp"
#include "varstiff/stiffness.hpp"

namespace varstiff {

/// Task phases; monotone Search -> Insertion (-> TeethAlignment) -> Done,
/// with Failed reachable from any live phase.
enum class TaskPhase { Search, Insertion, TeethAlignment, Done, Failed };

const char* to_string(TaskPhase p);

/// Quasi-static peg-in-hole world. The hole pose is part of the world and
/// not exposed to the agent; observations are biased by the per-episode
/// hole-position estimate error.
struct PegHoleWorld {
    double peg_diameter = 0.01005;   // m
    double hole_diameter = 0.01007;  // m, 20 um diametral clearance
    std::array<double, 2> hole_center{0.0, 0.0};
    double surface_height = 0.0;
    double insertion_depth_goal = 0.010;  // m below the surface

    double contact_stiffness = 1e5;  // N/m
    double contact_damping = 1e2;    // N s/m
    double friction_coefficient = 0.15;

    double wall_stiffness = 5e4;        // N/m, hole mouth and walls
    double rim_guidance = 0.1;          // lateral rim force fraction of normal
    double entry_capture = 2.5e-4;      // m, edge-break funnel radius
    double entry_threshold = 1e-3;      // m below surface => Insertion
    double wall_align_stiffness = 200;  // Nm/rad toward the tilt-free cone
    double grip_length = 0.02;          // m, sensor sits this far above the tip

    std::array<double, 2> initial_offset{-0.003, 0.003};  // start rel. hole
    double initial_height = 0.0025;  // m above the surface
    double initial_tilt = 0.0;      // rad about a horizontal axis

    double descend_speed = 0.005;  // m/s
    double force_limit = 40.0;     // N, safety
    int max_agent_steps = 500;
    double wrench_noise_std = 0.0;  // N; 0 disables sensor noise

    double peg_radius() const { return 0.5 * peg_diameter; }
    double hole_radius() const { return 0.5 * hole_diameter; }
    double radial_clearance() const { return hole_radius() - peg_radius(); }
};

/// Gear insertion: the peg-in-hole base plus a 1-D tooth-phase model.
/// Teeth tops act as a second surface at seat depth until the phase error
/// falls inside the mesh tolerance under load.
struct GearWorld {
    PegHoleWorld base;
    int tooth_count = 20;         // module-2 spur gear
    double mesh_tolerance = 0.03;  // rad
    double seat_depth = 0.004;     // m below surface where teeth meet
    double tooth_radius = 0.02;    // m, friction lever of the tooth tops
    double mesh_lock_stiffness = 500.0;  // Nm/rad once meshed

    double tooth_pitch() const { return 2.0 * 3.14159265358979323846 / tooth_count; }
};

/// Straight-line reference: start pose descending along -z at constant
/// velocity; x, y and orientation stay at the start values.
Pose6 plan_trajectory(const Pose6& start, double descend_speed, double t);

/// Environment-on-tool reaction wrench measured at the grip, z up; pressing
/// down on the surface produces positive f_z. Penalty model: spring-damper
/// normal force, Coulomb friction against lateral slip, support-centroid
/// torque and a rim force toward the free direction while the peg bottom
/// overlaps the hole mouth.
Wrench6 contact_wrench(const PegHoleWorld& world, const Pose6& tool_pose,
                       const Twist6& tool_velocity);

/// Normalized 8-dim agent state
/// [p_x, p_y, (p_z-p_z^i)/(p_z^i-p_z^g), f_x/20, f_y/20, f_z/40, tau_x, tau_y].
std::array<double, 8> observe(const PegHoleWorld& world, const Pose6& tool_pose,
                              const Wrench6& wrench);

/// Stiffness index a perfectly informed agent would pick for the given
/// true relative position and phase: coupled drift toward the hole while
/// searching, soft-lateral/stiff-z once inserted, dither during teeth
/// alignment. Used by the sweep's contact-recognition metric.
std::size_t ideal_action_index(const PegHoleWorld& world, const Pose6& tool_pose,
                               TaskPhase phase, bool gear_task);

/// Per-episode scenario inputs the harness derives from its seeds.
struct EpisodeSetup {
    Pose6 start_pose;  // true world coordinates of the peg bottom center
    std::array<double, 2> observation_bias{0.0, 0.0};
    double tooth_phase = 0.0;  // gear only, rad
};

struct StepOutcome {
    CommandFrame frame;
    Wrench6 wrench;
    TaskPhase phase = TaskPhase::Search;
    bool terminal = false;
};

enum class FailReason { None, StepLimit, ForceLimit, Diverged };

/// Closed-loop episode: contact world + rigid tool plant + the 1 ms inner
/// loop. The held stiffness changes only when hold_stiffness() is called
/// (every agent period in the harness).
class Environment {
  public:
    Environment(const PegHoleWorld& world, const ControllerParams& params,
                const EpisodeSetup& setup);
    Environment(const GearWorld& world, const ControllerParams& params,
                const EpisodeSetup& setup);

    void hold_stiffness(const StiffnessMatrix& k) { held_ = &k; }

    /// One control tick of T_s^c. No-op once terminal.
    StepOutcome step();

    std::array<double, 8> observe_state() const;

    TaskPhase phase() const { return phase_; }
    bool terminal() const;
    bool diverged() const { return diverged_; }
    FailReason fail_reason() const { return fail_reason_; }
    double time() const { return time_; }
    long inner_tick() const { return tick_; }
    int agent_step() const;
    Pose6 tool_pose() const;
    const Wrench6& last_wrench() const { return last_wrench_; }
    const Pose6& start_pose() const { return setup_.start_pose; }
    Pose6 trajectory_pose() const;
    bool teeth_meshed() const { return meshed_; }
    double depth_below_surface() const;

    const PegHoleWorld& world() const { return world_; }
    bool is_gear_task() const { return gear_.has_value(); }

  private:
    void advance_phase();
    Wrench6 sense_wrench();

    PegHoleWorld world_;
    std::optional<GearWorld> gear_;
    ControllerParams params_;
    EpisodeSetup setup_;

    RigidToolPlant plant_;
    InnerLoopState loop_;
    const StiffnessMatrix* held_ = nullptr;

    TaskPhase phase_ = TaskPhase::Search;
    FailReason fail_reason_ = FailReason::None;
    bool diverged_ = false;
    bool meshed_ = false;
    double mesh_slot_ = 0.0;
    double seat_force_ = 0.0;
    double time_ = 0.0;
    long tick_ = 0;
    Wrench6 last_wrench_;
    mutable std::mt19937_64 noise_rng_{0x9e3779b97f4a7c15ull};
};

// Scenario presets.
PegHoleWorld pegin_20um_preset();
PegHoleWorld pegin_20um_tilt2_preset();
GearWorld gear_module2_preset();

}  // namespace varstiff
