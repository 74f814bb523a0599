#include "varstiff/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varstiff {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSlipEps = 1e-4;   // m/s, Coulomb regularization
constexpr double kSpinEps = 1e-3;   // rad/s

double smooth_unit(double v, double eps) { return v / (std::abs(v) + eps); }

/// Fraction of the peg bottom disc overhanging the hole mouth; equal-radius
/// lens area (the 10 um radius difference is negligible here).
double overhang_fraction(double dist, double r) {
    if (dist >= 2.0 * r) return 0.0;
    const double lens = 2.0 * r * r * std::acos(dist / (2.0 * r)) -
                        0.5 * dist * std::sqrt(4.0 * r * r - dist * dist);
    return std::clamp(lens / (kPi * r * r), 0.0, 1.0);
}

double force_norm(const Wrench6& w) {
    return std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
}

}  // namespace

const char* to_string(TaskPhase p) {
    switch (p) {
        case TaskPhase::Search: return "search";
        case TaskPhase::Insertion: return "insertion";
        case TaskPhase::TeethAlignment: return "teeth_alignment";
        case TaskPhase::Done: return "done";
        case TaskPhase::Failed: return "failed";
    }
    return "?";
}

Pose6 plan_trajectory(const Pose6& start, double descend_speed, double t) {
    Pose6 p = start;
    p[2] -= descend_speed * t;
    return p;
}

Wrench6 contact_wrench(const PegHoleWorld& world, const Pose6& tool_pose,
                       const Twist6& tool_velocity) {
    const double rp = world.peg_radius();
    const double rc = world.radial_clearance();
    const double dx = tool_pose[0] - world.hole_center[0];
    const double dy = tool_pose[1] - world.hole_center[1];
    const double dist = std::hypot(dx, dy);
    const double tilt_x = tool_pose[3];
    const double tilt_y = tool_pose[4];
    const double tilt = std::hypot(tilt_x, tilt_y);
    const double depth = world.surface_height - tool_pose[2];  // >0 below

    const double vx = tool_velocity[0];
    const double vy = tool_velocity[1];
    const double vz = tool_velocity[2];
    const double mu = world.friction_coefficient;

    double fx = 0, fy = 0, fz = 0, tx = 0, ty = 0, tz = 0;

    const double mouth_zone = 1.5 * world.entry_capture;

    // Surface support: flat plate with the hole mouth cut out; fades over
    // the funnel band so entry stays continuous. A tilted peg touches
    // edge-first, rp*tilt above the bottom center.
    const double penetration = depth + rp * tilt;
    if (penetration > 0.0 && depth <= world.entry_threshold) {
        double gate = 1.0;
        if (dist < mouth_zone)
            gate = std::clamp((dist - world.entry_capture) / (0.5 * world.entry_capture),
                              0.0, 1.0);
        double fn = world.contact_stiffness * penetration + world.contact_damping * (-vz);
        fn = gate * std::max(fn, 0.0);
        if (fn > 0.0) {
            fz += fn;

            const double vlat = std::hypot(vx, vy);
            fx += -mu * fn * vx / (vlat + kSlipEps);
            fy += -mu * fn * vy / (vlat + kSlipEps);

            const double u = overhang_fraction(dist, 0.5 * (rp + world.hole_radius()));
            if (u > 0.0 && dist > 1e-12) {
                // Pressure centroid shifts away from the hole; pressing
                // produces the torque the agent reads direction from.
                const double lever =
                    std::min(u / (1.0 - u + 1e-9) * 0.5 * dist, 0.8 * rp);
                const double cx = lever * dx / dist;
                const double cy = lever * dy / dist;
                tx += cy * fn;
                ty += -cx * fn;

                // Rim force toward the unsupported side (the mouth).
                const double rim = world.rim_guidance * u * fn;
                fx += -rim * dx / dist;
                fy += -rim * dy / dist;
            }

            if (tilt > 1e-9) {
                // Edge contact rights the peg.
                tx += -fn * rp * smooth_unit(tilt_x, 1e-3);
                ty += -fn * rp * smooth_unit(tilt_y, 1e-3);
            }
        }
    }

    // Mouth and hole walls: once the bottom dips below the surface over
    // the mouth, the rim blocks lateral escape and funnels to the axis;
    // deeper down the bore wall takes over. Engagement saturates within
    // the first 0.2 mm of dip so a caught edge stays caught. Over the
    // mouth a tilted peg engages edge-first.
    const double mouth_depth = dist < mouth_zone ? depth + rp * tilt : depth;
    if (mouth_depth > 0.0 && (dist < mouth_zone || depth > world.entry_threshold)) {
        const double engage = std::clamp(mouth_depth / 2e-4, 0.0, 1.0);
        double wall_normal = 0.0;
        if (dist > rc && dist > 1e-12) {
            const double vr = (vx * dx + vy * dy) / dist;
            wall_normal = world.wall_stiffness * (dist - rc) * engage +
                          world.contact_damping * std::max(vr, 0.0) * engage;
            fx += -wall_normal * dx / dist;
            fy += -wall_normal * dy / dist;
        }

        const double cone = 2.0 * rc / std::max(depth, 1e-3);
        double align_torque = 0.0;
        if (tilt > cone) {
            align_torque = world.wall_align_stiffness * (tilt - cone);
            tx += -align_torque * tilt_x / tilt;
            ty += -align_torque * tilt_y / tilt;
        }

        // Wall friction resists sliding along z. The two-point binding
        // couple rubs with an effective load tau/lever, bounded because the
        // rounded edges shed load into alignment rather than pure rub.
        const double bind_load =
            std::min(align_torque / std::max(depth, rp), 60.0);
        const double wall_load = wall_normal + bind_load;
        fz += mu * wall_load * smooth_unit(-vz, kSlipEps);
        (void)tz;
    }

    // The sensor sits grip_length above the tip: lateral forces at the tip
    // appear as bending torques at the grip.
    tx += world.grip_length * fy;
    ty += -world.grip_length * fx;

    return Wrench6{{fx, fy, fz, tx, ty, tz}};
}

std::array<double, 8> observe(const PegHoleWorld& world, const Pose6& tool_pose,
                              const Wrench6& wrench) {
    const double pz_initial = world.surface_height + world.initial_height;
    const double pz_goal = world.surface_height - world.insertion_depth_goal;
    return {
        tool_pose[0],
        tool_pose[1],
        (tool_pose[2] - pz_initial) / (pz_initial - pz_goal),
        wrench[0] / 20.0,
        wrench[1] / 20.0,
        wrench[2] / 40.0,
        wrench[3] / 1.0,
        wrench[4] / 1.0,
    };
}

std::size_t ideal_action_index(const PegHoleWorld& world, const Pose6& tool_pose,
                               TaskPhase phase, bool gear_task) {
    if (gear_task && phase == TaskPhase::TeethAlignment) return 4;
    if (phase == TaskPhase::Insertion || phase == TaskPhase::Done) return 3;

    const double dx = tool_pose[0] - world.hole_center[0];
    const double dy = tool_pose[1] - world.hole_center[1];
    const double dist = std::hypot(dx, dy);
    if (dist <= world.entry_capture) return 3;  // over the mouth: press in

    const double nx = -dx / dist;  // unit vector toward the hole
    const double ny = -dy / dist;

    // Drift directions under pressing contact: the x,y components of each
    // coupled K^-1 z-column, and for the diagonal K4 the release direction
    // back toward the commanded start (its lateral deviation decays to 0).
    double drift[4][2] = {
        {0.81671, -0.57724},  // K1
        {1.0, 0.0},           // K2
        {0.0, -1.0},          // K3
        {0.0, 0.0},           // K4: filled below
    };
    const double sx = world.hole_center[0] + world.initial_offset[0] - tool_pose[0];
    const double sy = world.hole_center[1] + world.initial_offset[1] - tool_pose[1];
    const double snorm = std::hypot(sx, sy);
    if (snorm > 1e-12) {
        drift[3][0] = sx / snorm;
        drift[3][1] = sy / snorm;
    }

    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double d = nx * drift[i][0] + ny * drift[i][1];
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    return best;
}

Environment::Environment(const PegHoleWorld& world, const ControllerParams& params,
                         const EpisodeSetup& setup)
    : world_(world),
      params_(params),
      setup_(setup),
      plant_(params.inertia, setup.start_pose) {
    params_.validate();
}

Environment::Environment(const GearWorld& world, const ControllerParams& params,
                         const EpisodeSetup& setup)
    : Environment(world.base, params, setup) {
    gear_ = world;
}

bool Environment::terminal() const {
    return phase_ == TaskPhase::Done || phase_ == TaskPhase::Failed;
}

Pose6 Environment::tool_pose() const { return plant_.pose(); }

Pose6 Environment::trajectory_pose() const {
    return plan_trajectory(setup_.start_pose, world_.descend_speed, time_);
}

double Environment::depth_below_surface() const {
    return world_.surface_height - plant_.pose()[2];
}

int Environment::agent_step() const {
    return static_cast<int>(tick_ / params_.ticks_per_agent_step());
}

Wrench6 Environment::sense_wrench() {
    const Pose6& pose = plant_.pose();
    const Twist6& vel = plant_.velocity();
    Wrench6 w = contact_wrench(world_, pose, vel);

    if (gear_ && depth_below_surface() > 0.0) {
        const GearWorld& g = *gear_;
        const double seat_z = world_.surface_height - g.seat_depth;
        if (!meshed_) {
            const double seat_pen = seat_z - pose[2];
            if (seat_pen > 0.0) {
                // Tooth tops are stiff but not plate-stiff: edges and tip
                // chamfers cushion the first hit.
                double fseat = world_.wall_stiffness * seat_pen +
                               world_.contact_damping * (-vel[2]);
                fseat = std::max(fseat, 0.0);
                w[2] += fseat;
                const double vlat = std::hypot(vel[0], vel[1]);
                w[0] += -world_.friction_coefficient * fseat * vel[0] / (vlat + 1e-4);
                w[1] += -world_.friction_coefficient * fseat * vel[1] / (vlat + 1e-4);
                // Tooth tops let the gear spin with slide friction only.
                w[5] += -world_.friction_coefficient * fseat * g.tooth_radius *
                        smooth_unit(vel[5], kSpinEps);
                seat_force_ = fseat;
            } else {
                seat_force_ = 0.0;
            }
        } else {
            seat_force_ = 0.0;
            // Meshed teeth lock the rotation to the slot.
            w[5] += -g.mesh_lock_stiffness * (pose[5] - mesh_slot_) - 1.0 * vel[5];
        }
    }

    plant_.set_external_wrench(w);

    if (world_.wrench_noise_std > 0.0) {
        std::normal_distribution<double> n(0.0, world_.wrench_noise_std);
        for (int i = 0; i < 6; ++i) w[i] += n(noise_rng_);
    }
    return w;
}

StepOutcome Environment::step() {
    StepOutcome out;
    if (terminal()) {
        out.phase = phase_;
        out.terminal = true;
        out.wrench = last_wrench_;
        out.frame.position_command = loop_.held_command;
        return out;
    }
    if (held_ == nullptr)
        throw std::logic_error("Environment::step called with no stiffness held");

    last_wrench_ = sense_wrench();

    if (force_norm(last_wrench_) > world_.force_limit) {
        phase_ = TaskPhase::Failed;
        fail_reason_ = FailReason::ForceLimit;
        out.phase = phase_;
        out.terminal = true;
        out.wrench = last_wrench_;
        out.frame.position_command = loop_.held_command;
        return out;
    }

    try {
        out.frame = inner_loop_tick(loop_, trajectory_pose(), last_wrench_, *held_,
                                    params_, time_, plant_);
    } catch (const Diverged&) {
        diverged_ = true;
        fail_reason_ = FailReason::Diverged;
        phase_ = TaskPhase::Failed;
        out.phase = phase_;
        out.terminal = true;
        out.wrench = last_wrench_;
        out.frame.position_command = loop_.held_command;
        return out;
    }

    ++tick_;
    time_ = static_cast<double>(tick_) * params_.control_period;

    advance_phase();

    const long budget =
        static_cast<long>(world_.max_agent_steps) * params_.ticks_per_agent_step();
    if (!terminal() && tick_ >= budget) {
        phase_ = TaskPhase::Failed;
        fail_reason_ = FailReason::StepLimit;
    }

    out.wrench = last_wrench_;
    out.phase = phase_;
    out.terminal = terminal();
    return out;
}

void Environment::advance_phase() {
    const double depth = depth_below_surface();
    switch (phase_) {
        case TaskPhase::Search:
            if (depth >= world_.entry_threshold) phase_ = TaskPhase::Insertion;
            break;
        case TaskPhase::Insertion:
            if (gear_ && !meshed_ && depth >= gear_->seat_depth - 1e-3) {
                phase_ = TaskPhase::TeethAlignment;
            } else if (!gear_ && depth >= world_.insertion_depth_goal) {
                phase_ = TaskPhase::Done;
            }
            break;
        case TaskPhase::TeethAlignment: {
            const GearWorld& g = *gear_;
            if (!meshed_ && seat_force_ > 0.5) {
                const double pitch = g.tooth_pitch();
                double err = std::remainder(plant_.pose()[5] - setup_.tooth_phase, pitch);
                if (std::abs(err) <= g.mesh_tolerance) {
                    meshed_ = true;
                    mesh_slot_ = plant_.pose()[5] - err;
                }
            }
            if (depth >= world_.insertion_depth_goal) phase_ = TaskPhase::Done;
            break;
        }
        case TaskPhase::Done:
        case TaskPhase::Failed:
            break;
    }
}

std::array<double, 8> Environment::observe_state() const {
    Pose6 biased = plant_.pose();
    biased[0] += setup_.observation_bias[0];
    biased[1] += setup_.observation_bias[1];
    return observe(world_, biased, last_wrench_);
}

PegHoleWorld pegin_20um_preset() { return PegHoleWorld{}; }

PegHoleWorld pegin_20um_tilt2_preset() {
    PegHoleWorld w;
    w.initial_tilt = 2.0 * kPi / 180.0;
    return w;
}

GearWorld gear_module2_preset() {
    GearWorld g;
    g.base.descend_speed = 0.01;
    g.base.insertion_depth_goal = 0.008;
    return g;
}

}  // namespace varstiff
