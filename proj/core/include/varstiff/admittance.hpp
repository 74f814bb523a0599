#pragma once

#include "varstiff/linalg.hpp"
#include "varstiff/stiffness.hpp"

namespace varstiff {

/// Thrown when the admittance deviation leaves the safety envelope,
/// signalling an unstable stiffness/damping/sampling combination.
struct Diverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inner-loop controller parameters. Defaults reproduce the reference
/// controller: Kp=diag(500), Kd=diag(50), I=diag(1.58,2.08,1.09,
/// 0.081,0.112,0.035), 12 Hz derivative filter, 1 ms control period,
/// 20 ms agent period.
struct ControllerParams {
    Mat6 kp;
    Mat6 kd;
    Mat6 inertia;
    /// Damping of the virtual admittance dynamics I x" + D x' + K x = F.
    /// Default: per-axis critical against the stiffest catalog entry,
    /// D_ii = 2 sqrt(I_ii * Kmax_ii).
    Mat6 admittance_damping;

    double derivative_filter_cutoff_hz = 12.0;
    double control_period = 0.001;  // T_s^c
    double agent_period = 0.02;     // T_s^NN
    /// Update period of the admittance model itself; 0 means equal to
    /// control_period. The sampling-period sweep raises this while the
    /// PD/DOB keep running at control_period.
    double admittance_period = 0.0;

    double dob_cutoff_hz = 30.0;

    // Safety envelope on the admittance deviation.
    double max_deviation_translation = 0.1;  // m
    double max_deviation_rotation = 1.0;     // rad

    double torque_limit = 0.0;  // N / Nm per axis; 0 disables the clamp

    static ControllerParams defaults();

    double effective_admittance_period() const {
        return admittance_period > 0.0 ? admittance_period : control_period;
    }
    int ticks_per_agent_step() const;
    int ticks_per_admittance_step() const;

    /// Gains positive, periods positive and integer multiples of
    /// control_period. Throws std::invalid_argument.
    void validate() const;
};

/// Damping matrix with D_ii = 2 sqrt(I_ii * kmax_i).
Mat6 critical_damping(const Mat6& inertia, const Vec6& kmax_diagonal);

/// State of the virtual admittance dynamics.
struct AdmittanceState {
    Vec6 deviation;       // x^adm
    Vec6 deviation_rate;  // d/dt x^adm
};

/// Derivative-filter state of the PD controller.
struct PdFilterState {
    Vec6 filtered_derivative;
    Vec6 prev_error;
    bool has_prev = false;
};

/// First-order disturbance-observer state; the state is the estimate.
struct DobState {
    Vec6 estimate;
};

/// One inner-loop output: position command handed to the position
/// controller plus the torque actually applied.
struct CommandFrame {
    Pose6 position_command;  // x^traj + x^adm
    Vec6 feedback_torque;
};

/// One semi-implicit Euler step of I x" + D x' + K(t) x = F over the
/// effective admittance period. Throws Diverged outside the safety
/// envelope. Under constant wrench and fixed K the iterates converge to
/// solve(K, F).
AdmittanceState step_admittance(const AdmittanceState& state,
                                const StiffnessMatrix& k,
                                const Wrench6& wrench,
                                const ControllerParams& params, double t);

/// torque = Kp e + Kd * lowpass(de/dt), first-order filter at the
/// configured cutoff discretized at control_period.
std::pair<Vec6, PdFilterState> pd_control(const Pose6& command,
                                          const Pose6& response,
                                          const ControllerParams& params,
                                          const PdFilterState& filter);

/// First-order-filtered estimate of the external wrench
/// I*a_measured - torque_applied.
std::pair<Vec6, DobState> dob_step(const DobState& state,
                                   const Vec6& applied_torque,
                                   const Vec6& measured_acceleration,
                                   const ControllerParams& params);

/// Plant seen by the inner loop. Implementations add their own external
/// wrench (contact, injected disturbance) inside step().
class Plant {
  public:
    virtual ~Plant() = default;
    virtual Pose6 pose() const = 0;
    virtual Twist6 velocity() const = 0;
    /// Acceleration realized during the most recent step().
    virtual Vec6 acceleration() const = 0;
    virtual void step(const Vec6& applied_torque, double dt) = 0;
};

/// Decoupled rigid tool: I q" = torque + external wrench. The external
/// wrench is set per tick by the caller (contact model or test rig).
class RigidToolPlant : public Plant {
  public:
    explicit RigidToolPlant(const Mat6& inertia, const Pose6& initial_pose = {});

    Pose6 pose() const override { return pose_; }
    Twist6 velocity() const override { return velocity_; }
    Vec6 acceleration() const override { return acceleration_; }
    void step(const Vec6& applied_torque, double dt) override;

    void set_external_wrench(const Wrench6& w) { external_ = w; }
    const Wrench6& external_wrench() const { return external_; }

  private:
    Mat6 inertia_;
    Pose6 pose_;
    Twist6 velocity_;
    Vec6 acceleration_;
    Wrench6 external_;
};

/// All filter and integrator states advanced by inner_loop_tick.
struct InnerLoopState {
    AdmittanceState admittance;
    PdFilterState pd;
    DobState dob;
    Vec6 applied_torque;   // torque of the previous tick (DOB input)
    Pose6 held_command;    // command held between admittance updates
    long tick = 0;
};

/// One 1 ms tick: advance the admittance model (at its own period),
/// run PD + DOB against the plant and step the plant. Returns the
/// command frame; mutates `state` and `plant`.
CommandFrame inner_loop_tick(InnerLoopState& state, const Pose6& x_traj,
                             const Wrench6& wrench, const StiffnessMatrix& k,
                             const ControllerParams& params, double t,
                             Plant& plant);

}  // namespace varstiff
