#include "varstiff/admittance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varstiff {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double lowpass_alpha(double cutoff_hz, double dt) {
    const double tau = 1.0 / (kTwoPi * cutoff_hz);
    return dt / (dt + tau);
}

int period_ratio(double period, double base, const char* what) {
    const double ratio = period / base;
    const int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-9)
        throw std::invalid_argument(std::string(what) +
                                    " must be a positive integer multiple of control_period");
    return n;
}

}  // namespace

Mat6 critical_damping(const Mat6& inertia, const Vec6& kmax_diagonal) {
    Mat6 d;
    for (int i = 0; i < 6; ++i)
        d(i, i) = 2.0 * std::sqrt(inertia(i, i) * kmax_diagonal[i]);
    return d;
}

ControllerParams ControllerParams::defaults() {
    ControllerParams p;
    p.kp = Mat6::diagonal({500, 500, 500, 500, 500, 500});
    p.kd = Mat6::diagonal({50, 50, 50, 50, 50, 50});
    p.inertia = Mat6::diagonal({1.58, 2.08, 1.09, 0.081, 0.112, 0.035});
    // Stiffest diagonal across the built-in catalogs.
    p.admittance_damping = critical_damping(p.inertia, {800, 800, 800, 50, 50, 50});
    return p;
}

int ControllerParams::ticks_per_agent_step() const {
    return period_ratio(agent_period, control_period, "agent_period");
}

int ControllerParams::ticks_per_admittance_step() const {
    return period_ratio(effective_admittance_period(), control_period,
                        "admittance_period");
}

void ControllerParams::validate() const {
    if (control_period <= 0.0)
        throw std::invalid_argument("control_period must be positive");
    for (int i = 0; i < 6; ++i) {
        if (kp(i, i) <= 0.0 || kd(i, i) <= 0.0)
            throw std::invalid_argument("PD gains must be positive");
        if (inertia(i, i) <= 0.0)
            throw std::invalid_argument("inertia diagonal must be positive");
        if (admittance_damping(i, i) < 0.0)
            throw std::invalid_argument("admittance damping must be non-negative");
    }
    if (derivative_filter_cutoff_hz <= 0.0 || dob_cutoff_hz <= 0.0)
        throw std::invalid_argument("filter cutoffs must be positive");
    if (max_deviation_translation <= 0.0 || max_deviation_rotation <= 0.0)
        throw std::invalid_argument("safety envelope must be positive");
    ticks_per_agent_step();
    ticks_per_admittance_step();
}

namespace {

void check_envelope(const Vec6& deviation, const ControllerParams& params) {
    if (!is_finite(deviation))
        throw Diverged("admittance deviation is not finite");
    for (int i = 0; i < 3; ++i)
        if (std::abs(deviation[i]) > params.max_deviation_translation)
            throw Diverged("admittance deviation exceeded translational envelope");
    for (int i = 3; i < 6; ++i)
        if (std::abs(deviation[i]) > params.max_deviation_rotation)
            throw Diverged("admittance deviation exceeded rotational envelope");
}

}  // namespace

AdmittanceState step_admittance(const AdmittanceState& state,
                                const StiffnessMatrix& k,
                                const Wrench6& wrench,
                                const ControllerParams& params, double t) {
    const double dt = params.effective_admittance_period();

    const Vec6 elastic = k.at(t) * state.deviation;
    const Vec6 damping = params.admittance_damping * state.deviation_rate;
    const Vec6 accel = solve(params.inertia, wrench - damping - elastic);

    AdmittanceState next;
    next.deviation_rate = state.deviation_rate + dt * accel;
    next.deviation = state.deviation + dt * next.deviation_rate;
    check_envelope(next.deviation, params);
    return next;
}

std::pair<Vec6, PdFilterState> pd_control(const Pose6& command,
                                          const Pose6& response,
                                          const ControllerParams& params,
                                          const PdFilterState& filter) {
    const double dt = params.control_period;
    const Vec6 error = command - response;

    Vec6 raw_derivative;
    if (filter.has_prev) raw_derivative = (error - filter.prev_error) * (1.0 / dt);

    const double alpha = lowpass_alpha(params.derivative_filter_cutoff_hz, dt);
    PdFilterState next;
    next.filtered_derivative =
        filter.filtered_derivative + alpha * (raw_derivative - filter.filtered_derivative);
    next.prev_error = error;
    next.has_prev = true;

    const Vec6 torque = params.kp * error + params.kd * next.filtered_derivative;
    return {torque, next};
}

std::pair<Vec6, DobState> dob_step(const DobState& state,
                                   const Vec6& applied_torque,
                                   const Vec6& measured_acceleration,
                                   const ControllerParams& params) {
    const Vec6 raw = params.inertia * measured_acceleration - applied_torque;
    const double alpha = lowpass_alpha(params.dob_cutoff_hz, params.control_period);
    DobState next;
    next.estimate = state.estimate + alpha * (raw - state.estimate);
    return {next.estimate, next};
}

RigidToolPlant::RigidToolPlant(const Mat6& inertia, const Pose6& initial_pose)
    : inertia_(inertia), pose_(initial_pose) {}

void RigidToolPlant::step(const Vec6& applied_torque, double dt) {
    acceleration_ = solve(inertia_, applied_torque + external_);
    velocity_ += dt * acceleration_;
    pose_ += dt * velocity_;
}

CommandFrame inner_loop_tick(InnerLoopState& state, const Pose6& x_traj,
                             const Wrench6& wrench, const StiffnessMatrix& k,
                             const ControllerParams& params, double t,
                             Plant& plant) {
    const int adm_ratio = params.ticks_per_admittance_step();
    if (state.tick % adm_ratio == 0) {
        state.admittance = step_admittance(state.admittance, k, wrench, params, t);
        state.held_command = x_traj + state.admittance.deviation;
    }

    auto [pd_torque, pd_next] = pd_control(state.held_command, plant.pose(), params, state.pd);
    state.pd = pd_next;

    auto [disturbance, dob_next] =
        dob_step(state.dob, state.applied_torque, plant.acceleration(), params);
    state.dob = dob_next;

    Vec6 torque = pd_torque - disturbance;
    if (params.torque_limit > 0.0)
        for (int i = 0; i < 6; ++i)
            torque[i] = std::clamp(torque[i], -params.torque_limit, params.torque_limit);

    plant.step(torque, params.control_period);
    state.applied_torque = torque;
    ++state.tick;

    return CommandFrame{state.held_command, torque};
}

}  // namespace varstiff
