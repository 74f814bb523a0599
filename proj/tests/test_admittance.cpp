#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "varstiff/admittance.hpp"
#include "varstiff/stiffness.hpp"

using namespace varstiff;

namespace {

AdmittanceState run_to(const StiffnessMatrix& k, const Wrench6& f,
                       const ControllerParams& p, double seconds) {
    AdmittanceState st;
    const long n = std::lround(seconds / p.effective_admittance_period());
    for (long i = 0; i < n; ++i)
        st = step_admittance(st, k, f, p, i * p.effective_admittance_period());
    return st;
}

}  // namespace

TEST_CASE("defaults match the reference controller table") {
    const ControllerParams p = ControllerParams::defaults();
    for (int i = 0; i < 6; ++i) {
        CHECK(p.kp(i, i) == 500.0);
        CHECK(p.kd(i, i) == 50.0);
    }
    CHECK(p.inertia(0, 0) == 1.58);
    CHECK(p.inertia(1, 1) == 2.08);
    CHECK(p.inertia(2, 2) == 1.09);
    CHECK(p.inertia(3, 3) == 0.081);
    CHECK(p.inertia(4, 4) == 0.112);
    CHECK(p.inertia(5, 5) == 0.035);
    CHECK(p.derivative_filter_cutoff_hz == 12.0);
    CHECK(p.control_period == 0.001);
    CHECK(p.agent_period == 0.02);
    CHECK(p.ticks_per_agent_step() == 20);
    CHECK_NOTHROW(p.validate());

    // Critically damped against the stiffest catalog diagonal.
    CHECK(p.admittance_damping(2, 2) ==
          doctest::Approx(2.0 * std::sqrt(1.09 * 800.0)).epsilon(1e-12));
}

TEST_CASE("params validation rejects broken setups") {
    ControllerParams p = ControllerParams::defaults();
    p.agent_period = 0.0215;  // not a multiple of 1 ms
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = ControllerParams::defaults();
    p.kp(2, 2) = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = ControllerParams::defaults();
    p.admittance_period = 0.005;
    CHECK_NOTHROW(p.validate());
    CHECK(p.ticks_per_admittance_step() == 5);
}

TEST_CASE("step_admittance: zero wrench keeps a zero state") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();
    AdmittanceState st;
    for (int i = 0; i < 1000; ++i) st = step_admittance(st, peg[0], Wrench6{}, p, i * 1e-3);
    CHECK(norm(st.deviation) == 0.0);
    CHECK(norm(st.deviation_rate) == 0.0);
}

TEST_CASE("step_admittance: K4 under 8 N z converges to 8/800 = 0.01 m") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();
    Wrench6 f;
    f[2] = 8.0;
    const AdmittanceState st = run_to(peg[3], f, p, 10.0);
    CHECK(std::abs(st.deviation[2] - 0.01) <= 1e-4 * 0.01);
}

TEST_CASE("step_admittance: K1 under 1 N z matches the solve oracle") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();
    Wrench6 f;
    f[2] = 1.0;
    const AdmittanceState st = run_to(peg[0], f, p, 10.0);
    const Vec6 want = oracles::gj_solve(peg[0].k, f);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(st.deviation[i] - want[i]) <=
              1e-4 * std::max(std::abs(want[i]), 1e-9));
    // The published coupling drifts +x and -y under pressing contact.
    CHECK(st.deviation[0] > 0.0);
    CHECK(st.deviation[1] < 0.0);
}

TEST_CASE("equilibrium law: converged deviation equals solve(K,F) for the catalog") {
    const ControllerParams p = ControllerParams::defaults();
    std::mt19937_64 rng(5);
    for (const StiffnessMatrix& k : peg_in_hole_catalog().matrices) {
        for (int trial = 0; trial < 6; ++trial) {
            Wrench6 f = oracles::random_vec6(rng, 10.0);
            f[3] *= 0.1;  // keep rotations inside the envelope
            f[4] *= 0.1;
            f[5] *= 0.1;
            const AdmittanceState st = run_to(k, f, p, 10.0);
            const Vec6 want = oracles::gj_solve(k.k, f);
            for (int i = 0; i < 6; ++i)
                CHECK(std::abs(st.deviation[i] - want[i]) <=
                      1e-4 * std::max(std::abs(want[i]), 1e-8));
        }
    }
}

TEST_CASE("step_admittance: envelope breach raises Diverged") {
    ControllerParams p = ControllerParams::defaults();
    // Negative stiffness: the deviation runs away and must be caught.
    StiffnessMatrix bad;
    bad.k = Mat6::diagonal({-400, -400, -400, -40, -40, -40});
    Wrench6 f;
    f[0] = 5.0;
    AdmittanceState st;
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 20000; ++i) st = step_admittance(st, bad, f, p, i * 1e-3);
        }(),
        Diverged);
}

TEST_CASE("pd_control: zero error gives zero torque, constant error settles to Kp*e") {
    const ControllerParams p = ControllerParams::defaults();
    PdFilterState filt;
    auto [tau0, f0] = pd_control(Pose6{}, Pose6{}, p, filt);
    CHECK(norm(tau0) == 0.0);

    Pose6 cmd;
    cmd[1] = 0.002;
    PdFilterState state;
    Vec6 tau;
    for (int i = 0; i < 2000; ++i) std::tie(tau, state) = pd_control(cmd, Pose6{}, p, state);
    CHECK(tau[1] == doctest::Approx(500.0 * 0.002).epsilon(1e-9));
    CHECK(std::abs(tau[0]) < 1e-12);
}

TEST_CASE("pd_control: 12 Hz error is attenuated to 1/sqrt(2) of the unfiltered derivative") {
    const ControllerParams p = ControllerParams::defaults();
    const double freq = 12.0;
    const double w = 2.0 * 3.14159265358979323846 * freq;
    const double amp = 0.001;

    PdFilterState state;
    double max_filtered = 0.0;
    const int settle = 2000, total = 4000;
    for (int i = 0; i < total; ++i) {
        const double t = i * p.control_period;
        Pose6 cmd;
        cmd[0] = amp * std::sin(w * t);
        auto [tau, next] = pd_control(cmd, Pose6{}, p, state);
        state = next;
        if (i > settle) max_filtered = std::max(max_filtered, std::abs(state.filtered_derivative[0]));
    }
    const double unfiltered_amp = amp * w;
    CHECK(max_filtered ==
          doctest::Approx(unfiltered_amp / std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("dob_step: zero in, zero out") {
    const ControllerParams p = ControllerParams::defaults();
    DobState st;
    for (int i = 0; i < 100; ++i) {
        auto [est, next] = dob_step(st, Vec6{}, Vec6{}, p);
        st = next;
        CHECK(norm(est) == 0.0);
    }
}

TEST_CASE("dob_step: constant disturbance on a double integrator converges in 5 tau") {
    const ControllerParams p = ControllerParams::defaults();
    RigidToolPlant plant(p.inertia);
    Wrench6 disturbance;
    disturbance[0] = 3.0;
    disturbance[4] = 0.4;
    plant.set_external_wrench(disturbance);

    DobState st;
    Vec6 applied;  // zero control torque; everything the plant feels is disturbance
    const double tau_f = 1.0 / (2.0 * 3.14159265358979323846 * p.dob_cutoff_hz);
    const long steps = std::lround(5.0 * tau_f / p.control_period);
    Vec6 est;
    for (long i = 0; i < steps; ++i) {
        plant.step(applied, p.control_period);
        std::tie(est, st) = dob_step(st, applied, plant.acceleration(), p);
    }
    CHECK(std::abs(est[0] - 3.0) <= 0.02 * 3.0);
    CHECK(std::abs(est[4] - 0.4) <= 0.02 * 0.4);

    // Remove the disturbance: the estimate decays below 2% of the step.
    plant.set_external_wrench(Wrench6{});
    for (long i = 0; i < steps; ++i) {
        plant.step(applied, p.control_period);
        std::tie(est, st) = dob_step(st, applied, plant.acceleration(), p);
    }
    CHECK(std::abs(est[0]) <= 0.02 * 3.0);
}

TEST_CASE("inner loop: free motion tracks the ramp below 1e-6 m after settling") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();
    RigidToolPlant plant(p.inertia);
    InnerLoopState loop;

    const double speed = 0.005;
    double worst_late = 0.0;
    const int total = 8000;
    for (int i = 0; i < total; ++i) {
        const double t = i * p.control_period;
        // Error as the controller sees it at the tick instant.
        if (i > total - 1000)
            worst_late = std::max(worst_late, std::abs(plant.pose()[2] - (-speed * t)));
        Pose6 traj;
        traj[2] = -speed * t;
        inner_loop_tick(loop, traj, Wrench6{}, peg[3], p, t, plant);
    }
    CHECK(worst_late < 1e-6);
}

TEST_CASE("inner loop: stiffness choice has no effect during free motion") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog gear = gear_catalog();

    std::vector<std::vector<double>> traces;
    for (const StiffnessMatrix& k : gear.matrices) {
        RigidToolPlant plant(p.inertia);
        InnerLoopState loop;
        std::vector<double> zs;
        for (int i = 0; i < 3000; ++i) {
            const double t = i * p.control_period;
            Pose6 traj;
            traj[0] = 0.001 * t;
            traj[2] = -0.005 * t;
            inner_loop_tick(loop, traj, Wrench6{}, k, p, t, plant);
            zs.push_back(plant.pose()[2]);
            zs.push_back(plant.pose()[0]);
        }
        traces.push_back(std::move(zs));
    }
    for (std::size_t i = 1; i < traces.size(); ++i) {
        REQUIRE(traces[i].size() == traces[0].size());
        for (std::size_t j = 0; j < traces[0].size(); ++j)
            CHECK(std::abs(traces[i][j] - traces[0][j]) <= 1e-12);
    }
}

TEST_CASE("inner loop: DOB makes the plant hold the command against contact force") {
    // Constant external push without DOB shifts PD tracking by F/Kp;
    // with the DOB the residual offset shrinks well below that.
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();
    RigidToolPlant plant(p.inertia);
    InnerLoopState loop;
    Wrench6 push;
    push[0] = 5.0;
    plant.set_external_wrench(push);

    // Hold the trajectory still; the admittance model itself is fed a zero
    // wrench so the command stays at the origin and only the plant is pushed.
    for (int i = 0; i < 6000; ++i)
        inner_loop_tick(loop, Pose6{}, Wrench6{}, peg[3], p, i * p.control_period, plant);

    const double no_dob_offset = 5.0 / 500.0;  // F / Kp
    CHECK(std::abs(plant.pose()[0]) < 0.02 * no_dob_offset);
}

TEST_CASE("inner loop: admittance holds command between slow updates") {
    ControllerParams p = ControllerParams::defaults();
    p.admittance_period = 0.005;
    const ActionCatalog peg = peg_in_hole_catalog();
    RigidToolPlant plant(p.inertia);
    InnerLoopState loop;
    Wrench6 f;
    f[2] = 2.0;

    std::vector<double> commands;
    for (int i = 0; i < 20; ++i) {
        const CommandFrame frame =
            inner_loop_tick(loop, Pose6{}, f, peg[3], p, i * p.control_period, plant);
        commands.push_back(frame.position_command[2]);
    }
    // Within each 5-tick block the held command is constant.
    for (int block = 0; block < 4; ++block)
        for (int k = 1; k < 5; ++k)
            CHECK(commands[block * 5 + k] == commands[block * 5]);
    // Across blocks it moves.
    CHECK(commands[5] != commands[0]);
}

TEST_CASE("determinism: identical inputs produce bit-identical state sequences") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();

    auto run = [&]() {
        RigidToolPlant plant(p.inertia);
        InnerLoopState loop;
        Wrench6 f;
        f[1] = 1.5;
        f[2] = 4.0;
        std::vector<double> out;
        for (int i = 0; i < 2500; ++i) {
            inner_loop_tick(loop, Pose6{}, f, peg[0], p, i * p.control_period, plant);
            out.push_back(plant.pose()[1]);
            out.push_back(loop.admittance.deviation[2]);
            out.push_back(loop.dob.estimate[2]);
        }
        return out;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("energy sanity: distance to equilibrium decays envelope-wise") {
    const ControllerParams p = ControllerParams::defaults();
    const ActionCatalog peg = peg_in_hole_catalog();
    Wrench6 f;
    f[0] = 3.0;
    f[2] = 6.0;
    const Vec6 eq = oracles::gj_solve(peg[0].k, f);

    AdmittanceState st;
    double prev_peak = 1e300;
    double window_peak = 0.0;
    int checked = 0;
    for (int i = 0; i < 12000; ++i) {
        st = step_admittance(st, peg[0], f, p, i * 1e-3);
        window_peak = std::max(window_peak, norm(st.deviation - eq));
        if ((i + 1) % 2000 == 0) {
            if (checked > 0) CHECK(window_peak <= prev_peak * (1.0 + 1e-12));
            prev_peak = window_peak;
            window_peak = 0.0;
            ++checked;
        }
    }
    CHECK(checked >= 5);
}
