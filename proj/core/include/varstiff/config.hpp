#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "varstiff/admittance.hpp"
#include "varstiff/simenv.hpp"
#include "varstiff/stiffness.hpp"

namespace varstiff {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AgentConfig {
    std::vector<int> hidden_layers{64, 64};
    double gamma = 0.995;
    double alpha = 5e-3;
    double epsilon0 = 1.0;
    double beta = 0.995;  // per-episode epsilon decay
    double min_epsilon = 0.05;
    int batch_size = 64;
    std::size_t replay_capacity = 10000;
    int target_copy_interval = 100;  // updates between target-net copies
    /// Symmetric clamp on the TD error inside the training loop
    /// (rewards live in [-1,1]); 0 disables.
    double td_error_clip = 1.0;
    /// SGD momentum inside the training loop; 0 keeps the plain update.
    double sgd_momentum = 0.0;
    /// Every this many episodes the trainer probes the greedy policy on
    /// fresh scenario draws and keeps the best-scoring snapshot as the
    /// checkpoint. 0 returns the final network instead.
    int snapshot_interval = 25;
    int snapshot_probes = 10;
};

struct TrainingConfig {
    int episodes = 500;
    /// Uniform per-episode jitter of the true start position (m); the
    /// commanded start stays nominal, so observations carry the error.
    double start_jitter = 1e-3;
    /// Extra per-episode error of the robot's hole estimate (m); rides on
    /// every position observation and teaches the agent to lean on the
    /// wrench instead.
    double bias_jitter = 1e-3;
    /// Fraction of training episodes whose true start is drawn uniformly
    /// over the precondition quadrant (up to the nominal offset) instead
    /// of the nominal start; spreads competence over the whole approach
    /// region the evaluation grids probe.
    double quadrant_fraction = 0.5;
    /// Success-rate threshold of the 20-episode moving average reported
    /// by the learning curve.
    int moving_window = 20;
};

struct EvaluationConfig {
    double start_jitter = 2e-4;  // m, micro-perturbation for eval spreads
    double histogram_bin = 0.25;  // s
    std::vector<double> sweep_periods_ms{1, 2, 5, 20};
};

/// One experiment: scenario preset + every knob it needs. All defaults
/// reproduce the reference setup.
struct ExperimentConfig {
    std::string scenario = "pegin-20um";  // pegin-20um | pegin-20um-tilt2 | gear-module2
    std::uint64_t seed = 1;
    std::string output_dir = ".";

    ControllerParams controller = ControllerParams::defaults();
    PegHoleWorld world = pegin_20um_preset();
    GearWorld gear = gear_module2_preset();
    double dither_omega = default_dither_omega();

    AgentConfig agent;
    TrainingConfig training;
    EvaluationConfig evaluation;

    bool is_gear() const { return scenario == "gear-module2"; }

    /// Catalog the scenario trains/evaluates over.
    ActionCatalog catalog() const;

    /// Active world of the scenario (gear worlds share the peg base).
    const PegHoleWorld& active_world() const {
        return is_gear() ? gear.base : world;
    }

    void validate() const;
};

/// Parse a config file (JSON). Unknown keys and wrong types are
/// ConfigErrors; missing keys keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Apply the scenario preset, then re-apply any explicit overrides.
/// Used by the CLI's --scenario flag.
void apply_scenario(ExperimentConfig& cfg, const std::string& scenario);

/// Canonical JSON rendering (also what gets hashed).
std::string config_to_json(const ExperimentConfig& cfg);

/// FNV-1a hash of the canonical rendering, as "0x" hex.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace varstiff
