#pragma once

#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "varstiff/agent.hpp"
#include "varstiff/config.hpp"
#include "varstiff/simenv.hpp"

namespace varstiff {

/// Action source for an episode; training and evaluation differ only here.
using Policy = std::function<std::size_t(const State8&)>;

Policy greedy_policy(const QNetwork& net);
Policy eps_greedy_policy(const QNetwork& net, const ExplorationSchedule& schedule,
                         std::mt19937_64& rng);

/// One row per inner control tick (cadence T_s^c).
struct StepRow {
    double t = 0.0;
    Pose6 pose;       // true tool pose
    Wrench6 wrench;   // sensed wrench
    int action = -1;
    TaskPhase phase = TaskPhase::Search;
    double reward = 0.0;  // nonzero only on the terminal row
};

struct EpisodeSummary {
    TaskPhase outcome = TaskPhase::Failed;
    bool diverged = false;
    int agent_steps = 0;
    long inner_ticks = 0;
    long search_ticks = 0;
    long insertion_ticks = 0;
    long alignment_ticks = 0;
    double reward = 0.0;
    double control_period = 1e-3;

    double search_time() const { return search_ticks * control_period; }
    double insertion_time() const { return insertion_ticks * control_period; }
    double alignment_time() const { return alignment_ticks * control_period; }
    double total_time() const { return inner_ticks * control_period; }
};

struct EpisodeLog {
    std::vector<StepRow> rows;  // empty unless recording was requested
    EpisodeSummary summary;
};

/// Derive a per-episode scenario: true start = hole + true_offset +
/// uniform jitter, while the observation claims the robot starts at the
/// nominal (trained) offset — the difference is the hole-estimate error
/// the agent has to work around. Also draws the tilt axis and the gear
/// tooth phase where applicable.
EpisodeSetup draw_episode_setup(const ExperimentConfig& cfg, double true_offset_x,
                                double true_offset_y, double start_jitter,
                                std::mt19937_64& rng, double bias_jitter = 0.0);

/// Training/default variant: the true offset is the nominal one and the
/// bias jitter comes from the training config.
EpisodeSetup draw_episode_setup(const ExperimentConfig& cfg, double start_jitter,
                                std::mt19937_64& rng);

/// Environment for the configured scenario.
Environment make_environment(const ExperimentConfig& cfg, const EpisodeSetup& setup);

struct RunOptions {
    bool record_rows = false;
    /// Invoked after each agent decision with (step_index, state, action).
    std::function<void(int, const State8&, std::size_t)> on_decision;
};

/// Drive one episode: every agent period query the policy, hold the chosen
/// catalog matrix and advance the inner loop. Returns the log with summary
/// timings split by phase.
EpisodeLog run_episode(Environment& env, const ActionCatalog& catalog,
                       const Policy& policy, const ControllerParams& params,
                       const RunOptions& options = {});

/// Step-log CSV: header comment with config hash + seed, then
/// t_s,px,py,pz,rx,ry,rz,fx,fy,fz,tx,ty,tz,action,phase.
void write_step_log(std::ostream& out, const EpisodeLog& log,
                    const std::string& config_hash, std::uint64_t seed);

/// Parse a step-log CSV back (used by trace-actions and the tests).
EpisodeLog read_step_log(std::istream& in);

}  // namespace varstiff
