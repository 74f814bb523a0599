#pragma once

#include <iosfwd>
#include <vector>

#include "varstiff/episode.hpp"

namespace varstiff {

/// Reported (never thrown past the CLI boundary): a run whose episodes
/// kept breaching the admittance safety envelope (exit code 3).
struct DivergedRun : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EpisodeCurvePoint {
    int episode = 0;
    double reward = 0.0;
    bool success = false;
    int steps = 0;
    double epsilon = 0.0;
    bool diverged = false;
};

struct TrainingResult {
    Checkpoint checkpoint;
    std::vector<EpisodeCurvePoint> curve;
    int diverged_episodes = 0;

    /// Peak 20-episode moving-average success rate over the run.
    double best_moving_success(int window) const;
};

/// Train a DQN over the scenario catalog. Deterministic for a fixed
/// config+seed. A zero episode budget returns the freshly initialized
/// network and an empty curve.
TrainingResult run_training(const ExperimentConfig& cfg);

/// Re-derive the network for a checkpoint, verifying the catalog
/// fingerprint against the configured scenario.
QNetwork network_for(const ExperimentConfig& cfg, const Checkpoint& cp);

/// Greedy evaluation episode with explicit setup; rows recorded on demand.
EpisodeLog run_eval_episode(const ExperimentConfig& cfg, const QNetwork& net,
                            const EpisodeSetup& setup, bool record_rows);

struct GridCell {
    double offset_x = 0.0;
    double offset_y = 0.0;
    int episodes = 0;
    int successes = 0;
    double rate() const { return episodes ? double(successes) / episodes : 0.0; }
};

struct GridResult {
    std::vector<GridCell> cells;  // row major over (x, y)
    const GridCell* find(double x, double y) const;
};

/// epsilon = 0 evaluation over true start offsets; the observation keeps
/// claiming the nominal start, as when the hole is displaced under an
/// unaware robot.
GridResult run_success_grid(const ExperimentConfig& cfg, const Checkpoint& cp,
                            const std::vector<double>& offsets_x,
                            const std::vector<double>& offsets_y,
                            int episodes_per_cell);

struct SweepRow {
    double period_ms = 0.0;
    bool stable = true;
    bool task_done = false;
    double recognition_ms = 0.0;        // valid when stable
    double max_force_deviation = 0.0;   // N, valid when stable
    double avg_force_deviation = 0.0;   // N
};

struct SweepReport {
    std::vector<SweepRow> rows;  // ordered by period
};

/// Replay the nominal contact scenario with the admittance model updated
/// at each configured period (PD/DOB stay at 1 ms). Reports the contact
/// recognition time of the frozen policy and the force deviation from the
/// quasi-static reference during the search-phase contact.
SweepReport run_sampling_sweep(const ExperimentConfig& cfg, const Checkpoint& cp);

struct TimingCase {
    double offset_x = -0.003;
    double offset_y = 0.003;
    double tilt = 0.0;  // rad
};

struct TimingRun {
    TaskPhase outcome = TaskPhase::Failed;
    double search_s = 0.0;
    double insertion_s = 0.0;
    double alignment_s = 0.0;
    double total_s = 0.0;
};

struct TimingHistogram {
    std::vector<TimingRun> runs;
    double bin_width = 0.25;

    int success_count() const;
    double mean_total_success() const;
    double mean_search_success() const;
    double mean_insertion_success() const;
    double mean_alignment_success() const;
};

/// n seeded greedy evaluations with micro-perturbed starts.
TimingHistogram run_timing_histogram(const ExperimentConfig& cfg, const Checkpoint& cp,
                                     const TimingCase& c, int n_runs = 100);

struct ActionTraceRow {
    double px = 0.0;
    double py = 0.0;
    int action = -1;
};

/// Per-agent-tick (p_x, p_y, action) table from a recorded step log.
std::vector<ActionTraceRow> export_action_trace(const EpisodeLog& log,
                                                const ControllerParams& params);

// --- CSV emission; every file embeds the config hash and seed. ---
void write_learning_curve(std::ostream& out, const TrainingResult& result,
                          int window, const std::string& config_hash,
                          std::uint64_t seed);
void write_grid_csv(std::ostream& out, const GridResult& grid,
                    const std::string& config_hash, std::uint64_t seed);
void write_sweep_csv(std::ostream& out, const SweepReport& report,
                     const std::string& config_hash, std::uint64_t seed);
void write_timing_csv(std::ostream& out, const TimingHistogram& hist,
                      const std::string& config_hash, std::uint64_t seed);
void write_trace_csv(std::ostream& out, const std::vector<ActionTraceRow>& rows,
                     const std::string& config_hash, std::uint64_t seed);

}  // namespace varstiff
