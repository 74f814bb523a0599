#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "varstiff/simenv.hpp"
#include "varstiff/stiffness.hpp"

namespace varstiff {

/// Thrown on malformed checkpoint files or catalog fingerprint mismatch.
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using State8 = std::array<double, 8>;

/// Small fully connected net: 8 inputs, rectifier hidden layers, one linear
/// output per catalog action.
struct QNetwork {
    std::vector<int> layer_sizes;               // e.g. {8, 64, 64, M}
    std::vector<std::vector<double>> weights;   // layer l: [out x in], row major
    std::vector<std::vector<double>> biases;    // layer l: [out]

    /// Seeded uniform init scaled by fan-in, biases zero.
    static QNetwork init(std::vector<int> sizes, std::uint64_t seed);

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;

    bool finite() const;
};

/// Deterministic forward pass; one Q-value per action.
std::vector<double> q_forward(const QNetwork& net, const State8& s);

struct Transition {
    State8 s{};
    std::size_t a = 0;
    double r = 0.0;
    State8 s_next{};
    bool terminal = false;
};

/// Seeded uniform ring buffer.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(const Transition& t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }

    /// Uniform sample with replacement. Throws std::logic_error when empty.
    std::vector<Transition> sample(std::size_t n, std::mt19937_64& rng) const;

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

/// epsilon-greedy schedule with geometric per-episode decay.
struct ExplorationSchedule {
    double epsilon = 1.0;
    double decay_ratio = 0.99;  // beta
    double min_epsilon = 0.0;

    void end_episode() { epsilon = std::max(min_epsilon, epsilon * decay_ratio); }
};

/// With probability 1-epsilon the argmax (ties to the lowest index),
/// otherwise a uniform random index. Always consumes one uniform draw
/// for the branch plus one more when exploring.
std::size_t select_action(std::span<const double> q_values,
                          const ExplorationSchedule& schedule,
                          std::mt19937_64& rng);

/// Greedy argmax with the same tie rule.
std::size_t argmax_action(std::span<const double> q_values);

/// Sparse terminal reward: 1 - t/K on Done, -1 on Failed, else 0.
double sparse_reward(int step, TaskPhase outcome, int max_steps = 500);

/// Discounted sum of future rewards.
double cumulative_return(std::span<const double> rewards, double gamma);

struct TdStats {
    double mean_abs_error = 0.0;
};

/// Velocity state for momentum SGD; sized lazily on first use.
struct SgdMomentum {
    double momentum = 0.0;
    std::vector<std::vector<double>> vel_w;
    std::vector<std::vector<double>> vel_b;
};

/// One SGD step on the TD error averaged over the batch; only the taken
/// action's output contributes per transition. Terminal transitions
/// bootstrap nothing. `target_net` supplies max_a' Q(s',a').
/// `error_clip` > 0 clamps each TD error before the step (training-loop
/// stabilizer; 0 keeps the plain update).
TdStats td_update(QNetwork& net, const QNetwork& target_net,
                  std::span<const Transition> batch, double alpha, double gamma,
                  double error_clip = 0.0, SgdMomentum* momentum = nullptr);

/// Single-network form: the net is its own bootstrap target.
TdStats td_update(QNetwork& net, std::span<const Transition> batch, double alpha,
                  double gamma);

/// One agent period: select an action for the state and hand back the
/// catalog matrix the inner loop holds until the next tick.
std::pair<std::size_t, const StiffnessMatrix*> agent_tick(
    const QNetwork& net, const ExplorationSchedule& schedule, const State8& s,
    std::mt19937_64& rng, const ActionCatalog& catalog);

/// Versioned checkpoint: layer sizes, parameters as 64-bit reals, the
/// catalog fingerprint guarding action-index compatibility, schedule and
/// bookkeeping.
struct Checkpoint {
    QNetwork net;
    double epsilon = 1.0;
    int episode = 0;
    std::uint64_t seed = 0;
    std::uint64_t catalog_fingerprint = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);

/// Loads and verifies the catalog fingerprint when expected_fingerprint
/// is nonzero. Throws CheckpointError on mismatch or malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::uint64_t expected_fingerprint = 0);

}  // namespace varstiff
