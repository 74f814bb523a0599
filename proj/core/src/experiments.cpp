#include "varstiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace varstiff {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(tag)));
}

constexpr std::uint64_t kTagEnv = 0x454e56;      // episode setups
constexpr std::uint64_t kTagPolicy = 0x504f4c;   // epsilon draws
constexpr std::uint64_t kTagReplay = 0x524550;   // batch sampling
constexpr std::uint64_t kTagGrid = 0x475249;
constexpr std::uint64_t kTagHist = 0x484953;
constexpr std::uint64_t kTagProbe = 0x505242;

void print_num(std::ostream& out, double v, const char* fmt = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    out << buf;
}

}  // namespace

double TrainingResult::best_moving_success(int window) const {
    if (curve.empty() || window <= 0) return 0.0;
    double best = 0.0;
    int in_window = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        in_window += curve[i].success ? 1 : 0;
        if (i >= static_cast<std::size_t>(window))
            in_window -= curve[i - window].success ? 1 : 0;
        const int n = static_cast<int>(std::min<std::size_t>(i + 1, window));
        if (n == window) best = std::max(best, static_cast<double>(in_window) / n);
    }
    return best;
}

TrainingResult run_training(const ExperimentConfig& cfg) {
    cfg.validate();
    const ActionCatalog catalog = cfg.catalog();

    std::vector<int> layers;
    layers.push_back(8);
    for (int h : cfg.agent.hidden_layers) layers.push_back(h);
    layers.push_back(static_cast<int>(catalog.size()));

    QNetwork net = QNetwork::init(layers, cfg.seed);
    QNetwork target = net;
    ReplayBuffer replay(cfg.agent.replay_capacity);
    ExplorationSchedule schedule{cfg.agent.epsilon0, cfg.agent.beta,
                                 cfg.agent.min_epsilon};

    std::mt19937_64 env_rng = rng_stream(cfg.seed, kTagEnv);
    std::mt19937_64 policy_rng = rng_stream(cfg.seed, kTagPolicy);
    std::mt19937_64 replay_rng = rng_stream(cfg.seed, kTagReplay);
    std::mt19937_64 probe_rng = rng_stream(cfg.seed, kTagProbe);

    TrainingResult result;
    const int ratio = cfg.controller.ticks_per_agent_step();
    long updates = 0;
    QNetwork best_net = net;
    int best_probe = -1;
    SgdMomentum momentum;
    momentum.momentum = cfg.agent.sgd_momentum;

    for (int ep = 0; ep < cfg.training.episodes; ++ep) {
        const EpisodeSetup setup =
            draw_episode_setup(cfg, cfg.training.start_jitter, env_rng);
        Environment env = make_environment(cfg, setup);

        State8 s = env.observe_state();
        while (!env.terminal()) {
            const std::size_t a = select_action(q_forward(net, s), schedule, policy_rng);
            env.hold_stiffness(catalog[a]);
            for (int k = 0; k < ratio && !env.terminal(); ++k) env.step();

            Transition tr;
            tr.s = s;
            tr.a = a;
            tr.s_next = env.observe_state();
            tr.terminal = env.terminal();
            tr.r = tr.terminal ? sparse_reward(env.agent_step(), env.phase(),
                                               env.world().max_agent_steps)
                               : 0.0;
            replay.push(tr);

            if (replay.size() >= static_cast<std::size_t>(cfg.agent.batch_size)) {
                const std::vector<Transition> batch =
                    replay.sample(cfg.agent.batch_size, replay_rng);
                td_update(net, target, batch, cfg.agent.alpha, cfg.agent.gamma,
                          cfg.agent.td_error_clip,
                          momentum.momentum > 0.0 ? &momentum : nullptr);
                if (++updates % cfg.agent.target_copy_interval == 0) target = net;
            }
            s = tr.s_next;
        }

        EpisodeCurvePoint pt;
        pt.episode = ep;
        pt.reward = sparse_reward(env.agent_step(), env.phase(),
                                  env.world().max_agent_steps);
        pt.success = env.phase() == TaskPhase::Done;
        pt.steps = env.agent_step();
        pt.epsilon = schedule.epsilon;
        pt.diverged = env.diverged();
        if (pt.diverged) ++result.diverged_episodes;
        result.curve.push_back(pt);

        schedule.end_episode();

        // Periodic greedy probe; the checkpoint keeps the best snapshot so a
        // late exploration wobble cannot discard a converged policy.
        if (cfg.agent.snapshot_interval > 0 &&
            (ep + 1) % cfg.agent.snapshot_interval == 0) {
            int ok = 0;
            for (int probe = 0; probe < cfg.agent.snapshot_probes; ++probe) {
                const EpisodeSetup setup2 =
                    draw_episode_setup(cfg, cfg.training.start_jitter, probe_rng);
                Environment env2 = make_environment(cfg, setup2);
                const EpisodeLog log =
                    run_episode(env2, catalog, greedy_policy(net), cfg.controller);
                if (log.summary.outcome == TaskPhase::Done) ++ok;
            }
            if (ok >= best_probe) {
                best_probe = ok;
                best_net = net;
            }
        }
    }

    result.checkpoint.net =
        (cfg.agent.snapshot_interval > 0 && best_probe >= 0) ? std::move(best_net)
                                                             : std::move(net);
    result.checkpoint.epsilon = schedule.epsilon;
    result.checkpoint.episode = cfg.training.episodes;
    result.checkpoint.seed = cfg.seed;
    result.checkpoint.catalog_fingerprint = catalog.fingerprint();
    return result;
}

QNetwork network_for(const ExperimentConfig& cfg, const Checkpoint& cp) {
    const std::uint64_t expected = cfg.catalog().fingerprint();
    if (cp.catalog_fingerprint != expected)
        throw CheckpointError("checkpoint was trained on a different catalog");
    return cp.net;
}

EpisodeLog run_eval_episode(const ExperimentConfig& cfg, const QNetwork& net,
                            const EpisodeSetup& setup, bool record_rows) {
    const ActionCatalog catalog = cfg.catalog();
    Environment env = make_environment(cfg, setup);
    RunOptions opts;
    opts.record_rows = record_rows;
    return run_episode(env, catalog, greedy_policy(net), cfg.controller, opts);
}

const GridCell* GridResult::find(double x, double y) const {
    for (const GridCell& c : cells)
        if (c.offset_x == x && c.offset_y == y) return &c;
    return nullptr;
}

GridResult run_success_grid(const ExperimentConfig& cfg, const Checkpoint& cp,
                            const std::vector<double>& offsets_x,
                            const std::vector<double>& offsets_y,
                            int episodes_per_cell) {
    const QNetwork net = network_for(cfg, cp);
    const ActionCatalog catalog = cfg.catalog();

    GridResult grid;
    std::size_t cell_index = 0;
    for (double ox : offsets_x) {
        for (double oy : offsets_y) {
            GridCell cell;
            cell.offset_x = ox;
            cell.offset_y = oy;
            std::mt19937_64 rng =
                rng_stream(cfg.seed, splitmix64(kTagGrid + cell_index));
            for (int e = 0; e < episodes_per_cell; ++e) {
                const EpisodeSetup setup = draw_episode_setup(
                    cfg, ox, oy, cfg.evaluation.start_jitter, rng);
                Environment env = make_environment(cfg, setup);
                const EpisodeLog log =
                    run_episode(env, catalog, greedy_policy(net), cfg.controller);
                ++cell.episodes;
                if (log.summary.outcome == TaskPhase::Done) ++cell.successes;
            }
            grid.cells.push_back(cell);
            ++cell_index;
        }
    }
    return grid;
}

SweepReport run_sampling_sweep(const ExperimentConfig& cfg, const Checkpoint& cp) {
    const QNetwork net = network_for(cfg, cp);
    const ActionCatalog catalog = cfg.catalog();
    const PegHoleWorld& world = cfg.active_world();

    SweepReport report;
    for (double period_ms : cfg.evaluation.sweep_periods_ms) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.controller.admittance_period = period_ms * 1e-3;
        run_cfg.controller.validate();

        // Deterministic nominal scenario: no jitter, exact preset offsets.
        std::mt19937_64 null_rng(0);
        const EpisodeSetup setup = draw_episode_setup(run_cfg, 0.0, null_rng);
        Environment env = make_environment(run_cfg, setup);

        SweepRow row;
        row.period_ms = period_ms;

        const int ratio = run_cfg.controller.ticks_per_agent_step();
        double first_wrench_t = -1.0;
        double recognized_t = -1.0;
        double max_dev = 0.0, sum_dev = 0.0;
        long dev_samples = 0;

        while (!env.terminal()) {
            const State8 s = env.observe_state();
            const std::size_t a = argmax_action(q_forward(net, s));
            env.hold_stiffness(catalog[a]);

            if (first_wrench_t >= 0.0 && recognized_t < 0.0) {
                const std::size_t ideal =
                    ideal_action_index(world, env.tool_pose(), env.phase(),
                                       cfg.is_gear());
                if (a == ideal) recognized_t = env.time();
            }

            for (int k = 0; k < ratio && !env.terminal(); ++k) {
                const StepOutcome out = env.step();
                const double fnorm = std::sqrt(out.wrench[0] * out.wrench[0] +
                                               out.wrench[1] * out.wrench[1] +
                                               out.wrench[2] * out.wrench[2]);
                if (first_wrench_t < 0.0 && fnorm > 1e-6) first_wrench_t = env.time();

                // Force deviation from the quasi-static equilibrium of the
                // current stiffness against the contact spring, while the
                // trajectory presses during the search phase.
                const double press =
                    world.surface_height -
                    plan_trajectory(setup.start_pose, world.descend_speed, env.time())[2];
                if (out.phase == TaskPhase::Search && press > 0.0) {
                    Vec6 ez;
                    ez[2] = 1.0;
                    const double czz = solve(catalog[a].at(env.time()), ez)[2];
                    const double f_eq = world.contact_stiffness * press /
                                        (1.0 + world.contact_stiffness * czz);
                    const double dev = std::abs(out.wrench[2] - f_eq);
                    max_dev = std::max(max_dev, dev);
                    sum_dev += dev;
                    ++dev_samples;
                }
            }
        }

        row.stable = !(env.diverged() || env.fail_reason() == FailReason::ForceLimit);
        row.task_done = env.phase() == TaskPhase::Done;
        if (row.stable) {
            row.recognition_ms = (recognized_t >= 0.0 && first_wrench_t >= 0.0)
                                     ? (recognized_t - first_wrench_t) * 1e3
                                     : std::numeric_limits<double>::quiet_NaN();
            row.max_force_deviation = max_dev;
            row.avg_force_deviation = dev_samples ? sum_dev / dev_samples : 0.0;
        } else {
            row.recognition_ms = std::numeric_limits<double>::quiet_NaN();
            row.max_force_deviation = std::numeric_limits<double>::quiet_NaN();
            row.avg_force_deviation = std::numeric_limits<double>::quiet_NaN();
        }
        report.rows.push_back(row);
    }
    return report;
}

int TimingHistogram::success_count() const {
    int n = 0;
    for (const TimingRun& r : runs)
        if (r.outcome == TaskPhase::Done) ++n;
    return n;
}

namespace {

double mean_over_success(const std::vector<TimingRun>& runs,
                         double TimingRun::*field) {
    double sum = 0.0;
    int n = 0;
    for (const TimingRun& r : runs)
        if (r.outcome == TaskPhase::Done) {
            sum += r.*field;
            ++n;
        }
    return n ? sum / n : 0.0;
}

}  // namespace

double TimingHistogram::mean_total_success() const {
    return mean_over_success(runs, &TimingRun::total_s);
}
double TimingHistogram::mean_search_success() const {
    return mean_over_success(runs, &TimingRun::search_s);
}
double TimingHistogram::mean_insertion_success() const {
    return mean_over_success(runs, &TimingRun::insertion_s);
}
double TimingHistogram::mean_alignment_success() const {
    return mean_over_success(runs, &TimingRun::alignment_s);
}

TimingHistogram run_timing_histogram(const ExperimentConfig& cfg, const Checkpoint& cp,
                                     const TimingCase& c, int n_runs) {
    const QNetwork net = network_for(cfg, cp);
    const ActionCatalog catalog = cfg.catalog();

    ExperimentConfig run_cfg = cfg;
    if (run_cfg.is_gear())
        run_cfg.gear.base.initial_tilt = c.tilt;
    else
        run_cfg.world.initial_tilt = c.tilt;

    TimingHistogram hist;
    hist.bin_width = cfg.evaluation.histogram_bin;
    for (int i = 0; i < n_runs; ++i) {
        std::mt19937_64 rng = rng_stream(cfg.seed, splitmix64(kTagHist + i));
        const EpisodeSetup setup = draw_episode_setup(
            run_cfg, c.offset_x, c.offset_y, cfg.evaluation.start_jitter, rng);
        Environment env = make_environment(run_cfg, setup);
        const EpisodeLog log =
            run_episode(env, catalog, greedy_policy(net), run_cfg.controller);

        TimingRun run;
        run.outcome = log.summary.outcome;
        run.search_s = log.summary.search_time();
        run.insertion_s = log.summary.insertion_time();
        run.alignment_s = log.summary.alignment_time();
        run.total_s = log.summary.total_time();
        hist.runs.push_back(run);
    }
    return hist;
}

std::vector<ActionTraceRow> export_action_trace(const EpisodeLog& log,
                                                const ControllerParams& params) {
    std::vector<ActionTraceRow> rows;
    const int ratio = params.ticks_per_agent_step();
    for (std::size_t i = 0; i < log.rows.size(); i += ratio) {
        ActionTraceRow r;
        r.px = log.rows[i].pose[0];
        r.py = log.rows[i].pose[1];
        r.action = log.rows[i].action;
        rows.push_back(r);
    }
    return rows;
}

void write_learning_curve(std::ostream& out, const TrainingResult& result,
                          int window, const std::string& config_hash,
                          std::uint64_t seed) {
    out << "# varstiff learning curve, config_hash=" << config_hash
        << ", seed=" << seed << "\n";
    out << "episode,reward,success,steps,epsilon,diverged,moving_avg_reward,"
           "band_lo,band_hi,moving_success_rate\n";
    const auto& curve = result.curve;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const std::size_t lo = (i + 1 >= static_cast<std::size_t>(window))
                                   ? i + 1 - window
                                   : 0;
        const std::size_t n = i - lo + 1;
        double mean = 0.0, success = 0.0;
        for (std::size_t j = lo; j <= i; ++j) {
            mean += curve[j].reward;
            success += curve[j].success ? 1.0 : 0.0;
        }
        mean /= n;
        success /= n;
        double var = 0.0;
        for (std::size_t j = lo; j <= i; ++j)
            var += (curve[j].reward - mean) * (curve[j].reward - mean);
        const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        // 90% confidence band of the window mean.
        const double half = 1.645 * sd / std::sqrt(static_cast<double>(n));

        out << curve[i].episode << ',';
        print_num(out, curve[i].reward);
        out << ',' << (curve[i].success ? 1 : 0) << ',' << curve[i].steps << ',';
        print_num(out, curve[i].epsilon);
        out << ',' << (curve[i].diverged ? 1 : 0) << ',';
        print_num(out, mean);
        out << ',';
        print_num(out, mean - half);
        out << ',';
        print_num(out, mean + half);
        out << ',';
        print_num(out, success);
        out << "\n";
    }
}

void write_grid_csv(std::ostream& out, const GridResult& grid,
                    const std::string& config_hash, std::uint64_t seed) {
    out << "# varstiff success grid, config_hash=" << config_hash
        << ", seed=" << seed << "\n";
    out << "offset_x,offset_y,episodes,successes,success_rate\n";
    for (const GridCell& c : grid.cells) {
        print_num(out, c.offset_x);
        out << ',';
        print_num(out, c.offset_y);
        out << ',' << c.episodes << ',' << c.successes << ',';
        print_num(out, c.rate());
        out << "\n";
    }
}

void write_sweep_csv(std::ostream& out, const SweepReport& report,
                     const std::string& config_hash, std::uint64_t seed) {
    out << "# varstiff sampling sweep, config_hash=" << config_hash
        << ", seed=" << seed << "\n";
    out << "period_ms,stable,task_done,recognition_ms,max_force_deviation_n,"
           "avg_force_deviation_n\n";
    for (const SweepRow& r : report.rows) {
        print_num(out, r.period_ms);
        out << ',' << (r.stable ? 1 : 0) << ',' << (r.task_done ? 1 : 0) << ',';
        if (!r.stable || std::isnan(r.recognition_ms)) {
            out << "N/A,N/A,N/A\n";
            continue;
        }
        print_num(out, r.recognition_ms);
        out << ',';
        print_num(out, r.max_force_deviation);
        out << ',';
        print_num(out, r.avg_force_deviation);
        out << "\n";
    }
}

void write_timing_csv(std::ostream& out, const TimingHistogram& hist,
                      const std::string& config_hash, std::uint64_t seed) {
    out << "# varstiff timing histogram, config_hash=" << config_hash
        << ", seed=" << seed << "\n";
    out << "run,outcome,search_s,insertion_s,alignment_s,total_s\n";
    for (std::size_t i = 0; i < hist.runs.size(); ++i) {
        const TimingRun& r = hist.runs[i];
        out << i << ',' << to_string(r.outcome) << ',';
        print_num(out, r.search_s, "%.6f");
        out << ',';
        print_num(out, r.insertion_s, "%.6f");
        out << ',';
        print_num(out, r.alignment_s, "%.6f");
        out << ',';
        print_num(out, r.total_s, "%.6f");
        out << "\n";
    }

    // Histogram of total time over successes.
    double max_t = 0.0;
    for (const TimingRun& r : hist.runs)
        if (r.outcome == TaskPhase::Done) max_t = std::max(max_t, r.total_s);
    const int bins = hist.bin_width > 0
                         ? static_cast<int>(std::floor(max_t / hist.bin_width)) + 1
                         : 1;
    out << "# bins: bin_lo_s,bin_hi_s,count\n";
    for (int b = 0; b < bins; ++b) {
        const double lo = b * hist.bin_width;
        const double hi = lo + hist.bin_width;
        int count = 0;
        for (const TimingRun& r : hist.runs)
            if (r.outcome == TaskPhase::Done && r.total_s >= lo && r.total_s < hi)
                ++count;
        out << "# ";
        print_num(out, lo, "%.6f");
        out << ',';
        print_num(out, hi, "%.6f");
        out << ',' << count << "\n";
    }
    out << "# successes=" << hist.success_count() << "/" << hist.runs.size()
        << " mean_search_s=";
    print_num(out, hist.mean_search_success(), "%.6f");
    out << " mean_insertion_s=";
    print_num(out, hist.mean_insertion_success(), "%.6f");
    out << " mean_alignment_s=";
    print_num(out, hist.mean_alignment_success(), "%.6f");
    out << " mean_total_s=";
    print_num(out, hist.mean_total_success(), "%.6f");
    out << "\n";
}

void write_trace_csv(std::ostream& out, const std::vector<ActionTraceRow>& rows,
                     const std::string& config_hash, std::uint64_t seed) {
    out << "# varstiff action trace, config_hash=" << config_hash
        << ", seed=" << seed << "\n";
    out << "px,py,action\n";
    for (const ActionTraceRow& r : rows) {
        print_num(out, r.px);
        out << ',';
        print_num(out, r.py);
        out << ',' << r.action << "\n";
    }
}

}  // namespace varstiff
