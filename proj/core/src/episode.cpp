#include "varstiff/episode.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace varstiff {

Policy greedy_policy(const QNetwork& net) {
    return [&net](const State8& s) { return argmax_action(q_forward(net, s)); };
}

Policy eps_greedy_policy(const QNetwork& net, const ExplorationSchedule& schedule,
                         std::mt19937_64& rng) {
    return [&net, &schedule, &rng](const State8& s) {
        return select_action(q_forward(net, s), schedule, rng);
    };
}

EpisodeSetup draw_episode_setup(const ExperimentConfig& cfg, double true_offset_x,
                                double true_offset_y, double start_jitter,
                                std::mt19937_64& rng, double bias_jitter) {
    const PegHoleWorld& w = cfg.active_world();
    std::uniform_real_distribution<double> jit(-start_jitter, start_jitter);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);

    EpisodeSetup s;
    const double tx = w.hole_center[0] + true_offset_x + jit(rng);
    const double ty = w.hole_center[1] + true_offset_y + jit(rng);
    s.start_pose = Pose6{{tx, ty, w.surface_height + w.initial_height, 0, 0, 0}};
    // The commanded start is the nominal offset regardless of the true one;
    // the difference rides along in every position observation.
    s.observation_bias = {w.hole_center[0] + w.initial_offset[0] - tx,
                          w.hole_center[1] + w.initial_offset[1] - ty};
    if (bias_jitter > 0.0) {
        std::uniform_real_distribution<double> bj(-bias_jitter, bias_jitter);
        s.observation_bias[0] += bj(rng);
        s.observation_bias[1] += bj(rng);
    }
    if (w.initial_tilt != 0.0) {
        const double phi = angle(rng);
        s.start_pose[3] = w.initial_tilt * std::cos(phi);
        s.start_pose[4] = w.initial_tilt * std::sin(phi);
    }
    if (cfg.is_gear()) {
        std::uniform_real_distribution<double> phase(-0.5 * cfg.gear.tooth_pitch(),
                                                     0.5 * cfg.gear.tooth_pitch());
        s.tooth_phase = phase(rng);
    }
    return s;
}

EpisodeSetup draw_episode_setup(const ExperimentConfig& cfg, double start_jitter,
                                std::mt19937_64& rng) {
    const PegHoleWorld& w = cfg.active_world();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < cfg.training.quadrant_fraction) {
        // Anywhere between the hole and the nominal corner, edges included.
        const double margin = 3e-4;
        std::uniform_real_distribution<double> ux(
            std::min(w.initial_offset[0], 0.0) - margin, margin / 2);
        std::uniform_real_distribution<double> uy(
            -margin / 2, std::max(w.initial_offset[1], 0.0) + margin);
        const double ox = ux(rng);
        const double oy = uy(rng);
        return draw_episode_setup(cfg, ox, oy, start_jitter, rng,
                                  cfg.training.bias_jitter);
    }
    return draw_episode_setup(cfg, w.initial_offset[0], w.initial_offset[1],
                              start_jitter, rng, cfg.training.bias_jitter);
}

Environment make_environment(const ExperimentConfig& cfg, const EpisodeSetup& setup) {
    if (cfg.is_gear()) return Environment(cfg.gear, cfg.controller, setup);
    return Environment(cfg.world, cfg.controller, setup);
}

EpisodeLog run_episode(Environment& env, const ActionCatalog& catalog,
                       const Policy& policy, const ControllerParams& params,
                       const RunOptions& options) {
    EpisodeLog log;
    log.summary.control_period = params.control_period;
    const int ratio = params.ticks_per_agent_step();

    int decision = 0;
    while (!env.terminal()) {
        const State8 s = env.observe_state();
        const std::size_t a = policy(s);
        env.hold_stiffness(catalog[a]);
        if (options.on_decision) options.on_decision(decision, s, a);

        for (int k = 0; k < ratio && !env.terminal(); ++k) {
            const TaskPhase before = env.phase();
            const long tick_before = env.inner_tick();
            const StepOutcome out = env.step();
            if (env.inner_tick() == tick_before) break;  // aborted before moving

            switch (before) {
                case TaskPhase::Search: ++log.summary.search_ticks; break;
                case TaskPhase::Insertion: ++log.summary.insertion_ticks; break;
                case TaskPhase::TeethAlignment: ++log.summary.alignment_ticks; break;
                default: break;
            }
            if (options.record_rows) {
                StepRow row;
                row.t = env.time();
                row.pose = env.tool_pose();
                row.wrench = out.wrench;
                row.action = static_cast<int>(a);
                row.phase = out.phase;
                log.rows.push_back(row);
            }
        }
        ++decision;
    }

    log.summary.outcome = env.phase();
    log.summary.diverged = env.diverged();
    log.summary.agent_steps = env.agent_step();
    log.summary.inner_ticks = env.inner_tick();
    log.summary.reward =
        sparse_reward(env.agent_step(), env.phase(), env.world().max_agent_steps);
    if (options.record_rows && !log.rows.empty())
        log.rows.back().reward = log.summary.reward;
    return log;
}

namespace {

TaskPhase phase_from_string(const std::string& s) {
    if (s == "search") return TaskPhase::Search;
    if (s == "insertion") return TaskPhase::Insertion;
    if (s == "teeth_alignment") return TaskPhase::TeethAlignment;
    if (s == "done") return TaskPhase::Done;
    if (s == "failed") return TaskPhase::Failed;
    throw std::runtime_error("unknown phase in step log: " + s);
}

}  // namespace

void write_step_log(std::ostream& out, const EpisodeLog& log,
                    const std::string& config_hash, std::uint64_t seed) {
    out << "# varstiff step log, config_hash=" << config_hash << ", seed=" << seed
        << "\n";
    out << "t_s,px,py,pz,rx,ry,rz,fx,fy,fz,tx,ty,tz,action,phase\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        out << buf;
    };
    for (const StepRow& r : log.rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.t);
        out << buf;
        for (int i = 0; i < 6; ++i) {
            out << ',';
            num(r.pose[i]);
        }
        for (int i = 0; i < 6; ++i) {
            out << ',';
            num(r.wrench[i]);
        }
        out << ',' << r.action << ',' << to_string(r.phase) << "\n";
    }
    const EpisodeSummary& s = log.summary;
    out << "# summary outcome=" << to_string(s.outcome)
        << " agent_steps=" << s.agent_steps << " inner_ticks=" << s.inner_ticks
        << " search_ticks=" << s.search_ticks
        << " insertion_ticks=" << s.insertion_ticks
        << " alignment_ticks=" << s.alignment_ticks;
    std::snprintf(buf, sizeof(buf), " reward=%.10g", s.reward);
    out << buf << "\n";
}

EpisodeLog read_step_log(std::istream& in) {
    EpisodeLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# summary", 0) == 0) {
                std::istringstream ss(line.substr(9));
                std::string tok;
                while (ss >> tok) {
                    const auto eq = tok.find('=');
                    if (eq == std::string::npos) continue;
                    const std::string key = tok.substr(0, eq);
                    const std::string val = tok.substr(eq + 1);
                    if (key == "outcome") log.summary.outcome = phase_from_string(val);
                    else if (key == "agent_steps") log.summary.agent_steps = std::stoi(val);
                    else if (key == "inner_ticks") log.summary.inner_ticks = std::stol(val);
                    else if (key == "search_ticks") log.summary.search_ticks = std::stol(val);
                    else if (key == "insertion_ticks") log.summary.insertion_ticks = std::stol(val);
                    else if (key == "alignment_ticks") log.summary.alignment_ticks = std::stol(val);
                    else if (key == "reward") log.summary.reward = std::stod(val);
                }
            }
            continue;
        }
        if (line.rfind("t_s,", 0) == 0) continue;

        StepRow row;
        std::istringstream ss(line);
        std::string cell;
        auto next = [&]() {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("short row in step log");
            return cell;
        };
        row.t = std::stod(next());
        for (int i = 0; i < 6; ++i) row.pose[i] = std::stod(next());
        for (int i = 0; i < 6; ++i) row.wrench[i] = std::stod(next());
        row.action = std::stoi(next());
        row.phase = phase_from_string(next());
        log.rows.push_back(row);
    }
    return log;
}

}  // namespace varstiff
