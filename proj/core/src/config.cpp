#include "varstiff/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace varstiff {

namespace {

using nlohmann::json;

Vec6 vec6_from(const json& j, const std::string& key) {
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 6)
        throw ConfigError(key + " must be an array of 6 numbers");
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = arr[i].get<double>();
    return v;
}

json diag_to_json(const Mat6& m) {
    json a = json::array();
    for (int i = 0; i < 6; ++i) a.push_back(m(i, i));
    return a;
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

void parse_controller(const json& j, ControllerParams& p) {
    check_keys(j,
               {"kp", "kd", "inertia", "admittance_damping",
                "derivative_filter_cutoff_hz", "control_period", "agent_period",
                "admittance_period", "dob_cutoff_hz", "max_deviation_translation",
                "max_deviation_rotation", "torque_limit"},
               "controller");
    if (j.contains("kp")) p.kp = Mat6::diagonal(vec6_from(j, "kp"));
    if (j.contains("kd")) p.kd = Mat6::diagonal(vec6_from(j, "kd"));
    if (j.contains("inertia")) {
        p.inertia = Mat6::diagonal(vec6_from(j, "inertia"));
        // keep the default damping consistent with a changed inertia
        p.admittance_damping = critical_damping(p.inertia, {800, 800, 800, 50, 50, 50});
    }
    if (j.contains("admittance_damping"))
        p.admittance_damping = Mat6::diagonal(vec6_from(j, "admittance_damping"));
    if (j.contains("derivative_filter_cutoff_hz"))
        p.derivative_filter_cutoff_hz = j.at("derivative_filter_cutoff_hz");
    if (j.contains("control_period")) p.control_period = j.at("control_period");
    if (j.contains("agent_period")) p.agent_period = j.at("agent_period");
    if (j.contains("admittance_period")) p.admittance_period = j.at("admittance_period");
    if (j.contains("dob_cutoff_hz")) p.dob_cutoff_hz = j.at("dob_cutoff_hz");
    if (j.contains("max_deviation_translation"))
        p.max_deviation_translation = j.at("max_deviation_translation");
    if (j.contains("max_deviation_rotation"))
        p.max_deviation_rotation = j.at("max_deviation_rotation");
    if (j.contains("torque_limit")) p.torque_limit = j.at("torque_limit");
}

void parse_world(const json& j, PegHoleWorld& w) {
    check_keys(j,
               {"peg_diameter", "hole_diameter", "hole_center", "surface_height",
                "insertion_depth_goal", "contact_stiffness", "contact_damping",
                "friction_coefficient", "wall_stiffness", "rim_guidance",
                "entry_capture", "entry_threshold", "wall_align_stiffness",
                "grip_length", "initial_offset", "initial_height", "initial_tilt",
                "descend_speed", "force_limit", "max_agent_steps",
                "wrench_noise_std"},
               "world");
    auto get = [&](const char* k, double& v) {
        if (j.contains(k)) v = j.at(k);
    };
    get("peg_diameter", w.peg_diameter);
    get("hole_diameter", w.hole_diameter);
    if (j.contains("hole_center")) {
        const auto& a = j.at("hole_center");
        if (!a.is_array() || a.size() != 2)
            throw ConfigError("hole_center must be [x, y]");
        w.hole_center = {a[0].get<double>(), a[1].get<double>()};
    }
    get("surface_height", w.surface_height);
    get("insertion_depth_goal", w.insertion_depth_goal);
    get("contact_stiffness", w.contact_stiffness);
    get("contact_damping", w.contact_damping);
    get("friction_coefficient", w.friction_coefficient);
    get("wall_stiffness", w.wall_stiffness);
    get("rim_guidance", w.rim_guidance);
    get("entry_capture", w.entry_capture);
    get("entry_threshold", w.entry_threshold);
    get("wall_align_stiffness", w.wall_align_stiffness);
    get("grip_length", w.grip_length);
    if (j.contains("initial_offset")) {
        const auto& a = j.at("initial_offset");
        if (!a.is_array() || a.size() != 2)
            throw ConfigError("initial_offset must be [x, y]");
        w.initial_offset = {a[0].get<double>(), a[1].get<double>()};
    }
    get("initial_height", w.initial_height);
    get("initial_tilt", w.initial_tilt);
    get("descend_speed", w.descend_speed);
    get("force_limit", w.force_limit);
    if (j.contains("max_agent_steps")) w.max_agent_steps = j.at("max_agent_steps");
    get("wrench_noise_std", w.wrench_noise_std);
}

void parse_gear(const json& j, GearWorld& g) {
    check_keys(j,
               {"base", "tooth_count", "mesh_tolerance", "seat_depth",
                "tooth_radius", "mesh_lock_stiffness"},
               "gear");
    if (j.contains("base")) parse_world(j.at("base"), g.base);
    if (j.contains("tooth_count")) g.tooth_count = j.at("tooth_count");
    if (j.contains("mesh_tolerance")) g.mesh_tolerance = j.at("mesh_tolerance");
    if (j.contains("seat_depth")) g.seat_depth = j.at("seat_depth");
    if (j.contains("tooth_radius")) g.tooth_radius = j.at("tooth_radius");
    if (j.contains("mesh_lock_stiffness")) g.mesh_lock_stiffness = j.at("mesh_lock_stiffness");
}

void parse_agent(const json& j, AgentConfig& a) {
    check_keys(j,
               {"hidden_layers", "gamma", "alpha", "epsilon0", "beta",
                "min_epsilon", "batch_size", "replay_capacity",
                "target_copy_interval", "td_error_clip", "sgd_momentum",
                "snapshot_interval", "snapshot_probes"},
               "agent");
    if (j.contains("hidden_layers"))
        a.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();
    if (j.contains("gamma")) a.gamma = j.at("gamma");
    if (j.contains("alpha")) a.alpha = j.at("alpha");
    if (j.contains("epsilon0")) a.epsilon0 = j.at("epsilon0");
    if (j.contains("beta")) a.beta = j.at("beta");
    if (j.contains("min_epsilon")) a.min_epsilon = j.at("min_epsilon");
    if (j.contains("batch_size")) a.batch_size = j.at("batch_size");
    if (j.contains("replay_capacity"))
        a.replay_capacity = j.at("replay_capacity").get<std::size_t>();
    if (j.contains("target_copy_interval"))
        a.target_copy_interval = j.at("target_copy_interval");
    if (j.contains("td_error_clip")) a.td_error_clip = j.at("td_error_clip");
    if (j.contains("sgd_momentum")) a.sgd_momentum = j.at("sgd_momentum");
    if (j.contains("snapshot_interval")) a.snapshot_interval = j.at("snapshot_interval");
    if (j.contains("snapshot_probes")) a.snapshot_probes = j.at("snapshot_probes");
}

void parse_training(const json& j, TrainingConfig& t) {
    check_keys(j,
               {"episodes", "start_jitter", "bias_jitter", "quadrant_fraction",
                "moving_window"},
               "training");
    if (j.contains("episodes")) t.episodes = j.at("episodes");
    if (j.contains("start_jitter")) t.start_jitter = j.at("start_jitter");
    if (j.contains("bias_jitter")) t.bias_jitter = j.at("bias_jitter");
    if (j.contains("quadrant_fraction")) t.quadrant_fraction = j.at("quadrant_fraction");
    if (j.contains("moving_window")) t.moving_window = j.at("moving_window");
}

void parse_evaluation(const json& j, EvaluationConfig& e) {
    check_keys(j, {"start_jitter", "histogram_bin", "sweep_periods_ms"}, "evaluation");
    if (j.contains("start_jitter")) e.start_jitter = j.at("start_jitter");
    if (j.contains("histogram_bin")) e.histogram_bin = j.at("histogram_bin");
    if (j.contains("sweep_periods_ms"))
        e.sweep_periods_ms = j.at("sweep_periods_ms").get<std::vector<double>>();
}

json world_to_json(const PegHoleWorld& w) {
    return json{{"peg_diameter", w.peg_diameter},
                {"hole_diameter", w.hole_diameter},
                {"hole_center", {w.hole_center[0], w.hole_center[1]}},
                {"surface_height", w.surface_height},
                {"insertion_depth_goal", w.insertion_depth_goal},
                {"contact_stiffness", w.contact_stiffness},
                {"contact_damping", w.contact_damping},
                {"friction_coefficient", w.friction_coefficient},
                {"wall_stiffness", w.wall_stiffness},
                {"rim_guidance", w.rim_guidance},
                {"entry_capture", w.entry_capture},
                {"entry_threshold", w.entry_threshold},
                {"wall_align_stiffness", w.wall_align_stiffness},
                {"grip_length", w.grip_length},
                {"initial_offset", {w.initial_offset[0], w.initial_offset[1]}},
                {"initial_height", w.initial_height},
                {"initial_tilt", w.initial_tilt},
                {"descend_speed", w.descend_speed},
                {"force_limit", w.force_limit},
                {"max_agent_steps", w.max_agent_steps},
                {"wrench_noise_std", w.wrench_noise_std}};
}

}  // namespace

ActionCatalog ExperimentConfig::catalog() const {
    return is_gear() ? gear_catalog(dither_omega) : peg_in_hole_catalog();
}

void ExperimentConfig::validate() const {
    if (scenario != "pegin-20um" && scenario != "pegin-20um-tilt2" &&
        scenario != "gear-module2")
        throw ConfigError("unknown scenario '" + scenario + "'");
    try {
        controller.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("controller: ") + e.what());
    }
    const PegHoleWorld& w = active_world();
    if (w.hole_diameter <= w.peg_diameter)
        throw ConfigError("hole_diameter must exceed peg_diameter");
    if (w.descend_speed <= 0.0) throw ConfigError("descend_speed must be positive");
    if (w.max_agent_steps < 1) throw ConfigError("max_agent_steps must be >= 1");
    if (agent.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (agent.replay_capacity < static_cast<std::size_t>(agent.batch_size))
        throw ConfigError("replay_capacity must hold at least one batch");
    if (agent.gamma < 0.0 || agent.gamma > 1.0)
        throw ConfigError("gamma must be in [0,1]");
    if (agent.epsilon0 < 0.0 || agent.epsilon0 > 1.0)
        throw ConfigError("epsilon0 must be in [0,1]");
    if (agent.beta <= 0.0 || agent.beta >= 1.0)
        throw ConfigError("beta must be in (0,1)");
    if (training.episodes < 0) throw ConfigError("episodes must be >= 0");
    if (is_gear() && gear.tooth_count < 2)
        throw ConfigError("tooth_count must be >= 2");
    if (is_gear() && gear.mesh_tolerance >= gear.tooth_pitch())
        throw ConfigError("mesh_tolerance must be below the tooth pitch");
}

void apply_scenario(ExperimentConfig& cfg, const std::string& scenario) {
    cfg.scenario = scenario;
    if (scenario == "pegin-20um") {
        cfg.world = pegin_20um_preset();
    } else if (scenario == "pegin-20um-tilt2") {
        cfg.world = pegin_20um_tilt2_preset();
    } else if (scenario == "gear-module2") {
        cfg.gear = gear_module2_preset();
    } else {
        throw ConfigError("unknown scenario '" + scenario + "'");
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        check_keys(j,
                   {"scenario", "seed", "output_dir", "controller", "world", "gear",
                    "dither_omega", "agent", "training", "evaluation"},
                   "config");
        if (j.contains("scenario")) apply_scenario(cfg, j.at("scenario"));
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir");
        if (j.contains("controller")) parse_controller(j.at("controller"), cfg.controller);
        if (j.contains("world")) parse_world(j.at("world"), cfg.world);
        if (j.contains("gear")) parse_gear(j.at("gear"), cfg.gear);
        if (j.contains("dither_omega")) cfg.dither_omega = j.at("dither_omega");
        if (j.contains("agent")) parse_agent(j.at("agent"), cfg.agent);
        if (j.contains("training")) parse_training(j.at("training"), cfg.training);
        if (j.contains("evaluation")) parse_evaluation(j.at("evaluation"), cfg.evaluation);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j{{"scenario", cfg.scenario},
           {"seed", cfg.seed},
           {"output_dir", cfg.output_dir},
           {"controller",
            {{"kp", diag_to_json(cfg.controller.kp)},
             {"kd", diag_to_json(cfg.controller.kd)},
             {"inertia", diag_to_json(cfg.controller.inertia)},
             {"admittance_damping", diag_to_json(cfg.controller.admittance_damping)},
             {"derivative_filter_cutoff_hz", cfg.controller.derivative_filter_cutoff_hz},
             {"control_period", cfg.controller.control_period},
             {"agent_period", cfg.controller.agent_period},
             {"admittance_period", cfg.controller.admittance_period},
             {"dob_cutoff_hz", cfg.controller.dob_cutoff_hz},
             {"max_deviation_translation", cfg.controller.max_deviation_translation},
             {"max_deviation_rotation", cfg.controller.max_deviation_rotation},
             {"torque_limit", cfg.controller.torque_limit}}},
           {"world", world_to_json(cfg.world)},
           {"gear",
            {{"base", world_to_json(cfg.gear.base)},
             {"tooth_count", cfg.gear.tooth_count},
             {"mesh_tolerance", cfg.gear.mesh_tolerance},
             {"seat_depth", cfg.gear.seat_depth},
             {"tooth_radius", cfg.gear.tooth_radius},
             {"mesh_lock_stiffness", cfg.gear.mesh_lock_stiffness}}},
           {"dither_omega", cfg.dither_omega},
           {"agent",
            {{"hidden_layers", cfg.agent.hidden_layers},
             {"gamma", cfg.agent.gamma},
             {"alpha", cfg.agent.alpha},
             {"epsilon0", cfg.agent.epsilon0},
             {"beta", cfg.agent.beta},
             {"min_epsilon", cfg.agent.min_epsilon},
             {"batch_size", cfg.agent.batch_size},
             {"replay_capacity", cfg.agent.replay_capacity},
             {"target_copy_interval", cfg.agent.target_copy_interval},
             {"td_error_clip", cfg.agent.td_error_clip},
             {"sgd_momentum", cfg.agent.sgd_momentum},
             {"snapshot_interval", cfg.agent.snapshot_interval},
             {"snapshot_probes", cfg.agent.snapshot_probes}}},
           {"training",
            {{"episodes", cfg.training.episodes},
             {"start_jitter", cfg.training.start_jitter},
             {"bias_jitter", cfg.training.bias_jitter},
             {"quadrant_fraction", cfg.training.quadrant_fraction},
             {"moving_window", cfg.training.moving_window}}},
           {"evaluation",
            {{"start_jitter", cfg.evaluation.start_jitter},
             {"histogram_bin", cfg.evaluation.histogram_bin},
             {"sweep_periods_ms", cfg.evaluation.sweep_periods_ms}}}};
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = config_to_json(cfg);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace varstiff
