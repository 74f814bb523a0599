#include "varstiff/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace varstiff {

QNetwork QNetwork::init(std::vector<int> sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw std::invalid_argument("need at least two layers");
    QNetwork net;
    net.layer_sizes = std::move(sizes);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 1; l < net.layer_sizes.size(); ++l) {
        const int fan_in = net.layer_sizes[l - 1];
        const int fan_out = net.layer_sizes[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
        for (double& v : w) v = u(rng);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += weights[l].size() + biases[l].size();
    return n;
}

bool QNetwork::finite() const {
    for (const auto& w : weights)
        for (double v : w)
            if (!std::isfinite(v)) return false;
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

namespace {

struct ForwardCache {
    // post[0] is the input; post[l] the activation after layer l.
    std::vector<std::vector<double>> post;
    std::vector<std::vector<double>> pre;  // pre[l]: z of layer l (1-based shifted)
};

std::vector<double> forward_impl(const QNetwork& net, const State8& s,
                                 ForwardCache* cache) {
    std::vector<double> a(s.begin(), s.begin() + net.input_size());
    if (cache) cache->post.push_back(a);
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        std::vector<double> z(out);
        for (int o = 0; o < out; ++o) {
            double acc = net.biases[l][o];
            const double* row = net.weights[l].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * a[i];
            z[o] = acc;
        }
        if (cache) cache->pre.push_back(z);
        if (l + 1 < layers)
            for (double& v : z) v = std::max(v, 0.0);  // rectifier
        a = std::move(z);
        if (cache) cache->post.push_back(a);
    }
    return a;
}

/// d Q(s, action) / d(parameters), laid out as [w0, b0, w1, b1, ...]
/// accumulated into `grad` scaled by `scale`.
void accumulate_gradient(const QNetwork& net, const ForwardCache& cache,
                         std::size_t action, double scale,
                         std::vector<std::vector<double>>& grad_w,
                         std::vector<std::vector<double>>& grad_b) {
    const std::size_t layers = net.weights.size();
    // Backpropagate d out_action / d z_l.
    std::vector<double> delta(net.layer_sizes.back(), 0.0);
    delta[action] = 1.0;

    for (std::size_t l = layers; l-- > 0;) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const std::vector<double>& a_prev = cache.post[l];
        for (int o = 0; o < out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            grad_b[l][o] += scale * d;
            double* grow = grad_w[l].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) grow[i] += scale * d * a_prev[i];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* row = net.weights[l].data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) prev[i] += d * row[i];
        }
        // Rectifier mask of the previous layer.
        const std::vector<double>& z_prev = cache.pre[l - 1];
        for (int i = 0; i < in; ++i)
            if (z_prev[i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
    }
}

}  // namespace

std::vector<double> q_forward(const QNetwork& net, const State8& s) {
    return forward_impl(net, s, nullptr);
}

void ReplayBuffer::push(const Transition& t) {
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
        items_.push_back(t);
    } else {
        items_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (items_.empty()) throw std::logic_error("replay buffer is empty");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
    return out;
}

std::size_t argmax_action(std::span<const double> q_values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < q_values.size(); ++i)
        if (q_values[i] > q_values[best]) best = i;
    return best;
}

std::size_t select_action(std::span<const double> q_values,
                          const ExplorationSchedule& schedule,
                          std::mt19937_64& rng) {
    if (q_values.empty()) throw std::invalid_argument("empty action set");
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < schedule.epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, q_values.size() - 1);
        return pick(rng);
    }
    return argmax_action(q_values);
}

double sparse_reward(int step, TaskPhase outcome, int max_steps) {
    if (outcome == TaskPhase::Done)
        return 1.0 - static_cast<double>(step) / static_cast<double>(max_steps);
    if (outcome == TaskPhase::Failed) return -1.0;
    return 0.0;
}

double cumulative_return(std::span<const double> rewards, double gamma) {
    double acc = 0.0;
    double g = 1.0;
    for (double r : rewards) {
        acc += g * r;
        g *= gamma;
    }
    return acc;
}

TdStats td_update(QNetwork& net, const QNetwork& target_net,
                  std::span<const Transition> batch, double alpha, double gamma,
                  double error_clip, SgdMomentum* momentum) {
    if (batch.empty()) throw std::invalid_argument("empty batch");

    std::vector<std::vector<double>> grad_w, grad_b;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        grad_w.emplace_back(net.weights[l].size(), 0.0);
        grad_b.emplace_back(net.biases[l].size(), 0.0);
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double abs_err = 0.0;
    for (const Transition& t : batch) {
        ForwardCache cache;
        const std::vector<double> q = forward_impl(net, t.s, &cache);
        double target = t.r;
        if (!t.terminal) {
            const std::vector<double> qn = q_forward(target_net, t.s_next);
            target += gamma * *std::max_element(qn.begin(), qn.end());
        }
        double td_error = target - q[t.a];
        if (error_clip > 0.0) td_error = std::clamp(td_error, -error_clip, error_clip);
        abs_err += std::abs(td_error);
        // w <- w + alpha * mean(td_error * dQ/dw)
        accumulate_gradient(net, cache, t.a, td_error * inv_n, grad_w, grad_b);
    }

    if (momentum != nullptr && momentum->momentum > 0.0) {
        if (momentum->vel_w.empty()) {
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                momentum->vel_w.emplace_back(net.weights[l].size(), 0.0);
                momentum->vel_b.emplace_back(net.biases[l].size(), 0.0);
            }
        }
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
                momentum->vel_w[l][i] =
                    momentum->momentum * momentum->vel_w[l][i] + grad_w[l][i];
                net.weights[l][i] += alpha * momentum->vel_w[l][i];
            }
            for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
                momentum->vel_b[l][i] =
                    momentum->momentum * momentum->vel_b[l][i] + grad_b[l][i];
                net.biases[l][i] += alpha * momentum->vel_b[l][i];
            }
        }
        return TdStats{abs_err * inv_n};
    }

    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i)
            net.weights[l][i] += alpha * grad_w[l][i];
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            net.biases[l][i] += alpha * grad_b[l][i];
    }
    return TdStats{abs_err * inv_n};
}

TdStats td_update(QNetwork& net, std::span<const Transition> batch, double alpha,
                  double gamma) {
    const QNetwork frozen = net;
    return td_update(net, frozen, batch, alpha, gamma);
}

std::pair<std::size_t, const StiffnessMatrix*> agent_tick(
    const QNetwork& net, const ExplorationSchedule& schedule, const State8& s,
    std::mt19937_64& rng, const ActionCatalog& catalog) {
    const std::vector<double> q = q_forward(net, s);
    if (q.size() != catalog.size())
        throw std::invalid_argument("network output size does not match catalog");
    const std::size_t a = select_action(q, schedule, rng);
    return {a, &catalog[a]};
}

namespace {

using nlohmann::json;

json net_to_json(const QNetwork& net) {
    return json{{"layer_sizes", net.layer_sizes},
                {"weights", net.weights},
                {"biases", net.biases}};
}

QNetwork net_from_json(const json& j) {
    QNetwork net;
    j.at("layer_sizes").get_to(net.layer_sizes);
    j.at("weights").get_to(net.weights);
    j.at("biases").get_to(net.biases);
    if (net.layer_sizes.size() < 2 ||
        net.weights.size() != net.layer_sizes.size() - 1 ||
        net.biases.size() != net.weights.size())
        throw CheckpointError("inconsistent network shape");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const std::size_t in = static_cast<std::size_t>(net.layer_sizes[l]);
        const std::size_t out = static_cast<std::size_t>(net.layer_sizes[l + 1]);
        if (net.weights[l].size() != in * out || net.biases[l].size() != out)
            throw CheckpointError("inconsistent parameter block size");
    }
    return net;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
    json j{{"format", "varstiff-checkpoint"},
           {"version", 1},
           {"net", net_to_json(cp.net)},
           {"epsilon", cp.epsilon},
           {"episode", cp.episode},
           {"seed", cp.seed},
           {"catalog_fingerprint", cp.catalog_fingerprint}};
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
    out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::uint64_t expected_fingerprint) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
    try {
        if (j.at("format") != "varstiff-checkpoint" || j.at("version") != 1)
            throw CheckpointError("unknown checkpoint format/version");
        Checkpoint cp;
        cp.net = net_from_json(j.at("net"));
        cp.epsilon = j.at("epsilon");
        cp.episode = j.at("episode");
        cp.seed = j.at("seed");
        cp.catalog_fingerprint = j.at("catalog_fingerprint");
        if (expected_fingerprint != 0 && cp.catalog_fingerprint != expected_fingerprint)
            throw CheckpointError("checkpoint catalog fingerprint mismatch");
        return cp;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace varstiff
