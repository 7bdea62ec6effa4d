#include "ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "nn/tape.hpp"

namespace scmgame {

using nn::Mat;
using nn::Var;

void TrainConfig::validate() const {
    if (gamma <= 0.0 || gamma > 1.0) throw std::runtime_error("train: gamma must be in (0,1]");
    if (clip <= 0.0) throw std::runtime_error("train: clip ratio must be positive");
    if (gae_lambda < 0.0 || gae_lambda > 1.0)
        throw std::runtime_error("train: GAE lambda must be in [0,1]");
    if (epochs_per_update < 1 || episodes_per_update < 1 || total_episodes < 1)
        throw std::runtime_error("train: counts must be positive");
    if (hidden_dim < 1) throw std::runtime_error("train: hidden_dim must be positive");
}

RolloutBatch collect_rollouts(ClimateGameEnv& env, std::vector<PolicyNet>& policies,
                              int n_episodes, rng::Stream& stream) {
    const int n_agents = env.spec().n_agents;
    if (static_cast<int>(policies.size()) != n_agents)
        throw std::runtime_error("rollout: one policy per agent required");
    RolloutBatch batch;
    for (int ep = 0; ep < n_episodes; ++ep) {
        std::vector<double> obs = env.reset();
        std::vector<LstmState> states;
        for (auto& p : policies) states.push_back(p.initial_state());
        std::vector<AgentEpisode> agent_eps(static_cast<std::size_t>(n_agents));
        bool done = false;
        while (!done) {
            std::vector<AgentAction> joint(static_cast<std::size_t>(n_agents));
            for (int i = 0; i < n_agents; ++i) {
                const auto ai = static_cast<std::size_t>(i);
                ActResult r = policies[ai].act(obs, states[ai], &stream);
                joint[ai] = r.action;
                agent_eps[ai].observations.push_back(obs);
                agent_eps[ai].actions.push_back(r.action);
                agent_eps[ai].log_probs.push_back(r.log_prob);
                agent_eps[ai].values.push_back(r.value);
            }
            auto step = env.step(joint);
            for (int i = 0; i < n_agents; ++i)
                agent_eps[static_cast<std::size_t>(i)].rewards.push_back(
                    step.rewards[static_cast<std::size_t>(i)]);
            obs = std::move(step.observation);
            done = step.done;
        }
        batch.records.push_back(env.record());
        batch.episodes.push_back(std::move(agent_eps));
    }
    return batch;
}

void gae_advantages(AgentEpisode& episode, double gamma, double lambda) {
    const std::size_t T = episode.rewards.size();
    if (episode.values.size() != T) throw std::runtime_error("gae: value/reward length mismatch");
    episode.advantages.assign(T, 0.0);
    episode.returns.assign(T, 0.0);
    double gae = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        const double next_value = (t + 1 < T) ? episode.values[t + 1] : 0.0;
        const double delta = episode.rewards[t] + gamma * next_value - episode.values[t];
        gae = delta + gamma * lambda * gae;
        episode.advantages[t] = gae;
        episode.returns[t] = gae + episode.values[t];
    }
}

UpdateStats ppo_update(PolicyNet& policy, const std::vector<AgentEpisode>& episodes,
                       const TrainConfig& config, nn::Adam& optimizer) {
    UpdateStats stats;
    std::size_t total_steps = 0;
    for (const auto& ep : episodes) {
        if (ep.advantages.size() != ep.rewards.size())
            throw std::runtime_error("ppo: advantages missing; run gae_advantages first");
        total_steps += ep.rewards.size();
    }
    if (total_steps == 0) return stats;

    // Normalize advantages across the whole batch (skipped when degenerate,
    // so a zero-advantage batch produces a zero policy gradient).
    double mean = 0.0;
    for (const auto& ep : episodes)
        mean = std::accumulate(ep.advantages.begin(), ep.advantages.end(), mean);
    mean /= static_cast<double>(total_steps);
    double var = 0.0;
    for (const auto& ep : episodes)
        for (double a : ep.advantages) var += (a - mean) * (a - mean);
    const double stddev = std::sqrt(var / static_cast<double>(total_steps));
    auto norm_adv = [&](double a) { return stddev > 1e-12 ? (a - mean) / stddev : a; };

    const std::vector<double> snapshot = policy.params().flatten_values();
    const double inv_n = 1.0 / static_cast<double>(total_steps);

    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
        policy.params().zero_grads();
        double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
        nn::Tape tape;
        Var total;
        for (const auto& ep : episodes) {
            auto rolled = policy.unroll(tape, ep.observations, ep.actions);
            for (std::size_t t = 0; t < ep.rewards.size(); ++t) {
                const double adv = norm_adv(ep.advantages[t]);
                Var ratio = tape.exp(tape.add_scalar(rolled.log_probs[t], -ep.log_probs[t]));
                Var surr = tape.min_elem(
                    tape.scale(ratio, adv),
                    tape.scale(tape.clip(ratio, 1.0 - config.clip, 1.0 + config.clip), adv));
                Var verr = tape.add_scalar(rolled.values[t], -ep.returns[t]);
                Var vloss = tape.hadamard(verr, verr);
                Var step = tape.add(
                    tape.add(tape.scale(surr, -1.0), tape.scale(vloss, config.value_coeff)),
                    tape.scale(rolled.entropies[t], -config.entropy_coeff));
                total = total.valid() ? tape.add(total, step) : step;
                policy_loss -= tape.value(surr)(0, 0);
                value_loss += tape.value(vloss)(0, 0);
                entropy += tape.value(rolled.entropies[t])(0, 0);
            }
        }
        Var loss = tape.scale(total, inv_n);
        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            policy.params().unflatten_values(snapshot);
            stats.aborted = true;
            return stats;
        }
        tape.backward(loss);
        for (double g : policy.params().flatten_grads())
            if (!std::isfinite(g)) {
                policy.params().unflatten_values(snapshot);
                stats.aborted = true;
                return stats;
            }
        optimizer.step(policy.params());
        stats.policy_loss = policy_loss * inv_n;
        stats.value_loss = value_loss * inv_n;
        stats.entropy = entropy * inv_n;
    }
    return stats;
}

namespace {

double lever_value(const ScenarioSpec& spec, const AgentAction& a, int lever) {
    switch (lever) {
        case 0: return spec.effort_levels[static_cast<std::size_t>(a.energy)];
        case 1: return spec.effort_levels[static_cast<std::size_t>(a.methane)];
        case 2: return spec.effort_levels[static_cast<std::size_t>(a.agriculture)];
        default: return spec.adaptation_levels[static_cast<std::size_t>(a.adaptation)];
    }
}

}  // namespace

TrainResult train(ClimateGameEnv& env, const TrainConfig& config) {
    config.validate();
    const int n_agents = env.spec().n_agents;
    TrainResult result;
    PolicyConfig pc;
    pc.obs_dim = env.observation_size();
    pc.hidden_dim = config.hidden_dim;
    for (int i = 0; i < n_agents; ++i) {
        pc.seed = rng::key(config.seed, 0x6167656eULL, static_cast<std::uint64_t>(i), 0);
        result.policies.emplace_back(pc);
    }
    result.reward_curves.assign(static_cast<std::size_t>(n_agents), {});
    result.lever_curves.assign(static_cast<std::size_t>(n_agents), {});
    std::vector<nn::Adam> optimizers(static_cast<std::size_t>(n_agents),
                                     nn::Adam(config.learning_rate));
    rng::Stream action_stream(rng::key(config.seed, 0x616374ULL, 0, 0));

    int episodes_run = 0;
    while (episodes_run < config.total_episodes) {
        const int want = std::min(config.episodes_per_update,
                                  config.total_episodes - episodes_run);
        RolloutBatch batch = collect_rollouts(env, result.policies, want, action_stream);

        for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
            const int global_ep = episodes_run + static_cast<int>(e);
            if (config.store_every > 0 && global_ep % config.store_every == 0)
                result.records.push_back(batch.records[e]);
            for (int i = 0; i < n_agents; ++i) {
                const auto& ep = batch.episodes[e][static_cast<std::size_t>(i)];
                result.reward_curves[static_cast<std::size_t>(i)].push_back(
                    std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0));
                std::array<double, 4> levers{};
                for (const auto& a : ep.actions)
                    for (int l = 0; l < 4; ++l)
                        levers[static_cast<std::size_t>(l)] += lever_value(env.spec(), a, l);
                for (double& v : levers) v /= static_cast<double>(ep.actions.size());
                result.lever_curves[static_cast<std::size_t>(i)].push_back(levers);
            }
        }
        episodes_run += want;
        result.episodes_run = episodes_run;

        for (int i = 0; i < n_agents; ++i) {
            const auto ai = static_cast<std::size_t>(i);
            std::vector<AgentEpisode> eps;
            for (auto& joint : batch.episodes) {
                gae_advantages(joint[ai], config.gamma, config.gae_lambda);
                eps.push_back(std::move(joint[ai]));
            }
            ppo_update(result.policies[ai], eps, config, optimizers[ai]);
        }

        if (config.plateau_window > 0 && episodes_run >= 2 * config.plateau_window) {
            // Mean episodic return across agents, recent window vs the one before.
            auto window_mean = [&](int from, int count) {
                double s = 0.0;
                for (const auto& curve : result.reward_curves)
                    for (int k = from; k < from + count; ++k)
                        s += curve[static_cast<std::size_t>(k)];
                return s / static_cast<double>(count * n_agents);
            };
            const int w = config.plateau_window;
            const double recent = window_mean(episodes_run - w, w);
            const double before = window_mean(episodes_run - 2 * w, w);
            // Returns are negative; improvement means moving toward zero.
            if (recent <= before + config.plateau_tol * std::abs(before)) {
                result.plateaued = true;
                break;
            }
        }
    }
    return result;
}

void write_reward_curves_csv(const std::string& path, const TrainResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("train: cannot open " + path);
    out << "episode";
    for (std::size_t i = 0; i < result.reward_curves.size(); ++i) out << ",agent" << i;
    out << "\n";
    const std::size_t n = result.reward_curves.empty() ? 0 : result.reward_curves[0].size();
    out.precision(12);
    for (std::size_t e = 0; e < n; ++e) {
        out << e;
        for (const auto& curve : result.reward_curves) out << "," << curve[e];
        out << "\n";
    }
}

void write_lever_curves_csv(const std::string& path, const TrainResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("train: cannot open " + path);
    out << "episode";
    static const char* kLevers[4] = {"energy", "methane", "agriculture", "adaptation"};
    for (std::size_t i = 0; i < result.lever_curves.size(); ++i)
        for (const char* l : kLevers) out << ",agent" << i << "_" << l;
    out << "\n";
    const std::size_t n = result.lever_curves.empty() ? 0 : result.lever_curves[0].size();
    out.precision(12);
    for (std::size_t e = 0; e < n; ++e) {
        out << e;
        for (const auto& curve : result.lever_curves)
            for (double v : curve[e]) out << "," << v;
        out << "\n";
    }
}

}  // namespace scmgame
