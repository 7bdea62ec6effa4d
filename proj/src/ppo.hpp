#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "env.hpp"
#include "nn/optim.hpp"
#include "policy.hpp"
#include "rng.hpp"

namespace scmgame {

struct TrainConfig {
    double gamma = 0.999;
    double clip = 0.2;
    double gae_lambda = 0.95;
    double entropy_coeff = 0.01;
    double value_coeff = 0.5;
    double learning_rate = 3e-4;
    int epochs_per_update = 4;
    int episodes_per_update = 16;
    int total_episodes = 600;
    int hidden_dim = 32;
    std::uint64_t seed = 0;
    int store_every = 1;        // keep every k-th EpisodeRecord (0 = none)
    int plateau_window = 0;     // episodes; 0 disables the plateau stop
    double plateau_tol = 0.01;  // relative improvement below this = plateau

    void validate() const;
};

// One agent's view of one episode.
struct AgentEpisode {
    std::vector<std::vector<double>> observations;  // observation used for each decision
    std::vector<AgentAction> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
    std::vector<double> rewards;
    std::vector<double> advantages;  // filled by gae_advantages
    std::vector<double> returns;
};

struct RolloutBatch {
    std::vector<std::vector<AgentEpisode>> episodes;  // [episode][agent]
    std::vector<EpisodeRecord> records;               // one per episode
};

RolloutBatch collect_rollouts(ClimateGameEnv& env, std::vector<PolicyNet>& policies,
                              int n_episodes, rng::Stream& stream);

// Generalized advantage estimation over a complete finite-horizon episode;
// the value beyond the terminal step is zero.
void gae_advantages(AgentEpisode& episode, double gamma, double lambda);

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    bool aborted = false;  // non-finite loss; parameters were restored
};

UpdateStats ppo_update(PolicyNet& policy, const std::vector<AgentEpisode>& episodes,
                       const TrainConfig& config, nn::Adam& optimizer);

struct TrainResult {
    std::vector<PolicyNet> policies;
    std::vector<std::vector<double>> reward_curves;  // [agent][episode] episodic return
    // [agent][episode][lever] mean effort/adaptation value over the episode.
    std::vector<std::vector<std::array<double, 4>>> lever_curves;
    std::vector<EpisodeRecord> records;  // the stored trajectory set
    int episodes_run = 0;
    bool plateaued = false;
};

TrainResult train(ClimateGameEnv& env, const TrainConfig& config);

// Per-episode CSVs backing the learning-curve and lever-trajectory figures.
void write_reward_curves_csv(const std::string& path, const TrainResult& result);
void write_lever_curves_csv(const std::string& path, const TrainResult& result);

}  // namespace scmgame
