#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "env.hpp"

namespace scmgame {

struct BenchReport {
    std::string mode;        // "engine-step" or "env-step"
    std::string engine_tag;
    std::size_t n_steps = 0;
    double mean_s = 0.0;
    double median_s = 0.0;
    double p95_s = 0.0;
    std::string hardware;
    std::string build_flags;

    std::string to_json() const;
};

// Hardware/compiler note stamped into reports.
std::string hardware_note();

// Times backend->step(row) over pre-generated emission rows; the timed region
// covers exactly one step (append + normalize + forward for the surrogate,
// one simulated year for the simulator). `warmup` initial steps are untimed.
BenchReport time_engine_step(EngineBackend& backend,
                             const std::vector<std::vector<double>>& inputs,
                             std::size_t n_steps, std::size_t warmup = 1000);

// Times full env.step(joint action) under a fixed uniform-random action
// policy, averaged over complete episodes.
BenchReport time_env_step(ClimateGameEnv& env, int n_episodes, std::uint64_t seed);

// ratio = reference_mean / candidate_mean (how many times faster the
// candidate is).
double speedup_ratio(const BenchReport& reference, const BenchReport& candidate);

}  // namespace scmgame
