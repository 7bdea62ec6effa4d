#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"
#include "env.hpp"
#include "species.hpp"
#include "trajectory.hpp"

namespace scmgame {

// One stored trajectory selected for replay: the record's temperature trace
// came from whatever engine training used; replay_temps comes from a fresh
// simulator driven with the stored emissions.
struct ReplaySample {
    std::size_t index = 0;  // position in the stored set
    EpisodeRecord record;
    std::vector<double> replay_temps;
};

// Uniform sample of n indices from [0, set_size) without replacement,
// deterministic in the seed.
std::vector<std::size_t> sample_indices(std::size_t set_size, std::size_t n, std::uint64_t seed);

std::vector<ReplaySample> sample_trajectories(const std::vector<EpisodeRecord>& records,
                                              std::size_t n, std::uint64_t seed);

// Drive a fresh simulator (initialized with the given history) with the
// record's stored global emissions, year by year.
std::vector<double> replay(const EpisodeRecord& record, const EngineParams& params,
                           const SpeciesRegistry& registry, const EmissionTrajectory& history);

double trace_rmse(const std::vector<double>& a, const std::vector<double>& b);

// r = -sum_t gamma^t * trace[t], t counted from 0 at the first entry.
double discounted_temperature_return(const std::vector<double>& trace, double gamma);

// Tie-corrected Kendall tau-b via O(n log n) merge counting; nullopt when a
// vector is fully tied (undefined denominator).
std::optional<double> kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

struct ConsistencyReport {
    std::size_t n_sampled = 0;
    double gamma = 0.999;
    std::uint64_t seed = 0;
    std::vector<std::size_t> indices;
    std::vector<double> per_trajectory_rmse;
    double pooled_rmse = 0.0;
    std::vector<double> returns_net;  // from the stored (training-time) traces
    std::vector<double> returns_sim;  // from the replays
    std::optional<double> tau;

    std::string to_json() const;
    void save_csv(const std::string& path) const;
};

// Samples must have replay_temps filled in.
ConsistencyReport build_report(const std::vector<ReplaySample>& samples, double gamma,
                               std::uint64_t seed);

}  // namespace scmgame
