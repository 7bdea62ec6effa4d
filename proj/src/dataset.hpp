#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "species.hpp"
#include "trajectory.hpp"

namespace scmgame {

// One supervised sample: a (W+1) x |C| block of controllable-gas emissions in
// [t-W, t] and the temperature anomaly at the target year t.
struct WindowSample {
    std::int64_t scenario_id = 0;
    int target_year = 0;
    std::vector<std::vector<double>> x;  // (W+1) rows, chronological
    double y = 0.0;
};

enum class Split { Train, Val, Test };

struct SplitManifest {
    double train_ratio = 0.70, val_ratio = 0.15, test_ratio = 0.15;
    std::uint64_t seed = 0;
    std::map<std::int64_t, Split> assignment;

    Split of(std::int64_t scenario_id) const;
};

// Per-channel affine normalization fitted on the training split only.
struct NormStats {
    std::vector<double> x_mean, x_std;  // per controllable gas
    double y_mean = 0.0, y_std = 1.0;

    static NormStats fit(const std::vector<WindowSample>& train);
    std::vector<std::vector<double>> apply_x(const std::vector<std::vector<double>>& x) const;
    double apply_y(double y) const { return (y - y_mean) / y_std; }
    double invert_y(double z) const { return z * y_std + y_mean; }
};

// Windowed samples for target years [target_start, target_end]; the window
// for target t spans [t-W, t] and may reach into pre-horizon history.
std::vector<WindowSample> window_samples(const EmissionTrajectory& scenario,
                                         const SpeciesRegistry& registry,
                                         const std::vector<double>& temps, int temps_start_year,
                                         int window, int target_start = 2015,
                                         int target_end = 2075);

// Deterministic scenario-level split; ratios must sum to 1.
SplitManifest split_by_scenario(const std::vector<std::int64_t>& ids, double train, double val,
                                double test, std::uint64_t seed);

// On-disk container: magic + JSON header + fixed-width little-endian records
// in canonical (scenario, year) order.
struct Dataset {
    int window = 65;
    std::uint64_t registry_hash = 0;
    NormStats stats;
    SplitManifest split;
    std::vector<WindowSample> samples;

    std::vector<const WindowSample*> of_split(Split s) const;

    void save(const std::string& path) const;
    static Dataset load(const std::string& path);
};

// Assembles the full dataset: windows every scenario, splits by scenario id,
// fits stats on the training split.
Dataset build_dataset(const std::vector<EmissionTrajectory>& scenarios,
                      const SpeciesRegistry& registry,
                      const std::vector<std::vector<double>>& temp_traces, int temps_start_year,
                      int window, double train, double val, double test, std::uint64_t seed);

std::string to_string(Split s);
Split split_from_string(const std::string& s);

}  // namespace scmgame
