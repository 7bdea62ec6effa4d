#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "species.hpp"
#include "trajectory.hpp"

namespace scmgame {

struct PerturbationConfig {
    int n_scenarios = 2000;
    double alpha = 0.8;  // geometric EMA smoothing in log space
    double lo_controllable = 0.925;
    double hi_controllable = 1.075;
    // Optional per-scenario persistent trend on controllable-gas growth
    // (one draw per scenario and gas, applied every horizon year). The EMA
    // band above mean-reverts, so on its own it rarely produces sustained
    // deep-mitigation pathways; a trend band below 1 adds them. (1, 1)
    // disables the trend entirely.
    double lo_trend = 1.0;
    double hi_trend = 1.0;
    int horizon_start = 2016;
    int horizon_end = 2075;
    std::uint64_t seed = 0;
};

// (lo, hi) multiplier bounds per gas: controllable gases get the configured
// band, everything else is pinned to (1, 1).
std::vector<std::pair<double, double>> gas_bounds(const SpeciesRegistry& registry,
                                                  const PerturbationConfig& config);

// Year-over-year growth factors of the baseline. Row i holds the growth into
// year start_year + 1 + i. Throws on non-positive baseline emissions.
std::vector<std::vector<double>> baseline_growth(const EmissionTrajectory& baseline);

// Smoothed multiplier sequence zeta(t) for t in [horizon_start, horizon_end].
// zeta(horizon_start - 1) = 1 by definition; draws are keyed by
// (seed, scenario_id, gas, year) so the stream is order-independent.
std::vector<double> sample_smoothed_multipliers(const PerturbationConfig& config,
                                                std::int64_t scenario_id, std::size_t gas,
                                                double lo, double hi);

// One raw draw (before smoothing); exposed for golden-stream tests.
double raw_multiplier_draw(std::uint64_t seed, std::int64_t scenario_id, std::size_t gas,
                           int year, double lo, double hi);

// The scenario's persistent trend multiplier for one gas: a single draw in
// [lo, hi], keyed by (seed, scenario_id, gas). Exactly 1 when lo == hi == 1.
double trend_multiplier_draw(std::uint64_t seed, std::int64_t scenario_id, std::size_t gas,
                             double lo, double hi);

// Complete per-gas multiplier sequences for one scenario: smoothed EMA draws
// times the scenario trend for controllable gases, all-ones for the rest.
std::vector<std::vector<double>> scenario_multipliers(
    const PerturbationConfig& config, const std::vector<std::pair<double, double>>& bounds,
    std::int64_t scenario_id);

// Assembles a perturbed scenario: baseline before horizon_start, recursive
// perturbed growth afterwards. zetas[gas] spans the horizon years.
EmissionTrajectory build_scenario(const EmissionTrajectory& baseline,
                                  const std::vector<std::vector<double>>& growth,
                                  const std::vector<std::vector<double>>& zetas,
                                  std::int64_t scenario_id, const PerturbationConfig& config);

// All S scenarios, in memory (desk scale).
std::vector<EmissionTrajectory> generate_ensemble(const EmissionTrajectory& baseline,
                                                  const SpeciesRegistry& registry,
                                                  const PerturbationConfig& config);

// Writes scenario_<id>.csv files plus manifest.json into out_dir.
void write_ensemble(const EmissionTrajectory& baseline, const SpeciesRegistry& registry,
                    const PerturbationConfig& config, const std::string& out_dir);

// Smooth positive multi-gas baseline standing in for a middle-of-the-road
// reference scenario: historical ramp to 2015, then per-species-class
// peak-and-decline or plateau. Deterministic given seed.
EmissionTrajectory synthetic_baseline(std::uint64_t seed, const SpeciesRegistry& registry,
                                      int start_year = 1900, int end_year = 2075);

}  // namespace scmgame
