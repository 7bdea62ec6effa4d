#include "scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rng.hpp"

namespace scmgame {

std::vector<std::pair<double, double>> gas_bounds(const SpeciesRegistry& registry,
                                                  const PerturbationConfig& config) {
    std::vector<std::pair<double, double>> bounds(registry.size(), {1.0, 1.0});
    for (std::size_t g : registry.controllable_indices())
        bounds[g] = {config.lo_controllable, config.hi_controllable};
    return bounds;
}

std::vector<std::vector<double>> baseline_growth(const EmissionTrajectory& baseline) {
    if (baseline.n_years() < 2) throw std::runtime_error("baseline_growth: need at least 2 years");
    std::vector<std::vector<double>> growth;
    for (int i = 1; i < baseline.n_years(); ++i) {
        const auto& prev = baseline.values[static_cast<std::size_t>(i - 1)];
        const auto& cur = baseline.values[static_cast<std::size_t>(i)];
        std::vector<double> row(prev.size());
        for (std::size_t g = 0; g < prev.size(); ++g) {
            if (prev[g] <= 0.0 || cur[g] <= 0.0)
                throw std::runtime_error("baseline_growth: non-positive baseline emission");
            row[g] = cur[g] / prev[g];
        }
        growth.push_back(std::move(row));
    }
    return growth;
}

double raw_multiplier_draw(std::uint64_t seed, std::int64_t scenario_id, std::size_t gas,
                           int year, double lo, double hi) {
    const std::uint64_t bits = rng::key(seed, static_cast<std::uint64_t>(scenario_id),
                                        static_cast<std::uint64_t>(gas),
                                        static_cast<std::uint64_t>(year));
    return rng::uniform(bits, lo, hi);
}

double trend_multiplier_draw(std::uint64_t seed, std::int64_t scenario_id, std::size_t gas,
                             double lo, double hi) {
    if (lo == 1.0 && hi == 1.0) return 1.0;
    // A distinct key domain from the yearly draws: year slot pinned to a
    // sentinel outside the horizon.
    const std::uint64_t bits = rng::key(seed ^ 0x7472656e64ULL,
                                        static_cast<std::uint64_t>(scenario_id),
                                        static_cast<std::uint64_t>(gas), 0);
    return rng::uniform(bits, lo, hi);
}

std::vector<std::vector<double>> scenario_multipliers(
    const PerturbationConfig& config, const std::vector<std::pair<double, double>>& bounds,
    std::int64_t scenario_id) {
    const auto n_years =
        static_cast<std::size_t>(config.horizon_end - config.horizon_start + 1);
    std::vector<std::vector<double>> zetas(bounds.size());
    for (std::size_t g = 0; g < bounds.size(); ++g) {
        if (bounds[g].first == 1.0 && bounds[g].second == 1.0) {
            zetas[g].assign(n_years, 1.0);
            continue;
        }
        zetas[g] = sample_smoothed_multipliers(config, scenario_id, g, bounds[g].first,
                                               bounds[g].second);
        const double trend = trend_multiplier_draw(config.seed, scenario_id, g,
                                                   config.lo_trend, config.hi_trend);
        if (trend != 1.0)
            for (double& z : zetas[g]) z *= trend;
    }
    return zetas;
}

std::vector<double> sample_smoothed_multipliers(const PerturbationConfig& config,
                                                std::int64_t scenario_id, std::size_t gas,
                                                double lo, double hi) {
    if (lo > hi) throw std::runtime_error("sample_smoothed_multipliers: lo > hi");
    std::vector<double> zeta;
    zeta.reserve(static_cast<std::size_t>(config.horizon_end - config.horizon_start + 1));
    double prev = 1.0;  // zeta at the last baseline year
    for (int year = config.horizon_start; year <= config.horizon_end; ++year) {
        const double raw = raw_multiplier_draw(config.seed, scenario_id, gas, year, lo, hi);
        const double z = std::pow(prev, config.alpha) * std::pow(raw, 1.0 - config.alpha);
        zeta.push_back(z);
        prev = z;
    }
    return zeta;
}

EmissionTrajectory build_scenario(const EmissionTrajectory& baseline,
                                  const std::vector<std::vector<double>>& growth,
                                  const std::vector<std::vector<double>>& zetas,
                                  std::int64_t scenario_id, const PerturbationConfig& config) {
    if (baseline.start_year >= config.horizon_start ||
        baseline.end_year() < config.horizon_end)
        throw std::runtime_error("build_scenario: baseline does not cover the horizon");
    if (growth.size() != static_cast<std::size_t>(baseline.n_years() - 1))
        throw std::runtime_error("build_scenario: growth rows misaligned with baseline");

    EmissionTrajectory out;
    out.scenario_id = scenario_id;
    out.start_year = baseline.start_year;
    out.values = baseline.values;

    const std::size_t n_gas = baseline.values.front().size();
    // A gas with all-unit multipliers telescopes back to the baseline; copy it
    // verbatim so unperturbed gases stay bit-identical to the input.
    std::vector<char> untouched(n_gas, 1);
    for (std::size_t g = 0; g < n_gas; ++g)
        for (double z : zetas[g])
            if (z != 1.0) {
                untouched[g] = 0;
                break;
            }
    for (int year = config.horizon_start; year <= config.horizon_end; ++year) {
        const std::size_t yi = static_cast<std::size_t>(year - baseline.start_year);
        const auto& g_row = growth[yi - 1];  // growth into `year`
        const std::size_t zi = static_cast<std::size_t>(year - config.horizon_start);
        for (std::size_t g = 0; g < n_gas; ++g) {
            if (untouched[g]) continue;
            const double zeta = zetas[g][zi];
            out.values[yi][g] = out.values[yi - 1][g] * g_row[g] * zeta;
        }
    }
    return out;
}

std::vector<EmissionTrajectory> generate_ensemble(const EmissionTrajectory& baseline,
                                                  const SpeciesRegistry& registry,
                                                  const PerturbationConfig& config) {
    baseline.validate(registry);
    const auto growth = baseline_growth(baseline);
    const auto bounds = gas_bounds(registry, config);
    std::vector<EmissionTrajectory> out;
    out.reserve(static_cast<std::size_t>(config.n_scenarios));
    for (int s = 1; s <= config.n_scenarios; ++s)
        out.push_back(build_scenario(baseline, growth, scenario_multipliers(config, bounds, s),
                                     s, config));
    return out;
}

void write_ensemble(const EmissionTrajectory& baseline, const SpeciesRegistry& registry,
                    const PerturbationConfig& config, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    baseline.validate(registry);
    const auto growth = baseline_growth(baseline);
    const auto bounds = gas_bounds(registry, config);

    nlohmann::json manifest;
    manifest["seed"] = config.seed;
    manifest["alpha"] = config.alpha;
    manifest["n_scenarios"] = config.n_scenarios;
    manifest["bounds"] = {{"controllable_lo", config.lo_controllable},
                          {"controllable_hi", config.hi_controllable},
                          {"trend_lo", config.lo_trend},
                          {"trend_hi", config.hi_trend}};
    manifest["horizon"] = {config.horizon_start, config.horizon_end};
    manifest["registry_hash"] = registry.hash();
    std::vector<std::string> files;

    {
        const std::string name = "scenario_000000.csv";
        EmissionTrajectory b = baseline;
        b.scenario_id = 0;
        b.save_csv((fs::path(out_dir) / name).string(), registry);
        files.push_back(name);
    }
    for (int s = 1; s <= config.n_scenarios; ++s) {
        auto traj =
            build_scenario(baseline, growth, scenario_multipliers(config, bounds, s), s, config);
        char name[48];
        std::snprintf(name, sizeof(name), "scenario_%06d.csv", s);
        traj.save_csv((fs::path(out_dir) / name).string(), registry);
        files.emplace_back(name);
    }
    manifest["files"] = files;
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("write_ensemble: cannot write manifest");
    out << manifest.dump(2) << "\n";
}

namespace {

struct CurveSpec {
    double base;       // level at the start of history
    double amplitude;  // logistic rise above base
    double ramp_mid;   // year of fastest growth
    double ramp_width;
    double peak_year;  // decline sets in after this year
    double decline_width;
};

double curve_value(const CurveSpec& c, double t) {
    const double rise = 1.0 / (1.0 + std::exp(-(t - c.ramp_mid) / c.ramp_width));
    double decline = 1.0;
    if (t > c.peak_year) {
        const double dt = t - c.peak_year;
        decline = std::exp(-0.5 * dt * dt / (c.decline_width * c.decline_width));
    }
    return c.base + c.amplitude * rise * decline;
}

CurveSpec curve_for(const Species& sp) {
    const std::string& n = sp.name;
    if (n == "CO2_FF") return {0.5, 11.0, 1990, 30, 2040, 60};
    if (n == "CO2_AFOLU") return {0.7, 0.9, 1960, 40, 2015, 50};
    if (n == "CH4") return {100, 300, 1985, 35, 2050, 80};
    if (n == "N2O") return {7, 6, 2000, 45, 2075, 100};
    // SO2 peaks and then falls steeply (air-quality policy), as in
    // middle-of-the-road pathways; by mid-century the baseline itself has
    // shed most aerosol cooling, so mitigation's extra SO2 cut stays small.
    if (n == "SO2") return {2, 110, 1965, 25, 1990, 30};
    if (n == "NOx") return {5, 120, 1985, 30, 2030, 60};
    if (n == "CO") return {200, 800, 1980, 30, 2010, 70};
    if (n == "NMVOC") return {60, 180, 1985, 30, 2020, 70};
    if (n == "NH3") return {20, 45, 2000, 40, 2075, 100};
    if (n == "BC") return {2, 6, 1980, 35, 2010, 70};
    if (n == "OC") return {5, 28, 1980, 35, 2010, 70};
    if (n == "BMB_AEROS_BC") return {2, 1.5, 1980, 40, 2020, 80};
    if (n == "BMB_AEROS_OC") return {15, 12, 1980, 40, 2020, 80};
    // Halocarbons: the Montreal-era species ramp up and are phased out, the
    // replacement refrigerants keep growing, the very long-lived species
    // stay small but persistent.
    const bool montreal = n.rfind("CFC", 0) == 0 || n == "CCl4" || n == "CH3CCl3" ||
                          n == "CH3Br" || n.rfind("H-", 0) == 0;
    if (montreal) return {0.1, 300, 1975, 12, 1990, 25};
    if (sp.cls == SpeciesClass::VeryLongLivedGHG) return {0.1, 12, 1990, 25, 2075, 120};
    return {0.1, 250, 2000, 15, 2050, 60};  // HCFC / HFC family
}

}  // namespace

EmissionTrajectory synthetic_baseline(std::uint64_t seed, const SpeciesRegistry& registry,
                                      int start_year, int end_year) {
    EmissionTrajectory traj;
    traj.scenario_id = 0;
    traj.start_year = start_year;
    const std::size_t n_gas = registry.size();
    std::vector<double> scale(n_gas);
    for (std::size_t g = 0; g < n_gas; ++g) {
        // A small deterministic per-gas scale so different seeds give
        // different but equally plausible baselines.
        const double u = rng::uniform01(rng::key(seed, 7771, g, 0));
        scale[g] = 1.0 + 0.04 * (u - 0.5);
    }
    for (int year = start_year; year <= end_year; ++year) {
        std::vector<double> row(n_gas);
        for (std::size_t g = 0; g < n_gas; ++g)
            row[g] = scale[g] * curve_value(curve_for(registry.at(g)), year);
        traj.values.push_back(std::move(row));
    }
    traj.validate(registry);
    return traj;
}

}  // namespace scmgame
