#include "engine.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "config.hpp"

namespace scmgame {

namespace {
constexpr double kSecondsPerYear = 3.15576e7;
constexpr double kOceanRhoCp = 4.1e6;  // J m^-3 K^-1

// Etminan-style band-overlap coefficients for CH4 and N2O forcing.
constexpr double kA2 = -8.0e-6, kB2 = 4.2e-6, kC2 = -4.9e-6, kD2 = 0.117;
constexpr double kA3 = -1.3e-6, kB3 = -8.2e-6, kD3 = 0.043;
}  // namespace

const std::map<std::string, double>& default_halo_efficiencies() {
    static const std::map<std::string, double> eff = {
        {"CFC-11", 2.6e-4},   {"CFC-12", 3.2e-4},    {"CFC-113", 3.0e-4},
        {"CFC-114", 3.1e-4},  {"CFC-115", 2.0e-4},   {"CH3Br", 4.0e-6},
        {"CCl4", 1.7e-4},     {"CH3CCl3", 7.0e-5},   {"HCFC-22", 2.1e-4},
        {"HCFC-141b", 1.6e-4},{"HCFC-123", 1.5e-4},  {"HCFC-142b", 1.9e-4},
        {"H-1211", 2.9e-4},   {"H-1301", 3.0e-4},    {"H-2402", 3.1e-4},
        {"HFC-125", 2.3e-4},  {"HFC-134a", 1.6e-4},  {"HFC-143a", 1.6e-4},
        {"HFC-227ea", 2.6e-4},{"HFC-23", 1.8e-4},    {"HFC-245fa", 2.4e-4},
        {"HFC-32", 1.1e-4},   {"HFC-4310mee", 4.2e-4},{"C2F6", 2.5e-4},
        {"C6F14", 4.4e-4},    {"CF4", 9.0e-5},       {"SF6", 5.7e-4},
    };
    return eff;
}

EngineParams EngineParams::from_config_text(const std::string& text) {
    auto cfg = config::File::parse(text);
    EngineParams p;
    p.rlamdo = cfg.number("climate", "rlamdo", p.rlamdo);
    p.akapa = cfg.number("climate", "akapa", p.akapa);
    p.cpi = cfg.number("climate", "cpi", p.cpi);
    p.w_up = cfg.number("climate", "W", p.w_up);
    p.beto = cfg.number("climate", "beto", p.beto);
    p.lambda = cfg.number("climate", "lambda", p.lambda);
    p.mixed = cfg.number("climate", "mixed", p.mixed);
    p.qbmb = cfg.number("forcing", "qbmb", p.qbmb);
    p.qo3 = cfg.number("forcing", "qo3", p.qo3);
    p.qdirso2 = cfg.number("forcing", "qdirso2", p.qdirso2);
    p.qindso2 = cfg.number("forcing", "qindso2", p.qindso2);
    p.qbc = cfg.number("forcing", "qbc", p.qbc);
    p.qoc = cfg.number("forcing", "qoc", p.qoc);
    p.n_ocean_layers = static_cast<int>(cfg.number("ocean", "layers", p.n_ocean_layers));
    p.substeps_per_year = static_cast<int>(cfg.number("ocean", "substeps", p.substeps_per_year));
    p.ocean_depth_m = cfg.number("ocean", "depth", p.ocean_depth_m);
    auto fracs = cfg.array("carbon_cycle", "fractions", {});
    auto taus = cfg.array("carbon_cycle", "timescales", {});
    if (!fracs.empty() || !taus.empty()) {
        if (fracs.size() != taus.size())
            throw std::runtime_error("engine config: carbon_cycle fractions/timescales length mismatch");
        p.carbon_cycle.clear();
        for (std::size_t i = 0; i < fracs.size(); ++i)
            p.carbon_cycle.push_back({fracs[i], taus[i]});
    }
    p.co2_ppm_per_gtc = cfg.number("carbon_cycle", "ppm_per_gtc", p.co2_ppm_per_gtc);
    p.co2_preindustrial_ppm = cfg.number("co2", "preindustrial_ppm", p.co2_preindustrial_ppm);
    p.co2_forcing_coeff = cfg.number("co2", "forcing_coeff", p.co2_forcing_coeff);
    p.ch4_preindustrial_ppb = cfg.number("ch4", "preindustrial_ppb", p.ch4_preindustrial_ppb);
    p.ch4_ppb_per_unit = cfg.number("ch4", "ppb_per_unit", p.ch4_ppb_per_unit);
    p.ch4_lifetime_adjust = cfg.number("ch4", "lifetime_adjust", p.ch4_lifetime_adjust);
    p.n2o_preindustrial_ppb = cfg.number("n2o", "preindustrial_ppb", p.n2o_preindustrial_ppb);
    p.n2o_ppb_per_unit = cfg.number("n2o", "ppb_per_unit", p.n2o_ppb_per_unit);
    p.halo_default_ppt_per_unit =
        cfg.number("halocarbons", "default_ppt_per_unit", p.halo_default_ppt_per_unit);
    for (const auto& k : cfg.keys("halo_efficiency"))
        p.halo_efficiency_w_per_ppt[k] = cfg.require_number("halo_efficiency", k);
    for (const auto& k : cfg.keys("halo_conversion"))
        p.halo_ppt_per_unit_override[k] = cfg.require_number("halo_conversion", k);
    for (const auto& k : cfg.keys("proxy_q"))
        p.proxy_q_override[k] = cfg.require_number("proxy_q", k);
    for (const auto& k : cfg.keys("proxy_refs"))
        p.proxy_ref_override[k] = cfg.require_number("proxy_refs", k);
    return p;
}

EngineParams EngineParams::from_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("engine config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_config_text(buf.str());
}

ClimateEngine::ClimateEngine(const EngineParams& params, const SpeciesRegistry& registry,
                             const EmissionTrajectory& historical)
    : params_(params), registry_(&registry) {
    const std::size_t n_gas = registry.size();
    if (params_.n_ocean_layers < 2) throw std::runtime_error("engine: need at least 2 ocean layers");
    if (params_.substeps_per_year < 1) throw std::runtime_error("engine: substeps must be >= 1");
    if (params_.lambda <= 0 || params_.mixed <= 0 || params_.rlamdo <= 0 || params_.akapa <= 0 ||
        params_.w_up <= 0 || params_.beto <= 0 || params_.cpi <= 0)
        throw std::runtime_error("engine: physical parameters must be positive");

    double frac_sum = 0.0;
    for (const auto& pool : params_.carbon_cycle) frac_sum += pool.fraction;
    if (std::abs(frac_sum - 1.0) > 1e-12)
        throw std::runtime_error("engine: carbon-cycle fractions must sum to 1");

    historical.validate(registry);

    if (params_.halo_efficiency_w_per_ppt.empty())
        params_.halo_efficiency_w_per_ppt = default_halo_efficiencies();

    // Per-gas derived constants.
    decay_factor_.assign(n_gas, 1.0);
    conc_per_unit_.assign(n_gas, 0.0);
    halo_eff_.assign(n_gas, 0.0);
    proxy_q_.assign(n_gas, 0.0);
    proxy_ref_pre_.assign(n_gas, 0.0);
    proxy_inv_denom_.assign(n_gas, 0.0);
    idx_ch4_ = registry.index_of("CH4");
    idx_n2o_ = registry.index_of("N2O");

    for (std::size_t g = 0; g < n_gas; ++g) {
        const Species& sp = registry.at(g);
        switch (sp.treatment) {
            case Treatment::CarbonCycle:
                break;
            case Treatment::MultiTauDecay: {
                double tau = *sp.lifetime_years * params_.ch4_lifetime_adjust;
                decay_factor_[g] = std::exp(-1.0 / tau);
                conc_per_unit_[g] = params_.ch4_ppb_per_unit;
                break;
            }
            case Treatment::FixedLifetimeDecay: {
                decay_factor_[g] = std::exp(-1.0 / *sp.lifetime_years);
                if (g == idx_n2o_) {
                    conc_per_unit_[g] = params_.n2o_ppb_per_unit;
                } else {
                    auto it = params_.halo_ppt_per_unit_override.find(sp.name);
                    conc_per_unit_[g] = it != params_.halo_ppt_per_unit_override.end()
                                            ? it->second
                                            : params_.halo_default_ppt_per_unit;
                    auto eff = params_.halo_efficiency_w_per_ppt.find(sp.name);
                    if (eff == params_.halo_efficiency_w_per_ppt.end())
                        throw std::runtime_error("engine: no radiative efficiency for " + sp.name);
                    halo_eff_[g] = eff->second;
                }
                break;
            }
            case Treatment::LinearForcingProxy: {
                // Default q split: SO2 carries direct+indirect aerosol forcing,
                // the ozone precursors share qo3, carbon aerosols use qbc/qoc,
                // and the biomass-burning pair uses qbmb.
                double q;
                if (sp.name == "SO2") q = params_.qdirso2 + params_.qindso2;
                else if (sp.name == "NOx") q = 0.5 * params_.qo3;
                else if (sp.name == "CO") q = 0.3 * params_.qo3;
                else if (sp.name == "NMVOC") q = 0.2 * params_.qo3;
                else if (sp.name == "NH3") q = -0.05;
                else if (sp.name == "BC") q = params_.qbc;
                else if (sp.name == "OC") q = params_.qoc;
                else if (sp.name == "BMB_AEROS_BC" || sp.name == "BMB_AEROS_OC") q = params_.qbmb;
                else q = 0.0;
                auto it = params_.proxy_q_override.find(sp.name);
                if (it != params_.proxy_q_override.end()) q = it->second;
                proxy_q_[g] = q;
                break;
            }
        }
    }

    // Proxy normalization references: first / last historical year unless
    // overridden. q contributes exactly its configured value at the modern
    // reference level.
    for (std::size_t g = 0; g < n_gas; ++g) {
        if (registry.at(g).treatment != Treatment::LinearForcingProxy) continue;
        const std::string& name = registry.at(g).name;
        double pre = historical.values.front()[g];
        double modern = historical.values.back()[g];
        if (auto it = params_.proxy_ref_override.find(name + ".pre");
            it != params_.proxy_ref_override.end())
            pre = it->second;
        if (auto it = params_.proxy_ref_override.find(name + ".modern");
            it != params_.proxy_ref_override.end())
            modern = it->second;
        const double denom = modern - pre;
        if (proxy_q_[g] != 0.0 && std::abs(denom) < 1e-12)
            throw std::runtime_error("engine: proxy " + name +
                                     " has equal pre/modern reference emissions");
        proxy_ref_pre_[g] = pre;
        proxy_inv_denom_[g] = std::abs(denom) < 1e-12 ? 0.0 : 1.0 / denom;
    }

    pool_decay_.clear();
    for (const auto& pool : params_.carbon_cycle)
        pool_decay_.push_back(pool.timescale_years <= 0.0 ? 1.0
                                                          : std::exp(-1.0 / pool.timescale_years));

    // Ocean column discretization.
    const int n = params_.n_ocean_layers;
    const double deep_depth = params_.ocean_depth_m - params_.mixed;
    if (deep_depth <= 0.0) throw std::runtime_error("engine: ocean depth must exceed mixed-layer depth");
    const double dz = deep_depth / static_cast<double>(n - 1);
    layer_cap_mixed_ = kOceanRhoCp * params_.mixed / kSecondsPerYear;
    layer_cap_deep_ = kOceanRhoCp * dz / kSecondsPerYear;
    const double kappa_si = params_.akapa * 1e-4;  // cm^2/s -> m^2/s
    g_deep_deep_ = kOceanRhoCp * kappa_si / dz;
    g_mixed_deep_ = params_.beto + kOceanRhoCp * kappa_si / (0.5 * (params_.mixed + dz));
    q_upwell_ = kOceanRhoCp * params_.w_up / kSecondsPerYear;
    couple_frac_ = params_.rlamdo / (params_.rlamdo + 1.0 / params_.lambda);

    // Forward Euler stability guard on the diffusive term.
    const double dt = 1.0 / static_cast<double>(params_.substeps_per_year);
    const double diffusion_number = kappa_si * kSecondsPerYear * dt / (dz * dz);
    if (diffusion_number > 0.5)
        throw std::runtime_error(
            "engine: unstable discretization (diffusion number > 0.5); increase substeps or reduce layers");

    carbon_pools_.assign(params_.carbon_cycle.size(), 0.0);
    conc_anom_.assign(n_gas, 0.0);
    ocean_temps_.assign(static_cast<std::size_t>(n), 0.0);

    for (int y = historical.start_year; y <= historical.end_year(); ++y)
        ingest_year(y, historical.row(y));
    year_ = historical.end_year();
}

void ClimateEngine::validate_emissions(const std::vector<double>& emissions) const {
    if (emissions.size() != registry_->size())
        throw std::runtime_error("engine: emission vector length != " +
                                 std::to_string(registry_->size()));
    for (double v : emissions) {
        if (!std::isfinite(v)) throw std::runtime_error("engine: non-finite emission");
        if (v < 0.0) throw std::runtime_error("engine: negative emission");
    }
}

double ClimateEngine::step(int year, const std::vector<double>& emissions) {
    if (year != year_ + 1)
        throw std::runtime_error("engine: out-of-order year " + std::to_string(year) +
                                 " (expected " + std::to_string(year_ + 1) + ")");
    return step(emissions);
}

double ClimateEngine::step(const std::vector<double>& emissions) {
    validate_emissions(emissions);
    ingest_year(year_ + 1, emissions);
    return last_temp_;
}

void ClimateEngine::ingest_year(int year, const std::vector<double>& emissions) {
    history_.push_back(emissions);
    update_concentrations(emissions);
    const double forcing = forcing_override_ ? *forcing_override_ : total_forcing();
    advance_energy_balance(forcing);
    year_ = year;
    last_temp_ = amplification() * ocean_temps_[0];
}

void ClimateEngine::update_concentrations(const std::vector<double>& emissions) {
    const double co2_emitted = emissions[0] + emissions[1];  // CO2_FF + CO2_AFOLU
    for (std::size_t k = 0; k < carbon_pools_.size(); ++k)
        carbon_pools_[k] = carbon_pools_[k] * pool_decay_[k] +
                           params_.carbon_cycle[k].fraction * co2_emitted * params_.co2_ppm_per_gtc;
    for (std::size_t g = 0; g < registry_->size(); ++g) {
        const Treatment t = registry_->at(g).treatment;
        if (t == Treatment::FixedLifetimeDecay || t == Treatment::MultiTauDecay)
            conc_anom_[g] = conc_anom_[g] * decay_factor_[g] + conc_per_unit_[g] * emissions[g];
    }
}

double ClimateEngine::co2_ppm() const {
    double ppm = params_.co2_preindustrial_ppm;
    for (double pool : carbon_pools_) ppm += pool;
    return ppm;
}

double ClimateEngine::total_forcing() const {
    if (history_.empty()) return 0.0;
    const std::vector<double>& emissions = history_.back();

    const double c = co2_ppm();
    const double c0 = params_.co2_preindustrial_ppm;
    double f = params_.co2_forcing_coeff * std::log(c / c0);

    const double m0 = params_.ch4_preindustrial_ppb;
    const double n0 = params_.n2o_preindustrial_ppb;
    const double m = m0 + conc_anom_[idx_ch4_];
    const double n = n0 + conc_anom_[idx_n2o_];
    const double mbar = 0.5 * (m + m0), nbar = 0.5 * (n + n0), cbar = 0.5 * (c + c0);
    f += (kA3 * mbar + kB3 * nbar + kD3) * (std::sqrt(m) - std::sqrt(m0));
    f += (kA2 * cbar + kB2 * nbar + kC2 * mbar + kD2) * (std::sqrt(n) - std::sqrt(n0));

    for (std::size_t g = 0; g < registry_->size(); ++g) {
        if (halo_eff_[g] != 0.0) f += halo_eff_[g] * conc_anom_[g];
        if (proxy_q_[g] != 0.0)
            f += proxy_q_[g] * (emissions[g] - proxy_ref_pre_[g]) * proxy_inv_denom_[g];
    }
    if (!std::isfinite(f)) throw std::runtime_error("engine: non-finite forcing");
    return f;
}

void ClimateEngine::advance_energy_balance(double forcing) {
    const int n = params_.n_ocean_layers;
    const double dt = 1.0 / static_cast<double>(params_.substeps_per_year);
    const double amp = amplification();
    const double lam_inv = 1.0 / params_.lambda;
    std::vector<double>& T = ocean_temps_;
    static thread_local std::vector<double> flux;
    flux.assign(static_cast<std::size_t>(n), 0.0);

    double storage_before = layer_cap_mixed_ * T[0];
    for (int k = 1; k < n; ++k) storage_before += layer_cap_deep_ * T[static_cast<std::size_t>(k)];

    double heat_in = 0.0;
    for (int s = 0; s < params_.substeps_per_year; ++s) {
        const double q_in = couple_frac_ * (forcing - amp * T[0] * lam_inv);
        heat_in += q_in * dt;

        for (int k = 0; k < n; ++k) flux[static_cast<std::size_t>(k)] = 0.0;
        flux[0] += q_in;
        // All ocean transports are in flux form, so they cancel pairwise and
        // the column conserves heat exactly up to rounding.
        double e = g_mixed_deep_ * (T[1] - T[0]);
        flux[0] += e;
        flux[1] -= e;
        for (int k = 1; k < n - 1; ++k) {
            e = g_deep_deep_ * (T[static_cast<std::size_t>(k + 1)] - T[static_cast<std::size_t>(k)]);
            flux[static_cast<std::size_t>(k)] += e;
            flux[static_cast<std::size_t>(k + 1)] -= e;
        }
        // Upwelling loop: water rises through the column and sinks again at
        // the surface temperature (closed circulation).
        for (int k = 0; k < n - 1; ++k) {
            const double adv = q_upwell_ * T[static_cast<std::size_t>(k + 1)];
            flux[static_cast<std::size_t>(k)] += adv;
            flux[static_cast<std::size_t>(k + 1)] -= adv;
        }
        flux[static_cast<std::size_t>(n - 1)] += q_upwell_ * T[0];
        flux[0] -= q_upwell_ * T[0];

        T[0] += dt * flux[0] / layer_cap_mixed_;
        for (int k = 1; k < n; ++k)
            T[static_cast<std::size_t>(k)] += dt * flux[static_cast<std::size_t>(k)] / layer_cap_deep_;
    }

    double storage_after = layer_cap_mixed_ * T[0];
    for (int k = 1; k < n; ++k) storage_after += layer_cap_deep_ * T[static_cast<std::size_t>(k)];
    last_heat_in_ = heat_in;
    last_storage_change_ = storage_after - storage_before;
}

std::string ClimateEngine::snapshot_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["year"] = year_;
    j["last_temp"] = last_temp_;
    j["carbon_pools"] = carbon_pools_;
    j["concentration_anomalies"] = conc_anom_;
    j["ocean_temps"] = ocean_temps_;
    j["registry_hash"] = registry_->hash();
    j["n_history_years"] = history_.size();
    return j.dump(2);
}

}  // namespace scmgame
