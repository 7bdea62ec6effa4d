#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "species.hpp"
#include "trajectory.hpp"

namespace scmgame {

// One (fraction, timescale) pool of the impulse-response carbon cycle.
// timescale_years <= 0 marks the permanent (infinite-lifetime) fraction.
struct CarbonPoolSpec {
    double fraction = 0.0;
    double timescale_years = 0.0;
};

struct EngineParams {
    // Climate response (Table-style names kept for auditability).
    double rlamdo = 15.0836;   // air-sea heat exchange [W m^-2 K^-1]
    double akapa = 0.6568;     // vertical heat diffusivity [cm^2 s^-1]
    double cpi = 0.2077;       // polar amplification factor
    double w_up = 2.2059;      // upwelling velocity [m yr^-1]
    double beto = 6.8982;      // mixed-layer / deep-ocean exchange [W m^-2 K^-1]
    double lambda = 0.6063;    // climate sensitivity [K W^-1 m^2]
    double mixed = 107.2422;   // mixed-layer depth [m]

    // Emissions-to-forcing coefficients [W m^-2 at the modern reference].
    double qbmb = 0.0;
    double qo3 = 0.5;
    double qdirso2 = -0.3562;
    double qindso2 = -0.9661;
    double qbc = 0.1566;
    double qoc = -0.0806;

    // Discretization.
    int n_ocean_layers = 40;
    int substeps_per_year = 12;
    double ocean_depth_m = 1000.0;

    // Carbon cycle: impulse response with one permanent fraction.
    std::vector<CarbonPoolSpec> carbon_cycle = {
        {0.2173, 0.0}, {0.2240, 394.4}, {0.2824, 36.54}, {0.2763, 4.304}};
    double co2_ppm_per_gtc = 1.0 / 2.123;
    double co2_preindustrial_ppm = 278.0;
    double co2_forcing_coeff = 5.35;  // F = coeff * ln(C/C0)

    // CH4 / N2O decay gases (concentrations as anomalies over preindustrial).
    double ch4_preindustrial_ppb = 722.0;
    double ch4_ppb_per_unit = 0.352;       // ppb per Tg CH4
    double ch4_lifetime_adjust = 1.0;      // scales the registry's effective lifetime
    double n2o_preindustrial_ppb = 270.0;
    double n2o_ppb_per_unit = 0.2087;      // ppb per unit emission

    // Halocarbons: emission -> concentration conversion and linear radiative
    // efficiency per species (data, not code; overridable via config file).
    double halo_default_ppt_per_unit = 0.005;
    std::map<std::string, double> halo_efficiency_w_per_ppt;  // filled with defaults if empty
    std::map<std::string, double> halo_ppt_per_unit_override;

    // Linear forcing proxies: per-species q at the modern reference level.
    // Defaults derived from the named coefficients above in ClimateEngine.
    std::map<std::string, double> proxy_q_override;
    // Optional explicit normalization references (otherwise first/last
    // historical year). Keys "<name>.pre" and "<name>.modern".
    std::map<std::string, double> proxy_ref_override;

    static EngineParams from_config_file(const std::string& path);
    static EngineParams from_config_text(const std::string& text);
};

// Default per-species radiative efficiencies [W m^-2 ppt^-1].
const std::map<std::string, double>& default_halo_efficiencies();

// Structure-faithful reduced simple climate model: impulse-response carbon
// cycle, exponential decay for other GHGs, linear forcing proxies, and an
// upwelling-diffusion ocean column stepped by forward Euler with sub-annual
// substeps. Deterministic; value semantics (copy = independent clone).
class ClimateEngine {
  public:
    ClimateEngine(const EngineParams& params, const SpeciesRegistry& registry,
                  const EmissionTrajectory& historical);

    // Advances one year. `year` must be current year + 1.
    double step(int year, const std::vector<double>& emissions);
    double step(const std::vector<double>& emissions);

    int year() const { return year_; }
    double last_temp() const { return last_temp_; }
    ClimateEngine clone() const { return *this; }

    // Forcing implied by the current concentrations / latest emissions.
    double total_forcing() const;

    // Test hook: when set, the energy balance sees this constant forcing
    // instead of the computed one.
    void set_forcing_override(std::optional<double> f) { forcing_override_ = f; }

    const std::vector<double>& ocean_temps() const { return ocean_temps_; }
    const std::vector<double>& carbon_pools() const { return carbon_pools_; }
    // Decay-gas concentration anomalies, indexed by gas.
    const std::vector<double>& concentration_anomalies() const { return conc_anom_; }
    double co2_ppm() const;
    const std::vector<std::vector<double>>& history() const { return history_; }
    const EngineParams& params() const { return params_; }

    // Heat budget of the latest step: storage change and boundary heat input
    // in W yr m^-2. Their difference is the scheme's budget residual.
    double last_step_heat_in() const { return last_heat_in_; }
    double last_step_storage_change() const { return last_storage_change_; }

    std::string snapshot_json() const;

    // Temperature anomalies reported by the engine are the surface-layer
    // anomaly scaled by (1 + cpi).
    double amplification() const { return 1.0 + params_.cpi; }

  private:
    void ingest_year(int year, const std::vector<double>& emissions);
    void update_concentrations(const std::vector<double>& emissions);
    void advance_energy_balance(double forcing);
    void validate_emissions(const std::vector<double>& emissions) const;

    EngineParams params_;
    const SpeciesRegistry* registry_;  // registries are immutable and shared

    int year_ = 0;
    double last_temp_ = 0.0;

    std::vector<double> carbon_pools_;   // ppm per pool
    std::vector<double> conc_anom_;      // per gas; decay gases only are meaningful
    std::vector<double> ocean_temps_;    // layer anomalies [K]
    std::vector<std::vector<double>> history_;

    // Derived constants (built once in the constructor).
    std::vector<double> decay_factor_;   // exp(-1/tau) per gas (1.0 if not a decay gas)
    std::vector<double> conc_per_unit_;  // emission -> concentration conversion per gas
    std::vector<double> halo_eff_;       // W m^-2 per concentration unit (0 for non-halocarbons)
    std::vector<double> proxy_q_;        // per gas (0 for non-proxies)
    std::vector<double> proxy_ref_pre_;
    std::vector<double> proxy_inv_denom_;  // 1 / (modern - pre)
    std::vector<double> pool_decay_;
    std::size_t idx_ch4_ = 0, idx_n2o_ = 0;

    // Ocean discretization.
    double layer_cap_mixed_ = 0.0;           // W yr m^-2 K^-1
    double layer_cap_deep_ = 0.0;
    double g_mixed_deep_ = 0.0;              // W m^-2 K^-1
    double g_deep_deep_ = 0.0;
    double q_upwell_ = 0.0;                  // W m^-2 K^-1
    double couple_frac_ = 0.0;               // rlamdo / (rlamdo + 1/lambda)

    double last_heat_in_ = 0.0;
    double last_storage_change_ = 0.0;
    std::optional<double> forcing_override_;
};

}  // namespace scmgame
