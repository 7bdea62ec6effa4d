#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scmgame {

enum class SpeciesClass {
    LongLivedGHG,
    VeryLongLivedGHG,
    ShortLivedGHG,
    AerosolPrecursor,
    OzonePrecursor,
};

enum class Treatment {
    CarbonCycle,        // CO2 only: impulse-response pool model
    FixedLifetimeDecay, // single exponential decay of the concentration anomaly
    MultiTauDecay,      // CH4: realized as one effective lifetime (configurable)
    LinearForcingProxy, // forcing proportional to normalized emission level
};

enum class ForcingSign { Warming, Cooling, Mixed };

struct Species {
    std::string name;
    SpeciesClass cls = SpeciesClass::LongLivedGHG;
    Treatment treatment = Treatment::FixedLifetimeDecay;
    std::optional<double> lifetime_years;  // none for carbon-cycle and proxy species
    ForcingSign sign = ForcingSign::Warming;
};

// The gas universe. Ordering is stable and defines the vector layout used by
// every downstream module (trajectories, engine, dataset, game state).
class SpeciesRegistry {
  public:
    SpeciesRegistry(std::vector<Species> species, std::vector<std::string> controllable_names);

    std::size_t size() const { return species_.size(); }
    const Species& at(std::size_t i) const { return species_[i]; }
    const std::vector<Species>& species() const { return species_; }

    // Index in the full gas ordering; throws on unknown name.
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const;

    const std::vector<std::size_t>& controllable_indices() const { return controllable_; }
    std::size_t n_controllable() const { return controllable_.size(); }
    std::vector<bool> controllable_mask() const;

    // Gather the controllable entries of a full-length vector.
    std::vector<double> project_controllable(const std::vector<double>& full) const;
    // Scatter a controllable-length vector into a full-length vector, zeros elsewhere.
    std::vector<double> scatter_controllable(const std::vector<double>& ctrl) const;

    // FNV-1a over the canonical CSV serialization; used to tie datasets and
    // checkpoints to the registry they were built against.
    std::uint64_t hash() const;

    std::string to_csv() const;
    static SpeciesRegistry from_csv(const std::string& text,
                                    std::vector<std::string> controllable_names);
    void save_csv(const std::string& path) const;
    static SpeciesRegistry load_csv(const std::string& path,
                                    std::vector<std::string> controllable_names);

  private:
    std::vector<Species> species_;
    std::vector<std::size_t> controllable_;
};

// The 40-gas universe with the five controllable gases
// (CO2_FF, CO2_AFOLU, CH4, N2O, SO2) first in the ordering.
SpeciesRegistry default_registry();

const std::vector<std::string>& default_controllable_names();

std::string to_string(SpeciesClass c);
std::string to_string(Treatment t);
std::string to_string(ForcingSign s);
SpeciesClass species_class_from_string(const std::string& s);
Treatment treatment_from_string(const std::string& s);
ForcingSign forcing_sign_from_string(const std::string& s);

}  // namespace scmgame
