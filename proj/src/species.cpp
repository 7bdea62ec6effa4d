#include "species.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"

namespace scmgame {

std::string to_string(SpeciesClass c) {
    switch (c) {
        case SpeciesClass::LongLivedGHG: return "long-lived GHG";
        case SpeciesClass::VeryLongLivedGHG: return "very-long-lived GHG";
        case SpeciesClass::ShortLivedGHG: return "short-lived GHG";
        case SpeciesClass::AerosolPrecursor: return "aerosol precursor";
        case SpeciesClass::OzonePrecursor: return "ozone precursor";
    }
    return "?";
}

std::string to_string(Treatment t) {
    switch (t) {
        case Treatment::CarbonCycle: return "carbon-cycle";
        case Treatment::FixedLifetimeDecay: return "fixed-lifetime-decay";
        case Treatment::MultiTauDecay: return "multi-tau-decay";
        case Treatment::LinearForcingProxy: return "linear-forcing-proxy";
    }
    return "?";
}

std::string to_string(ForcingSign s) {
    switch (s) {
        case ForcingSign::Warming: return "warming";
        case ForcingSign::Cooling: return "cooling";
        case ForcingSign::Mixed: return "mixed";
    }
    return "?";
}

SpeciesClass species_class_from_string(const std::string& s) {
    if (s == "long-lived GHG") return SpeciesClass::LongLivedGHG;
    if (s == "very-long-lived GHG") return SpeciesClass::VeryLongLivedGHG;
    if (s == "short-lived GHG") return SpeciesClass::ShortLivedGHG;
    if (s == "aerosol precursor") return SpeciesClass::AerosolPrecursor;
    if (s == "ozone precursor") return SpeciesClass::OzonePrecursor;
    throw std::runtime_error("unknown species class: " + s);
}

Treatment treatment_from_string(const std::string& s) {
    if (s == "carbon-cycle") return Treatment::CarbonCycle;
    if (s == "fixed-lifetime-decay") return Treatment::FixedLifetimeDecay;
    if (s == "multi-tau-decay") return Treatment::MultiTauDecay;
    if (s == "linear-forcing-proxy") return Treatment::LinearForcingProxy;
    throw std::runtime_error("unknown treatment: " + s);
}

ForcingSign forcing_sign_from_string(const std::string& s) {
    if (s == "warming") return ForcingSign::Warming;
    if (s == "cooling") return ForcingSign::Cooling;
    if (s == "mixed") return ForcingSign::Mixed;
    throw std::runtime_error("unknown forcing sign: " + s);
}

static void validate_species(const Species& sp) {
    const bool has_lifetime = sp.lifetime_years.has_value();
    switch (sp.treatment) {
        case Treatment::CarbonCycle:
            if (sp.name != "CO2_FF" && sp.name != "CO2_AFOLU")
                throw std::runtime_error("carbon-cycle treatment is reserved for CO2 species: " + sp.name);
            if (has_lifetime) throw std::runtime_error("carbon-cycle species has no single lifetime: " + sp.name);
            break;
        case Treatment::LinearForcingProxy:
            if (has_lifetime) throw std::runtime_error("proxy species has no lifetime: " + sp.name);
            break;
        case Treatment::FixedLifetimeDecay:
        case Treatment::MultiTauDecay:
            if (!has_lifetime || *sp.lifetime_years <= 0.0)
                throw std::runtime_error("decay species needs a positive lifetime: " + sp.name);
            break;
    }
}

SpeciesRegistry::SpeciesRegistry(std::vector<Species> species,
                                 std::vector<std::string> controllable_names)
    : species_(std::move(species)) {
    for (const auto& sp : species_) validate_species(sp);
    for (const auto& name : controllable_names) controllable_.push_back(index_of(name));
}

std::size_t SpeciesRegistry::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < species_.size(); ++i)
        if (species_[i].name == name) return i;
    throw std::runtime_error("unknown species: " + name);
}

bool SpeciesRegistry::contains(const std::string& name) const {
    for (const auto& sp : species_)
        if (sp.name == name) return true;
    return false;
}

std::vector<bool> SpeciesRegistry::controllable_mask() const {
    std::vector<bool> mask(species_.size(), false);
    for (std::size_t i : controllable_) mask[i] = true;
    return mask;
}

std::vector<double> SpeciesRegistry::project_controllable(const std::vector<double>& full) const {
    if (full.size() != species_.size()) throw std::runtime_error("project: bad vector length");
    std::vector<double> out(controllable_.size());
    for (std::size_t k = 0; k < controllable_.size(); ++k) out[k] = full[controllable_[k]];
    return out;
}

std::vector<double> SpeciesRegistry::scatter_controllable(const std::vector<double>& ctrl) const {
    if (ctrl.size() != controllable_.size()) throw std::runtime_error("scatter: bad vector length");
    std::vector<double> out(species_.size(), 0.0);
    for (std::size_t k = 0; k < controllable_.size(); ++k) out[controllable_[k]] = ctrl[k];
    return out;
}

std::string SpeciesRegistry::to_csv() const {
    std::ostringstream out;
    out << "name,class,treatment,lifetime_years,forcing_sign\n";
    for (const auto& sp : species_) {
        out << sp.name << "," << to_string(sp.cls) << "," << to_string(sp.treatment) << ",";
        if (sp.lifetime_years) out << csv::format_double(*sp.lifetime_years);
        out << "," << to_string(sp.sign) << "\n";
    }
    return out.str();
}

SpeciesRegistry SpeciesRegistry::from_csv(const std::string& text,
                                          std::vector<std::string> controllable_names) {
    auto table = csv::parse(text);
    const int c_name = table.column("name"), c_cls = table.column("class"),
              c_tr = table.column("treatment"), c_lt = table.column("lifetime_years"),
              c_sg = table.column("forcing_sign");
    if (c_name < 0 || c_cls < 0 || c_tr < 0 || c_lt < 0 || c_sg < 0)
        throw std::runtime_error("species csv: missing required column");
    std::vector<Species> species;
    for (const auto& row : table.rows) {
        Species sp;
        sp.name = row[c_name];
        sp.cls = species_class_from_string(row[c_cls]);
        sp.treatment = treatment_from_string(row[c_tr]);
        if (!row[c_lt].empty()) sp.lifetime_years = std::stod(row[c_lt]);
        sp.sign = forcing_sign_from_string(row[c_sg]);
        species.push_back(std::move(sp));
    }
    return SpeciesRegistry(std::move(species), std::move(controllable_names));
}

void SpeciesRegistry::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_csv();
}

SpeciesRegistry SpeciesRegistry::load_csv(const std::string& path,
                                          std::vector<std::string> controllable_names) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_csv(buf.str(), std::move(controllable_names));
}

std::uint64_t SpeciesRegistry::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : to_csv()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

const std::vector<std::string>& default_controllable_names() {
    static const std::vector<std::string> names = {"CO2_FF", "CO2_AFOLU", "CH4", "N2O", "SO2"};
    return names;
}

SpeciesRegistry default_registry() {
    using C = SpeciesClass;
    using T = Treatment;
    using F = ForcingSign;
    auto decay = [](std::string name, C cls, double tau) {
        return Species{std::move(name), cls, T::FixedLifetimeDecay, tau, F::Warming};
    };
    auto proxy = [](std::string name, C cls, F sign) {
        return Species{std::move(name), cls, T::LinearForcingProxy, std::nullopt, sign};
    };
    std::vector<Species> s;
    s.push_back({"CO2_FF", C::LongLivedGHG, T::CarbonCycle, std::nullopt, F::Warming});
    s.push_back({"CO2_AFOLU", C::LongLivedGHG, T::CarbonCycle, std::nullopt, F::Warming});
    // CH4 multi-tau decay is collapsed to one effective lifetime; the engine
    // exposes an adjustment factor on top of this value.
    s.push_back({"CH4", C::ShortLivedGHG, T::MultiTauDecay, 9.3, F::Warming});
    s.push_back(decay("N2O", C::LongLivedGHG, 121.0));
    s.push_back(proxy("SO2", C::AerosolPrecursor, F::Cooling));
    s.push_back(decay("CFC-11", C::LongLivedGHG, 52.0));
    s.push_back(decay("CFC-12", C::LongLivedGHG, 102.0));
    s.push_back(decay("CFC-113", C::LongLivedGHG, 93.0));
    s.push_back(decay("CFC-114", C::LongLivedGHG, 189.0));
    s.push_back(decay("CFC-115", C::VeryLongLivedGHG, 540.0));
    s.push_back(decay("CH3Br", C::ShortLivedGHG, 0.8));
    s.push_back(decay("CCl4", C::LongLivedGHG, 32.0));
    s.push_back(decay("CH3CCl3", C::ShortLivedGHG, 5.0));
    s.push_back(decay("HCFC-22", C::LongLivedGHG, 11.9));
    s.push_back(decay("HCFC-141b", C::ShortLivedGHG, 9.4));
    s.push_back(decay("HCFC-123", C::ShortLivedGHG, 1.3));
    s.push_back(decay("HCFC-142b", C::LongLivedGHG, 18.0));
    s.push_back(decay("H-1211", C::LongLivedGHG, 16.0));
    s.push_back(decay("H-1301", C::LongLivedGHG, 72.0));
    s.push_back(decay("H-2402", C::LongLivedGHG, 28.0));
    s.push_back(decay("HFC-125", C::LongLivedGHG, 30.0));
    s.push_back(decay("HFC-134a", C::LongLivedGHG, 14.0));
    s.push_back(decay("HFC-143a", C::LongLivedGHG, 51.0));
    s.push_back(decay("HFC-227ea", C::LongLivedGHG, 36.0));
    s.push_back(decay("HFC-23", C::VeryLongLivedGHG, 228.0));
    s.push_back(decay("HFC-245fa", C::ShortLivedGHG, 7.9));
    s.push_back(decay("HFC-32", C::ShortLivedGHG, 5.4));
    s.push_back(decay("HFC-4310mee", C::LongLivedGHG, 17.0));
    s.push_back(decay("C2F6", C::VeryLongLivedGHG, 10000.0));
    s.push_back(decay("C6F14", C::VeryLongLivedGHG, 3100.0));
    s.push_back(decay("CF4", C::VeryLongLivedGHG, 50000.0));
    s.push_back(decay("SF6", C::VeryLongLivedGHG, 3200.0));
    s.push_back(proxy("NOx", C::OzonePrecursor, F::Mixed));
    s.push_back(proxy("CO", C::OzonePrecursor, F::Warming));
    s.push_back(proxy("NMVOC", C::OzonePrecursor, F::Mixed));
    s.push_back(proxy("NH3", C::AerosolPrecursor, F::Cooling));
    s.push_back(proxy("BMB_AEROS_BC", C::AerosolPrecursor, F::Warming));
    s.push_back(proxy("BMB_AEROS_OC", C::AerosolPrecursor, F::Cooling));
    s.push_back(proxy("BC", C::AerosolPrecursor, F::Warming));
    s.push_back(proxy("OC", C::AerosolPrecursor, F::Cooling));
    return SpeciesRegistry(std::move(s), default_controllable_names());
}

}  // namespace scmgame
