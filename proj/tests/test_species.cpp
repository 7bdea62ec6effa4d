#include "doctest.h"

#include <cstdio>
#include <stdexcept>

#include "species.hpp"

using namespace scmgame;

TEST_CASE("default registry has 40 species and 5 controllables") {
    auto reg = default_registry();
    CHECK(reg.size() == 40);
    CHECK(reg.n_controllable() == 5);
    CHECK(reg.index_of("CO2_FF") == 0);
    CHECK(reg.index_of("CO2_AFOLU") == 1);
    CHECK(reg.index_of("CH4") == 2);
    CHECK(reg.index_of("N2O") == 3);
    CHECK(reg.index_of("SO2") == 4);
    // Stable ordering on every call.
    CHECK(default_registry().index_of("CO2_FF") == 0);
}

TEST_CASE("controllable mask has exactly 5 true entries") {
    auto reg = default_registry();
    auto mask = reg.controllable_mask();
    CHECK(mask.size() == 40);
    int n_true = 0;
    for (bool b : mask) n_true += b ? 1 : 0;
    CHECK(n_true == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(mask[i]);
}

TEST_CASE("empty controllable set gives an all-false mask") {
    auto reg = default_registry();
    SpeciesRegistry no_ctrl(reg.species(), {});
    auto mask = no_ctrl.controllable_mask();
    for (bool b : mask) CHECK_FALSE(b);
}

TEST_CASE("project then scatter preserves controllable entries") {
    auto reg = default_registry();
    std::vector<double> full(reg.size());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = 0.5 * static_cast<double>(i) + 1.0;
    auto ctrl = reg.project_controllable(full);
    CHECK(ctrl.size() == 5);
    auto back = reg.scatter_controllable(ctrl);
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (i < 5)
            CHECK(back[i] == full[i]);
        else
            CHECK(back[i] == 0.0);
    }
}

TEST_CASE("registry round-trips through CSV bit-exactly") {
    auto reg = default_registry();
    auto text = reg.to_csv();
    auto back = SpeciesRegistry::from_csv(text, default_controllable_names());
    CHECK(back.to_csv() == text);
    CHECK(back.hash() == reg.hash());
    CHECK(back.size() == reg.size());
    for (std::size_t i = 0; i < reg.size(); ++i) {
        CHECK(back.at(i).name == reg.at(i).name);
        CHECK(back.at(i).treatment == reg.at(i).treatment);
        CHECK(back.at(i).lifetime_years == reg.at(i).lifetime_years);
    }
}

TEST_CASE("registry round-trips through a file") {
    auto reg = default_registry();
    std::string path = "/tmp/scmgame_species_test.csv";
    reg.save_csv(path);
    auto back = SpeciesRegistry::load_csv(path, default_controllable_names());
    CHECK(back.hash() == reg.hash());
    std::remove(path.c_str());
}

TEST_CASE("treatment invariants are enforced") {
    // Carbon-cycle treatment is CO2-only.
    std::vector<Species> bad = default_registry().species();
    bad[2].treatment = Treatment::CarbonCycle;  // CH4
    CHECK_THROWS_AS(SpeciesRegistry(bad, default_controllable_names()), std::runtime_error);

    // Proxies carry no lifetime.
    auto bad2 = default_registry().species();
    auto reg = default_registry();
    bad2[reg.index_of("SO2")].lifetime_years = 5.0;
    CHECK_THROWS_AS(SpeciesRegistry(bad2, default_controllable_names()), std::runtime_error);

    // Decay gases need a positive lifetime.
    auto bad3 = default_registry().species();
    bad3[reg.index_of("N2O")].lifetime_years.reset();
    CHECK_THROWS_AS(SpeciesRegistry(bad3, default_controllable_names()), std::runtime_error);
}

TEST_CASE("unknown controllable name is rejected") {
    CHECK_THROWS_AS(SpeciesRegistry(default_registry().species(), {"XYZ"}), std::runtime_error);
}

TEST_CASE("enum string conversions round-trip") {
    for (auto t : {Treatment::CarbonCycle, Treatment::FixedLifetimeDecay, Treatment::MultiTauDecay,
                   Treatment::LinearForcingProxy})
        CHECK(treatment_from_string(to_string(t)) == t);
    for (auto s : {ForcingSign::Warming, ForcingSign::Cooling, ForcingSign::Mixed})
        CHECK(forcing_sign_from_string(to_string(s)) == s);
}
