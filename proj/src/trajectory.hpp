#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "species.hpp"

namespace scmgame {

// Per-year, per-gas emissions in species-native units. Rows are years
// (contiguous), columns follow the registry ordering.
struct EmissionTrajectory {
    std::int64_t scenario_id = 0;  // 0 = baseline
    int start_year = 0;
    std::vector<std::vector<double>> values;  // [year][gas]

    int end_year() const { return start_year + static_cast<int>(values.size()) - 1; }
    int n_years() const { return static_cast<int>(values.size()); }
    bool covers(int year) const { return year >= start_year && year <= end_year(); }

    const std::vector<double>& row(int year) const;
    std::vector<double>& row(int year);

    // Throws if any value is non-finite or negative, or the shape is wrong.
    void validate(const SpeciesRegistry& registry) const;

    // CSV layout: a "year" column followed by one column per gas, in registry
    // order with registry names as headers.
    void save_csv(const std::string& path, const SpeciesRegistry& registry) const;
    static EmissionTrajectory load_csv(const std::string& path, const SpeciesRegistry& registry,
                                       std::int64_t scenario_id = 0);

    // Restrict to [from, to] inclusive.
    EmissionTrajectory slice(int from, int to) const;
};

}  // namespace scmgame
