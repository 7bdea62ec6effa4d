#include "trajectory.hpp"

#include <cmath>
#include <stdexcept>

#include "csv.hpp"

namespace scmgame {

const std::vector<double>& EmissionTrajectory::row(int year) const {
    if (!covers(year)) throw std::runtime_error("trajectory: year out of range: " + std::to_string(year));
    return values[static_cast<std::size_t>(year - start_year)];
}

std::vector<double>& EmissionTrajectory::row(int year) {
    if (!covers(year)) throw std::runtime_error("trajectory: year out of range: " + std::to_string(year));
    return values[static_cast<std::size_t>(year - start_year)];
}

void EmissionTrajectory::validate(const SpeciesRegistry& registry) const {
    if (values.empty()) throw std::runtime_error("trajectory: empty");
    for (const auto& r : values) {
        if (r.size() != registry.size()) throw std::runtime_error("trajectory: wrong gas count");
        for (double v : r) {
            if (!std::isfinite(v)) throw std::runtime_error("trajectory: non-finite value");
            if (v < 0.0) throw std::runtime_error("trajectory: negative emission");
        }
    }
}

void EmissionTrajectory::save_csv(const std::string& path, const SpeciesRegistry& registry) const {
    csv::Table t;
    t.header.push_back("year");
    for (const auto& sp : registry.species()) t.header.push_back(sp.name);
    for (int i = 0; i < n_years(); ++i) {
        std::vector<std::string> row;
        row.push_back(std::to_string(start_year + i));
        for (double v : values[static_cast<std::size_t>(i)]) row.push_back(csv::format_double(v));
        t.rows.push_back(std::move(row));
    }
    csv::write_file(path, t);
}

EmissionTrajectory EmissionTrajectory::load_csv(const std::string& path,
                                                const SpeciesRegistry& registry,
                                                std::int64_t scenario_id) {
    auto t = csv::read_file(path);
    int c_year = t.column("year");
    if (c_year < 0) throw std::runtime_error("trajectory csv: missing year column");
    std::vector<int> cols;
    for (const auto& sp : registry.species()) {
        int c = t.column(sp.name);
        if (c < 0) throw std::runtime_error("trajectory csv: missing gas column " + sp.name);
        cols.push_back(c);
    }
    EmissionTrajectory traj;
    traj.scenario_id = scenario_id;
    int prev_year = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        int year = std::stoi(t.rows[i][static_cast<std::size_t>(c_year)]);
        if (i == 0)
            traj.start_year = year;
        else if (year != prev_year + 1)
            throw std::runtime_error("trajectory csv: non-contiguous years");
        prev_year = year;
        std::vector<double> row(cols.size());
        for (std::size_t g = 0; g < cols.size(); ++g)
            row[g] = std::stod(t.rows[i][static_cast<std::size_t>(cols[g])]);
        traj.values.push_back(std::move(row));
    }
    traj.validate(registry);
    return traj;
}

EmissionTrajectory EmissionTrajectory::slice(int from, int to) const {
    if (from < start_year || to > end_year() || from > to)
        throw std::runtime_error("trajectory: bad slice range");
    EmissionTrajectory out;
    out.scenario_id = scenario_id;
    out.start_year = from;
    for (int y = from; y <= to; ++y) out.values.push_back(row(y));
    return out;
}

}  // namespace scmgame
