#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "consistency.hpp"
#include "engine.hpp"
#include "env.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "species.hpp"

using namespace scmgame;

namespace {

// O(n^2) pair-counting tau-b used as the oracle for the merge-sort version.
std::optional<double> tau_brute(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) ++tie_x;
            else if (dy == 0.0) ++tie_y;
            else if (dx * dy > 0.0) ++concordant;
            else ++discordant;
        }
    const double da = concordant + discordant + tie_x;
    const double db = concordant + discordant + tie_y;
    if (da == 0.0 || db == 0.0) return std::nullopt;
    return (concordant - discordant) / std::sqrt(da * db);
}

const SpeciesRegistry& reg() {
    static SpeciesRegistry r = default_registry();
    return r;
}

const EmissionTrajectory& baseline() {
    static EmissionTrajectory b = synthetic_baseline(7, reg(), 1900, 2075);
    return b;
}

// A full scenario-(i) episode on the real simulator with scripted actions.
EpisodeRecord make_sim_record(int energy_level) {
    auto hist = baseline().slice(1900, 2015);
    ClimateGameEnv env(ScenarioSpec::scenario_i(), reg(), baseline(), [&] {
        return std::make_unique<SimulatorBackend>(EngineParams{}, reg(), hist);
    });
    env.reset();
    std::vector<AgentAction> acts(4);
    for (auto& a : acts) a.energy = energy_level;
    for (int y = 2016; y <= 2050; ++y) env.step(acts);
    return env.record();
}

}  // namespace

TEST_CASE("sampling the whole set returns every index once, shuffled") {
    auto idx = sample_indices(20, 20, 5);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    CHECK(unique.size() == 20);
    CHECK(*unique.begin() == 0);
    CHECK(*unique.rbegin() == 19);
    std::vector<std::size_t> sorted(idx);
    std::sort(sorted.begin(), sorted.end());
    CHECK(idx != sorted);  // shuffled order, not identity (true for this seed)
}

TEST_CASE("degenerate sample sizes are rejected") {
    CHECK_THROWS_AS(sample_indices(10, 0, 1), std::runtime_error);
    CHECK_THROWS_AS(sample_indices(10, 11, 1), std::runtime_error);
}

TEST_CASE("sampling is deterministic in the seed and free of replacement") {
    auto a = sample_indices(100, 30, 9);
    auto b = sample_indices(100, 30, 9);
    auto c = sample_indices(100, 30, 10);
    CHECK(a == b);
    CHECK(a != c);
    std::set<std::size_t> unique(a.begin(), a.end());
    CHECK(unique.size() == 30);
}

TEST_CASE("trace RMSE basics") {
    CHECK(trace_rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(trace_rmse({1.0, 2.0}, {1.5, 2.5}) == doctest::Approx(0.5));
    CHECK(trace_rmse({1.0, 2.0}, {1.0, 4.0}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(trace_rmse({1.0, 2.0}, {2.0, 1.0}) == trace_rmse({2.0, 1.0}, {1.0, 2.0}));
    CHECK_THROWS_AS(trace_rmse({1.0}, {1.0, 2.0}), std::runtime_error);
}

TEST_CASE("discounted temperature return") {
    CHECK(discounted_temperature_return({1.0, 1.0}, 0.999) == doctest::Approx(-1.999));
    CHECK(discounted_temperature_return({0.0, 0.0, 0.0}, 0.9) == 0.0);
    CHECK(discounted_temperature_return({2.5, 100.0}, 0.0) == doctest::Approx(-2.5));
}

TEST_CASE("kendall tau on clean orderings") {
    std::vector<double> x = {0.1, 0.7, 0.3, 0.9, 0.5};
    std::vector<double> rev(x.rbegin(), x.rend());
    CHECK(*kendall_tau(x, x) == doctest::Approx(1.0));
    CHECK(*kendall_tau(x, rev) == doctest::Approx(*tau_brute(x, rev)));
    std::vector<double> neg = x;
    for (double& v : neg) v = -v;
    CHECK(*kendall_tau(x, neg) == doctest::Approx(-1.0));
}

TEST_CASE("kendall tau worked example: one discordant pair out of three") {
    std::vector<double> x = {3.0, 1.0, 2.0};
    std::vector<double> y = {3.0, 2.0, 1.0};
    CHECK(*kendall_tau(x, y) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("fully tied input has no defined tau") {
    CHECK_FALSE(kendall_tau({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}).has_value());
    CHECK_FALSE(kendall_tau({1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}).has_value());
}

TEST_CASE("merge-sort tau matches brute-force pair counting, ties included") {
    rng::Stream s(77);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(s.next_below(60));
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse grid forces plenty of ties.
            x[i] = static_cast<double>(s.next_below(8));
            y[i] = static_cast<double>(s.next_below(8));
        }
        auto fast = kendall_tau(x, y);
        auto slow = tau_brute(x, y);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) {
            CHECK(*fast == doctest::Approx(*slow).epsilon(1e-12));
            CHECK(*fast >= -1.0 - 1e-12);
            CHECK(*fast <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("tau is invariant under strictly increasing transforms") {
    rng::Stream s(11);
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < 25; ++i) {
        x[i] = s.next_uniform(-2.0, 2.0);
        y[i] = s.next_uniform(-2.0, 2.0);
    }
    auto base = *kendall_tau(x, y);
    std::vector<double> xt = x, yt = y;
    for (double& v : xt) v = std::exp(v);
    for (double& v : yt) v = 3.0 * v + 10.0;
    CHECK(*kendall_tau(xt, yt) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("replaying a simulator-produced record reproduces its trace bit-exactly") {
    EpisodeRecord rec = make_sim_record(0);
    REQUIRE(rec.temps.size() == 50);
    auto hist = baseline().slice(1900, 2015);
    auto trace = replay(rec, EngineParams{}, reg(), hist);
    REQUIRE(trace.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(trace[i] == rec.temps[i]);
}

TEST_CASE("replay is deterministic and never mutates the stored record") {
    EpisodeRecord rec = make_sim_record(2);
    const std::string before = rec.to_json();
    auto hist = baseline().slice(1900, 2015);
    auto t1 = replay(rec, EngineParams{}, reg(), hist);
    auto t2 = replay(rec, EngineParams{}, reg(), hist);
    CHECK(t1 == t2);
    CHECK(rec.to_json() == before);
}

TEST_CASE("replay rejects a history that does not abut the record") {
    EpisodeRecord rec = make_sim_record(0);
    auto hist = baseline().slice(1900, 2014);
    CHECK_THROWS_AS(replay(rec, EngineParams{}, reg(), hist), std::runtime_error);
}

TEST_CASE("report over self-consistent records has zero RMSE and tau one") {
    // Records from the simulator replayed through the same simulator: the
    // stored and replayed traces coincide, mimicking a perfect surrogate.
    std::vector<EpisodeRecord> records;
    for (int lvl = 0; lvl < 3; ++lvl) records.push_back(make_sim_record(lvl));
    auto samples = sample_trajectories(records, 3, 21);
    auto hist = baseline().slice(1900, 2015);
    for (auto& s : samples) s.replay_temps = replay(s.record, EngineParams{}, reg(), hist);
    auto report = build_report(samples, 0.999, 21);
    CHECK(report.pooled_rmse == 0.0);
    for (double r : report.per_trajectory_rmse) CHECK(r == 0.0);
    REQUIRE(report.tau.has_value());
    CHECK(*report.tau == doctest::Approx(1.0));
    // Different effort levels leave distinct fingerprints in the returns.
    // (The ordering is not monotone in effort: the energy lever also cuts
    // SO2, whose aerosol cooling partially offsets the CO2 reduction.)
    std::set<double> distinct(report.returns_sim.begin(), report.returns_sim.end());
    CHECK(distinct.size() == 3);
    CHECK(report.returns_net == report.returns_sim);
}

TEST_CASE("pooled RMSE and tau are invariant to sample order") {
    std::vector<EpisodeRecord> records;
    for (int lvl = 0; lvl < 3; ++lvl) records.push_back(make_sim_record(lvl));
    auto hist = baseline().slice(1900, 2015);
    auto build = [&](const std::vector<std::size_t>& order) {
        std::vector<ReplaySample> samples;
        for (std::size_t idx : order) {
            ReplaySample s;
            s.index = idx;
            s.record = records[idx];
            s.replay_temps = replay(s.record, EngineParams{}, reg(), hist);
            // Perturb stored traces deterministically so RMSE is nonzero.
            for (std::size_t t = 0; t < s.record.temps.size(); ++t)
                s.record.temps[t] += 1e-3 * std::sin(static_cast<double>(idx + t));
            samples.push_back(std::move(s));
        }
        return build_report(samples, 0.999, 0);
    };
    auto a = build({0, 1, 2});
    auto b = build({2, 0, 1});
    CHECK(a.pooled_rmse == doctest::Approx(b.pooled_rmse).epsilon(1e-15));
    REQUIRE(a.tau.has_value());
    REQUIRE(b.tau.has_value());
    CHECK(*a.tau == *b.tau);
}

TEST_CASE("report JSON and CSV artifacts carry the full sample") {
    std::vector<EpisodeRecord> records = {make_sim_record(0), make_sim_record(2)};
    auto samples = sample_trajectories(records, 2, 4);
    auto hist = baseline().slice(1900, 2015);
    for (auto& s : samples) s.replay_temps = replay(s.record, EngineParams{}, reg(), hist);
    auto report = build_report(samples, 0.999, 4);
    const std::string j = report.to_json();
    CHECK(j.find("consistency-report-v1") != std::string::npos);
    CHECK(j.find("pooled_rmse") != std::string::npos);
    const std::string path = "/tmp/consistency_report_test.csv";
    report.save_csv(path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "trajectory,rmse,return_net,return_sim");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 2);
}
