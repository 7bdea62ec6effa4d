#include "doctest.h"

#include <cstdio>
#include <set>

#include "dataset.hpp"
#include "scenario.hpp"
#include "species.hpp"

using namespace scmgame;

namespace {

// A linear fake temperature trace keyed to the scenario id so targets differ
// across scenarios without running the engine.
std::vector<double> fake_temps(std::int64_t id, int n_years) {
    std::vector<double> t(static_cast<std::size_t>(n_years));
    for (int i = 0; i < n_years; ++i)
        t[static_cast<std::size_t>(i)] = 0.01 * i + 0.1 * static_cast<double>(id % 7);
    return t;
}

}  // namespace

TEST_CASE("61 samples per scenario at the paper horizon") {
    auto reg = default_registry();
    auto s = synthetic_baseline(1, reg, 1900, 2075);
    auto temps = fake_temps(0, s.n_years());
    auto samples = window_samples(s, reg, temps, 1900, 65);
    CHECK(samples.size() == 61);
    CHECK(samples.front().target_year == 2015);
    CHECK(samples.back().target_year == 2075);
}

TEST_CASE("target 2015 window spans 1950-2015 with 66 rows") {
    auto reg = default_registry();
    auto s = synthetic_baseline(1, reg, 1900, 2075);
    auto temps = fake_temps(0, s.n_years());
    auto samples = window_samples(s, reg, temps, 1900, 65);
    const auto& first = samples.front();
    CHECK(first.x.size() == 66);
    // First window row is the controllable projection of the 1950 emissions.
    auto expected = reg.project_controllable(s.row(1950));
    for (std::size_t c = 0; c < expected.size(); ++c) CHECK(first.x[0][c] == expected[c]);
    // Last window row is the target-year row.
    auto last_row = reg.project_controllable(s.row(2015));
    for (std::size_t c = 0; c < last_row.size(); ++c) CHECK(first.x[65][c] == last_row[c]);
}

TEST_CASE("W=0 gives a single-row window equal to the target-year emissions") {
    auto reg = default_registry();
    auto s = synthetic_baseline(1, reg, 2000, 2075);
    auto temps = fake_temps(0, s.n_years());
    auto samples = window_samples(s, reg, temps, 2000, 0);
    CHECK(samples.front().x.size() == 1);
    auto expected = reg.project_controllable(s.row(2015));
    for (std::size_t c = 0; c < expected.size(); ++c) CHECK(samples.front().x[0][c] == expected[c]);
}

TEST_CASE("insufficient history is rejected") {
    auto reg = default_registry();
    auto s = synthetic_baseline(1, reg, 1980, 2075);  // 1980 > 2015-65
    auto temps = fake_temps(0, s.n_years());
    CHECK_THROWS(window_samples(s, reg, temps, 1980, 65));
}

TEST_CASE("scenario split is a deterministic disjoint partition") {
    std::vector<std::int64_t> ids(100);
    for (int i = 0; i < 100; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    auto m = split_by_scenario(ids, 0.7, 0.15, 0.15, 42);
    auto m2 = split_by_scenario(ids, 0.7, 0.15, 0.15, 42);
    int n_train = 0, n_val = 0, n_test = 0;
    for (auto id : ids) {
        CHECK(m.of(id) == m2.of(id));
        switch (m.of(id)) {
            case Split::Train: ++n_train; break;
            case Split::Val: ++n_val; break;
            case Split::Test: ++n_test; break;
        }
    }
    CHECK(n_train == 70);
    CHECK(n_val == 15);
    CHECK(n_test == 15);
    CHECK(m.assignment.size() == 100);  // exhaustive, one split per id
}

TEST_CASE("bad split inputs are rejected") {
    CHECK_THROWS(split_by_scenario({}, 0.7, 0.15, 0.15, 1));
    CHECK_THROWS(split_by_scenario({1, 2}, 0.5, 0.2, 0.2, 1));  // ratios != 1
}

TEST_CASE("norm stats standardize the training split") {
    auto reg = default_registry();
    PerturbationConfig cfg;
    cfg.n_scenarios = 10;
    cfg.horizon_end = 2075;
    auto baseline = synthetic_baseline(1, reg, 1900, 2075);
    auto ensemble = generate_ensemble(baseline, reg, cfg);
    std::vector<WindowSample> samples;
    for (const auto& s : ensemble) {
        auto temps = fake_temps(s.scenario_id, s.n_years());
        auto part = window_samples(s, reg, temps, 1900, 65);
        samples.insert(samples.end(), part.begin(), part.end());
    }
    auto stats = NormStats::fit(samples);

    // Re-standardize and check moments per channel.
    std::vector<double> mean(5, 0.0), var(5, 0.0);
    std::size_t n = 0;
    for (const auto& s : samples) {
        auto z = stats.apply_x(s.x);
        for (const auto& row : z) {
            for (std::size_t c = 0; c < 5; ++c) mean[c] += row[c];
            ++n;
        }
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& s : samples) {
        auto z = stats.apply_x(s.x);
        for (const auto& row : z)
            for (std::size_t c = 0; c < 5; ++c) var[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
    }
    for (std::size_t c = 0; c < 5; ++c) {
        CHECK(std::abs(mean[c]) < 1e-9);
        CHECK(std::abs(var[c] / static_cast<double>(n) - 1.0) < 1e-9);
    }

    // y round trip.
    CHECK(stats.invert_y(stats.apply_y(1.2345)) == doctest::Approx(1.2345).epsilon(1e-12));
}

TEST_CASE("constant channel makes stats fitting fail") {
    WindowSample s;
    s.x = {{1.0, 2.0}, {1.0, 3.0}};
    s.y = 0.5;
    WindowSample s2 = s;
    s2.y = 0.7;
    CHECK_THROWS(NormStats::fit({s, s2}));  // channel 0 has zero variance
}

TEST_CASE("dataset container round-trips through disk") {
    auto reg = default_registry();
    PerturbationConfig cfg;
    cfg.n_scenarios = 20;
    auto baseline = synthetic_baseline(1, reg, 1900, 2075);
    auto ensemble = generate_ensemble(baseline, reg, cfg);
    std::vector<std::vector<double>> traces;
    for (const auto& s : ensemble) traces.push_back(fake_temps(s.scenario_id, s.n_years()));
    auto ds = build_dataset(ensemble, reg, traces, 1900, 65, 0.7, 0.15, 0.15, 7);
    CHECK(ds.samples.size() == 20 * 61);

    std::string path = "/tmp/scmgame_dataset_test.bin";
    ds.save(path);
    auto back = Dataset::load(path);
    std::remove(path.c_str());

    CHECK(back.window == ds.window);
    CHECK(back.registry_hash == ds.registry_hash);
    CHECK(back.samples.size() == ds.samples.size());
    CHECK(back.stats.y_mean == ds.stats.y_mean);  // bitwise
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].scenario_id == ds.samples[i].scenario_id);
        CHECK(back.samples[i].target_year == ds.samples[i].target_year);
        CHECK(back.samples[i].y == ds.samples[i].y);
        CHECK(back.samples[i].x == ds.samples[i].x);
    }
    for (const auto& [id, split] : ds.split.assignment) CHECK(back.split.of(id) == split);
}

TEST_CASE("split leakage check: scenario ids do not cross splits") {
    auto reg = default_registry();
    PerturbationConfig cfg;
    cfg.n_scenarios = 40;
    auto baseline = synthetic_baseline(1, reg, 1900, 2075);
    auto ensemble = generate_ensemble(baseline, reg, cfg);
    std::vector<std::vector<double>> traces;
    for (const auto& s : ensemble) traces.push_back(fake_temps(s.scenario_id, s.n_years()));
    auto ds = build_dataset(ensemble, reg, traces, 1900, 65, 0.7, 0.15, 0.15, 7);

    std::set<std::int64_t> train_ids, val_ids, test_ids;
    for (const auto* s : ds.of_split(Split::Train)) train_ids.insert(s->scenario_id);
    for (const auto* s : ds.of_split(Split::Val)) val_ids.insert(s->scenario_id);
    for (const auto* s : ds.of_split(Split::Test)) test_ids.insert(s->scenario_id);
    for (auto id : train_ids) {
        CHECK(val_ids.count(id) == 0);
        CHECK(test_ids.count(id) == 0);
    }
    for (auto id : val_ids) CHECK(test_ids.count(id) == 0);
}
