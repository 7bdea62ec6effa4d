#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "rng.hpp"

namespace scmgame {

using nlohmann::json;

Split SplitManifest::of(std::int64_t scenario_id) const {
    auto it = assignment.find(scenario_id);
    if (it == assignment.end())
        throw std::runtime_error("split: unknown scenario id " + std::to_string(scenario_id));
    return it->second;
}

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    throw std::logic_error("bad split");
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw std::runtime_error("unknown split '" + s + "'");
}

std::vector<WindowSample> window_samples(const EmissionTrajectory& scenario,
                                         const SpeciesRegistry& registry,
                                         const std::vector<double>& temps, int temps_start_year,
                                         int window, int target_start, int target_end) {
    if (window < 0) throw std::runtime_error("window_samples: negative window");
    if (!scenario.covers(target_start - window) || !scenario.covers(target_end))
        throw std::runtime_error("window_samples: scenario does not cover the window span");
    std::vector<WindowSample> out;
    out.reserve(static_cast<std::size_t>(target_end - target_start + 1));
    for (int t = target_start; t <= target_end; ++t) {
        int ti = t - temps_start_year;
        if (ti < 0 || ti >= static_cast<int>(temps.size()))
            throw std::runtime_error("window_samples: temperature trace does not cover year " +
                                     std::to_string(t));
        WindowSample s;
        s.scenario_id = scenario.scenario_id;
        s.target_year = t;
        s.y = temps[static_cast<std::size_t>(ti)];
        if (!std::isfinite(s.y)) throw std::runtime_error("window_samples: non-finite target");
        s.x.reserve(static_cast<std::size_t>(window + 1));
        for (int y = t - window; y <= t; ++y)
            s.x.push_back(registry.project_controllable(scenario.row(y)));
        out.push_back(std::move(s));
    }
    return out;
}

SplitManifest split_by_scenario(const std::vector<std::int64_t>& ids, double train, double val,
                                double test, std::uint64_t seed) {
    if (ids.empty()) throw std::runtime_error("split: empty scenario id list");
    if (std::abs(train + val + test - 1.0) > 1e-9)
        throw std::runtime_error("split: ratios must sum to 1");
    std::vector<std::int64_t> shuffled = ids;
    rng::Stream stream(rng::key(seed, 0x73706c6974ULL, 0, 0));  // "split"
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[stream.next_below(i)]);

    SplitManifest m;
    m.train_ratio = train;
    m.val_ratio = val;
    m.test_ratio = test;
    m.seed = seed;
    const std::size_t n = shuffled.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(val * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
        m.assignment[shuffled[i]] = s;
    }
    return m;
}

NormStats NormStats::fit(const std::vector<WindowSample>& train) {
    if (train.empty()) throw std::runtime_error("norm stats: empty training split");
    const std::size_t n_ch = train.front().x.front().size();
    NormStats st;
    st.x_mean.assign(n_ch, 0.0);
    st.x_std.assign(n_ch, 0.0);
    std::size_t n_rows = 0;
    double y_sum = 0.0;
    for (const auto& s : train) {
        y_sum += s.y;
        for (const auto& row : s.x) {
            for (std::size_t c = 0; c < n_ch; ++c) st.x_mean[c] += row[c];
            ++n_rows;
        }
    }
    for (auto& m : st.x_mean) m /= static_cast<double>(n_rows);
    st.y_mean = y_sum / static_cast<double>(train.size());

    double y_var = 0.0;
    for (const auto& s : train) {
        y_var += (s.y - st.y_mean) * (s.y - st.y_mean);
        for (const auto& row : s.x)
            for (std::size_t c = 0; c < n_ch; ++c)
                st.x_std[c] += (row[c] - st.x_mean[c]) * (row[c] - st.x_mean[c]);
    }
    for (auto& v : st.x_std) {
        v = std::sqrt(v / static_cast<double>(n_rows));
        if (v <= 0.0 || !std::isfinite(v))
            throw std::runtime_error("norm stats: zero-variance emission channel");
    }
    st.y_std = std::sqrt(y_var / static_cast<double>(train.size()));
    if (st.y_std <= 0.0 || !std::isfinite(st.y_std))
        throw std::runtime_error("norm stats: zero-variance target");
    return st;
}

std::vector<std::vector<double>> NormStats::apply_x(
    const std::vector<std::vector<double>>& x) const {
    std::vector<std::vector<double>> out = x;
    for (auto& row : out)
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - x_mean[c]) / x_std[c];
    return out;
}

std::vector<const WindowSample*> Dataset::of_split(Split s) const {
    std::vector<const WindowSample*> out;
    for (const auto& sample : samples)
        if (split.of(sample.scenario_id) == s) out.push_back(&sample);
    return out;
}

namespace {
constexpr char kMagic[8] = {'S', 'C', 'M', 'D', 'S', 'E', 'T', '1'};
}

void Dataset::save(const std::string& path) const {
    json header;
    header["version"] = 1;
    header["window"] = window;
    header["registry_hash"] = registry_hash;
    header["n_samples"] = samples.size();
    header["n_channels"] = samples.empty() ? 0 : samples.front().x.front().size();
    header["stats"] = {{"x_mean", stats.x_mean},
                       {"x_std", stats.x_std},
                       {"y_mean", stats.y_mean},
                       {"y_std", stats.y_std}};
    json split_j;
    split_j["ratios"] = {split.train_ratio, split.val_ratio, split.test_ratio};
    split_j["seed"] = split.seed;
    json assign = json::object();
    for (const auto& [id, s] : split.assignment) assign[std::to_string(id)] = to_string(s);
    split_j["assignment"] = assign;
    header["split"] = split_j;
    const std::string head = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("dataset: cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t head_len = head.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& s : samples) {
        out.write(reinterpret_cast<const char*>(&s.scenario_id), sizeof(s.scenario_id));
        std::int32_t ty = s.target_year;
        out.write(reinterpret_cast<const char*>(&ty), sizeof(ty));
        for (const auto& row : s.x)
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(&s.y), sizeof(s.y));
    }
    if (!out) throw std::runtime_error("dataset: write failed for " + path);
}

Dataset Dataset::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("dataset: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("dataset: bad magic in " + path);
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    json header = json::parse(head);
    if (header.at("version").get<int>() != 1)
        throw std::runtime_error("dataset: unsupported version");

    Dataset d;
    d.window = header.at("window").get<int>();
    d.registry_hash = header.at("registry_hash").get<std::uint64_t>();
    d.stats.x_mean = header.at("stats").at("x_mean").get<std::vector<double>>();
    d.stats.x_std = header.at("stats").at("x_std").get<std::vector<double>>();
    d.stats.y_mean = header.at("stats").at("y_mean").get<double>();
    d.stats.y_std = header.at("stats").at("y_std").get<double>();
    auto ratios = header.at("split").at("ratios").get<std::vector<double>>();
    d.split.train_ratio = ratios.at(0);
    d.split.val_ratio = ratios.at(1);
    d.split.test_ratio = ratios.at(2);
    d.split.seed = header.at("split").at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : header.at("split").at("assignment").items())
        d.split.assignment[std::stoll(k)] = split_from_string(v.get<std::string>());

    const auto n_samples = header.at("n_samples").get<std::size_t>();
    const auto n_ch = header.at("n_channels").get<std::size_t>();
    const std::size_t rows = static_cast<std::size_t>(d.window) + 1;
    d.samples.resize(n_samples);
    for (auto& s : d.samples) {
        std::int32_t ty = 0;
        in.read(reinterpret_cast<char*>(&s.scenario_id), sizeof(s.scenario_id));
        in.read(reinterpret_cast<char*>(&ty), sizeof(ty));
        s.target_year = ty;
        s.x.assign(rows, std::vector<double>(n_ch));
        for (auto& row : s.x)
            in.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(n_ch * sizeof(double)));
        in.read(reinterpret_cast<char*>(&s.y), sizeof(s.y));
    }
    if (!in) throw std::runtime_error("dataset: truncated file " + path);
    return d;
}

Dataset build_dataset(const std::vector<EmissionTrajectory>& scenarios,
                      const SpeciesRegistry& registry,
                      const std::vector<std::vector<double>>& temp_traces, int temps_start_year,
                      int window, double train, double val, double test, std::uint64_t seed) {
    if (scenarios.size() != temp_traces.size())
        throw std::runtime_error("build_dataset: scenario/trace count mismatch");
    Dataset d;
    d.window = window;
    d.registry_hash = registry.hash();
    std::vector<std::int64_t> ids;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        ids.push_back(scenarios[i].scenario_id);
        auto s = window_samples(scenarios[i], registry, temp_traces[i], temps_start_year, window);
        d.samples.insert(d.samples.end(), s.begin(), s.end());
    }
    d.split = split_by_scenario(ids, train, val, test, seed);
    std::vector<WindowSample> train_samples;
    for (const auto& s : d.samples)
        if (d.split.of(s.scenario_id) == Split::Train) train_samples.push_back(s);
    d.stats = NormStats::fit(train_samples);
    return d;
}

}  // namespace scmgame
