#include "consistency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "rng.hpp"

namespace scmgame {

using nlohmann::json;

std::vector<std::size_t> sample_indices(std::size_t set_size, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::runtime_error("consistency: sample size must be positive");
    if (n > set_size) throw std::runtime_error("consistency: sample larger than the stored set");
    std::vector<std::size_t> pool(set_size);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    rng::Stream stream(rng::key(seed, 0x7265706cULL, 0, 0));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.next_below(
                                      static_cast<std::uint64_t>(set_size - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

std::vector<ReplaySample> sample_trajectories(const std::vector<EpisodeRecord>& records,
                                              std::size_t n, std::uint64_t seed) {
    auto indices = sample_indices(records.size(), n, seed);
    std::vector<ReplaySample> samples;
    samples.reserve(n);
    for (std::size_t idx : indices) {
        ReplaySample s;
        s.index = idx;
        s.record = records[idx];
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<double> replay(const EpisodeRecord& record, const EngineParams& params,
                           const SpeciesRegistry& registry, const EmissionTrajectory& history) {
    if (record.emissions.empty()) throw std::runtime_error("consistency: empty record");
    if (record.start_year != history.end_year() + 1)
        throw std::runtime_error("consistency: history must end the year before the record");
    ClimateEngine engine(params, registry, history);
    std::vector<double> trace;
    trace.reserve(record.emissions.size());
    for (const auto& row : record.emissions) trace.push_back(engine.step(row));
    return trace;
}

double trace_rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::runtime_error("consistency: trace length mismatch");
    if (a.empty()) throw std::runtime_error("consistency: empty traces");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sq / static_cast<double>(a.size()));
}

double discounted_temperature_return(const std::vector<double>& trace, double gamma) {
    double r = 0.0, g = 1.0;
    for (double t : trace) {
        r -= g * t;
        g *= gamma;
    }
    return r;
}

namespace {

// Counts ascending-merge swaps (= discordant pairs among x-sorted entries).
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo,
                          std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            tmp[k++] = v[j++];
        } else {
            tmp[k++] = v[i++];
        }
    }
    while (i < mid) tmp[k++] = v[i++];
    while (j < hi) tmp[k++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
              tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

std::uint64_t tie_pairs(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::uint64_t pairs = 0, run = 1;
    for (std::size_t i = 1; i <= v.size(); ++i) {
        if (i < v.size() && v[i] == v[i - 1]) {
            ++run;
        } else {
            pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    return pairs;
}

}  // namespace

std::optional<double> kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::runtime_error("consistency: tau length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::runtime_error("consistency: tau needs at least two points");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    // Joint ties and x-ties over the x-sorted order.
    std::uint64_t n3 = 0, run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]]) {
            ++run;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    const std::uint64_t n1 = tie_pairs(x);
    const std::uint64_t n2 = tie_pairs(y);
    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (n0 == n1 || n0 == n2) return std::nullopt;  // one vector fully tied

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
    std::vector<double> tmp(n);
    const std::uint64_t swaps = merge_count(ys, tmp, 0, n);

    // P - Q: total pairs minus every kind of tie, minus two per discordance.
    const double pq = static_cast<double>(n0) - static_cast<double>(n1) -
                      static_cast<double>(n2) + static_cast<double>(n3) -
                      2.0 * static_cast<double>(swaps);
    const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                         std::sqrt(static_cast<double>(n0 - n2));
    return pq / denom;
}

ConsistencyReport build_report(const std::vector<ReplaySample>& samples, double gamma,
                               std::uint64_t seed) {
    if (samples.empty()) throw std::runtime_error("consistency: no samples");
    ConsistencyReport report;
    report.n_sampled = samples.size();
    report.gamma = gamma;
    report.seed = seed;
    double pooled_sq = 0.0;
    std::size_t pooled_n = 0;
    for (const auto& s : samples) {
        if (s.replay_temps.size() != s.record.temps.size())
            throw std::runtime_error("consistency: replay incomplete");
        report.indices.push_back(s.index);
        report.per_trajectory_rmse.push_back(trace_rmse(s.record.temps, s.replay_temps));
        for (std::size_t i = 0; i < s.replay_temps.size(); ++i) {
            const double d = s.record.temps[i] - s.replay_temps[i];
            pooled_sq += d * d;
        }
        pooled_n += s.replay_temps.size();
        report.returns_net.push_back(discounted_temperature_return(s.record.temps, gamma));
        report.returns_sim.push_back(discounted_temperature_return(s.replay_temps, gamma));
    }
    report.pooled_rmse = std::sqrt(pooled_sq / static_cast<double>(pooled_n));
    if (samples.size() >= 2)
        report.tau = kendall_tau(report.returns_net, report.returns_sim);
    return report;
}

std::string ConsistencyReport::to_json() const {
    json j;
    j["schema"] = "consistency-report-v1";
    j["n_sampled"] = n_sampled;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["indices"] = indices;
    j["per_trajectory_rmse"] = per_trajectory_rmse;
    j["pooled_rmse"] = pooled_rmse;
    j["returns_net"] = returns_net;
    j["returns_sim"] = returns_sim;
    if (tau) j["kendall_tau"] = *tau;
    else j["kendall_tau"] = nullptr;
    return j.dump(2);
}

void ConsistencyReport::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("consistency: cannot open " + path);
    out.precision(12);
    out << "trajectory,rmse,return_net,return_sim\n";
    for (std::size_t i = 0; i < per_trajectory_rmse.size(); ++i)
        out << indices[i] << "," << per_trajectory_rmse[i] << "," << returns_net[i] << ","
            << returns_sim[i] << "\n";
}

}  // namespace scmgame
