#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rng.hpp"

namespace scmgame {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Summary {
    double mean, median, p95;
};

Summary summarize(std::vector<double>& samples) {
    if (samples.empty()) throw std::runtime_error("bench: no samples");
    double total = 0.0;
    for (double s : samples) total += s;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const double median = (n % 2 == 1) ? samples[n / 2]
                                       : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    std::size_t p95_idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    if (p95_idx > 0) --p95_idx;
    return {total / static_cast<double>(n), median, samples[p95_idx]};
}

}  // namespace

std::string hardware_note() {
    std::ostringstream note;
    note << std::thread::hardware_concurrency() << " hw threads";
    std::ifstream cpuinfo("/proc/cpuinfo");
    for (std::string line; std::getline(cpuinfo, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) note << "; " << line.substr(colon + 2);
            break;
        }
    }
    return note.str();
}

BenchReport time_engine_step(EngineBackend& backend,
                             const std::vector<std::vector<double>>& inputs,
                             std::size_t n_steps, std::size_t warmup) {
    if (n_steps < 1) throw std::runtime_error("bench: need at least one step");
    if (inputs.empty()) throw std::runtime_error("bench: no inputs");
    volatile double sink = 0.0;  // keeps the optimizer honest
    for (std::size_t i = 0; i < warmup; ++i) sink = backend.step(inputs[i % inputs.size()]);

    std::vector<double> samples;
    samples.reserve(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const auto& row = inputs[(warmup + i) % inputs.size()];
        const auto t0 = Clock::now();
        sink = backend.step(row);
        const auto t1 = Clock::now();
        samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    (void)sink;

    const Summary s = summarize(samples);
    BenchReport report;
    report.mode = "engine-step";
    report.engine_tag = backend.tag();
    report.n_steps = n_steps;
    report.mean_s = s.mean;
    report.median_s = s.median;
    report.p95_s = s.p95;
    report.hardware = hardware_note();
#ifdef NDEBUG
    report.build_flags = "release";
#else
    report.build_flags = "debug";
#endif
    return report;
}

BenchReport time_env_step(ClimateGameEnv& env, int n_episodes, std::uint64_t seed) {
    if (n_episodes < 1) throw std::runtime_error("bench: need at least one episode");
    const int n_agents = env.spec().n_agents;
    rng::Stream stream(rng::key(seed, 0x62656e63ULL, 0, 0));
    std::vector<double> samples;
    std::string tag;
    for (int ep = 0; ep < n_episodes; ++ep) {
        env.reset();
        tag = env.record().engine_tag;
        bool done = false;
        while (!done) {
            // Actions drawn outside the timed region.
            std::vector<AgentAction> joint(static_cast<std::size_t>(n_agents));
            for (auto& a : joint) {
                a.energy = static_cast<int>(stream.next_below(3));
                a.methane = static_cast<int>(stream.next_below(3));
                a.agriculture = static_cast<int>(stream.next_below(3));
                a.adaptation = static_cast<int>(stream.next_below(3));
            }
            const auto t0 = Clock::now();
            auto result = env.step(joint);
            const auto t1 = Clock::now();
            samples.push_back(std::chrono::duration<double>(t1 - t0).count());
            done = result.done;
        }
    }
    const Summary s = summarize(samples);
    BenchReport report;
    report.mode = "env-step";
    report.engine_tag = tag;
    report.n_steps = samples.size();
    report.mean_s = s.mean;
    report.median_s = s.median;
    report.p95_s = s.p95;
    report.hardware = hardware_note();
#ifdef NDEBUG
    report.build_flags = "release";
#else
    report.build_flags = "debug";
#endif
    return report;
}

double speedup_ratio(const BenchReport& reference, const BenchReport& candidate) {
    if (candidate.mean_s <= 0.0) throw std::runtime_error("bench: degenerate candidate timing");
    return reference.mean_s / candidate.mean_s;
}

std::string BenchReport::to_json() const {
    json j;
    j["schema"] = "bench-report-v1";
    j["mode"] = mode;
    j["engine"] = engine_tag;
    j["n_steps"] = n_steps;
    j["mean_s"] = mean_s;
    j["median_s"] = median_s;
    j["p95_s"] = p95_s;
    j["hardware"] = hardware;
    j["build"] = build_flags;
    return j.dump(2);
}

}  // namespace scmgame
