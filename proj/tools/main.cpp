// scmgame: single entry point for the scenario -> simulate -> dataset ->
// surrogate -> game-training -> evaluation pipeline. Every stage writes a
// run manifest with content hashes; downstream stages re-verify them.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "consistency.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "engine.hpp"
#include "env.hpp"
#include "manifest.hpp"
#include "policy.hpp"
#include "ppo.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "species.hpp"
#include "surrogate.hpp"
#include "trajectory.hpp"

namespace fs = std::filesystem;
using namespace scmgame;

namespace {

// Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 missing file,
// 4 manifest hash mismatch, 5 refusing to overwrite without --force.
struct MissingFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HashMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WouldOverwriteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingFileError("missing file: " + path);
}

void guard_output(const std::string& path, bool force) {
    if (fs::exists(path) && !force)
        throw WouldOverwriteError("output exists (use --force to overwrite): " + path);
}

// Relative outputs land under $SCMGAME_OUT when it is set.
std::string resolve_out(const std::string& path) {
    const char* root = std::getenv("SCMGAME_OUT");
    if (root == nullptr || *root == '\0' || fs::path(path).is_absolute()) return path;
    return (fs::path(root) / path).string();
}

void verify_upstream(const std::string& manifest_path) {
    require_file(manifest_path);
    const RunManifest m = RunManifest::load(manifest_path);
    const auto stale = m.verify_outputs();
    if (!stale.empty()) {
        std::string msg = "hash mismatch against " + manifest_path + ":";
        for (const auto& p : stale) msg += " " + p;
        throw HashMismatchError(msg);
    }
}

SpeciesRegistry load_registry(const std::string& path) {
    if (path.empty()) return default_registry();
    require_file(path);
    return SpeciesRegistry::load_csv(path, {"CO2_FF", "CO2_AFOLU", "CH4", "N2O", "SO2"});
}

EngineParams load_engine_params(const std::string& path) {
    if (path.empty()) return EngineParams{};
    require_file(path);
    return EngineParams::from_config_file(path);
}

EmissionTrajectory load_baseline(const std::string& path, const SpeciesRegistry& registry,
                                 std::uint64_t synth_seed) {
    if (path.empty()) return synthetic_baseline(synth_seed, registry, 1900, 2075);
    require_file(path);
    return EmissionTrajectory::load_csv(path, registry);
}

ScenarioSpec load_spec(const std::string& value) {
    if (value == "scenario-i") return ScenarioSpec::scenario_i();
    if (value == "scenario-ii") return ScenarioSpec::scenario_ii();
    require_file(value);
    return ScenarioSpec::from_json_file(value);
}

void announce(const std::string& command,
              const std::vector<std::pair<std::string, std::string>>& settings) {
    std::cout << command << " settings:\n";
    for (const auto& [k, v] : settings) std::cout << "  " << k << " = " << v << "\n";
}

std::string fmt(double v) { return csv::format_double(v); }

// Shared inputs for the commands that run the game or the engine.
struct WorldOptions {
    std::string species_csv;
    std::string engine_params_file;
    std::string baseline_csv;
    std::uint64_t baseline_seed = 7;
};

void add_world_options(CLI::App* sub, WorldOptions& w) {
    sub->add_option("--species", w.species_csv, "gas registry CSV (default: built-in)");
    sub->add_option("--engine-params", w.engine_params_file,
                    "simulator parameter file (default: built-in)");
    sub->add_option("--baseline", w.baseline_csv,
                    "baseline emission CSV (default: synthetic)");
    sub->add_option("--baseline-seed", w.baseline_seed, "seed for the synthetic baseline");
}

struct World {
    SpeciesRegistry registry;
    EngineParams params;
    EmissionTrajectory baseline;
    EmissionTrajectory history;  // baseline up to the last pre-game year
};

World build_world(const WorldOptions& w, int history_end = 2015) {
    World world{load_registry(w.species_csv), load_engine_params(w.engine_params_file), {}, {}};
    world.baseline = load_baseline(w.baseline_csv, world.registry, w.baseline_seed);
    world.history = world.baseline.slice(world.baseline.start_year, history_end);
    return world;
}

ClimateGameEnv::BackendFactory make_factory(const World& world, const std::string& engine,
                                            const std::string& ckpt_path,
                                            std::shared_ptr<const Surrogate>* model_out = nullptr) {
    if (engine == "sim") {
        return [&world]() -> std::unique_ptr<EngineBackend> {
            return std::make_unique<SimulatorBackend>(world.params, world.registry,
                                                      world.history);
        };
    }
    if (ckpt_path.empty())
        throw std::runtime_error("engine '" + engine + "' needs --ckpt <surrogate checkpoint>");
    require_file(ckpt_path);
    auto model = std::make_shared<const Surrogate>(Surrogate::load(ckpt_path));
    if (to_string(model->config().encoder) != engine)
        throw std::runtime_error("checkpoint encoder is " + to_string(model->config().encoder) +
                                 ", requested " + engine);
    if (model->registry_hash() != world.registry.hash())
        throw HashMismatchError("checkpoint was trained against a different gas registry");
    const double hist_temp =
        ClimateEngine(world.params, world.registry, world.history).last_temp();
    if (model_out != nullptr) *model_out = model;
    return [&world, model, hist_temp]() -> std::unique_ptr<EngineBackend> {
        return std::make_unique<SurrogateBackend>(model, world.registry, world.history,
                                                  hist_temp);
    };
}

std::uint64_t settings_hash(const std::vector<std::pair<std::string, std::string>>& settings) {
    std::string blob;
    for (const auto& [k, v] : settings) blob += k + "=" + v + "\n";
    return fnv1a_text(blob);
}

// ---------------------------------------------------------------- commands

struct GenScenariosCmd {
    std::string out;
    WorldOptions world;
    int n = 2000;
    std::uint64_t seed = 0;
    double alpha = 0.8, lo = 0.925, hi = 1.075;
    double lo_trend = 1.0, hi_trend = 1.0;
    bool force = false;

    int run() const {
        const std::string out_dir = resolve_out(out);
        guard_output((fs::path(out_dir) / "manifest.json").string(), force);
        const auto settings = std::vector<std::pair<std::string, std::string>>{
            {"out", out_dir},       {"n", std::to_string(n)},
            {"seed", std::to_string(seed)}, {"alpha", fmt(alpha)},
            {"lo", fmt(lo)},        {"hi", fmt(hi)},
            {"lo-trend", fmt(lo_trend)}, {"hi-trend", fmt(hi_trend)},
            {"baseline", world.baseline_csv.empty() ? "synthetic" : world.baseline_csv}};
        announce("gen-scenarios", settings);

        const auto registry = load_registry(world.species_csv);
        const auto baseline = load_baseline(world.baseline_csv, registry, world.baseline_seed);
        PerturbationConfig config;
        config.n_scenarios = n;
        config.seed = seed;
        config.alpha = alpha;
        config.lo_controllable = lo;
        config.hi_controllable = hi;
        config.lo_trend = lo_trend;
        config.hi_trend = hi_trend;
        write_ensemble(baseline, registry, config, out_dir);

        RunManifest m;
        m.command = "gen-scenarios";
        m.seed = seed;
        m.config_hash = settings_hash(settings);
        if (!world.baseline_csv.empty()) m.add_input("baseline", world.baseline_csv);
        if (!world.species_csv.empty()) m.add_input("species", world.species_csv);
        m.add_output("manifest", (fs::path(out_dir) / "manifest.json").string());
        for (int s = 0; s <= n; ++s) {
            char name[48];
            std::snprintf(name, sizeof(name), "scenario_%06d.csv", s);
            m.add_output(name, (fs::path(out_dir) / name).string());
        }
        m.stamp_time();
        m.save((fs::path(out_dir) / "run_manifest.json").string());
        std::cout << "wrote " << (n + 1) << " scenario files to " << out_dir << "\n";
        return 0;
    }
};

struct SimulateCmd {
    std::string scenarios, out;
    WorldOptions world;
    bool force = false;
    int jobs = 1;  // accepted for interface stability; execution is serial

    int run() const {
        const std::string out_dir = resolve_out(out);
        require_file(scenarios);
        verify_upstream((fs::path(scenarios) / "run_manifest.json").string());
        const auto registry = load_registry(world.species_csv);
        const auto params = load_engine_params(world.engine_params_file);

        std::ifstream in(fs::path(scenarios) / "manifest.json");
        if (!in) throw MissingFileError("missing file: " + scenarios + "/manifest.json");
        const auto ensemble = nlohmann::json::parse(in);
        const auto files = ensemble.at("files").get<std::vector<std::string>>();
        if (ensemble.at("registry_hash").get<std::uint64_t>() != registry.hash())
            throw HashMismatchError("scenario ensemble used a different gas registry");

        announce("simulate", {{"scenarios", scenarios},
                              {"out", out_dir},
                              {"engine-params",
                               world.engine_params_file.empty() ? "built-in"
                                                                : world.engine_params_file},
                              {"files", std::to_string(files.size())}});
        fs::create_directories(out_dir);

        RunManifest m;
        m.command = "simulate";
        m.config_hash = fnv1a_text(out_dir);
        m.add_input("ensemble-manifest", (fs::path(scenarios) / "manifest.json").string());

        const int horizon_start = ensemble.at("horizon").at(0).get<int>();
        for (const auto& name : files) {
            const std::string path = (fs::path(scenarios) / name).string();
            const auto traj = EmissionTrajectory::load_csv(path, registry);
            ClimateEngine engine(params, registry,
                                 traj.slice(traj.start_year, horizon_start - 1));
            csv::Table table;
            table.header = {"year", "temp"};
            table.rows.push_back({std::to_string(horizon_start - 1), fmt(engine.last_temp())});
            for (int y = horizon_start; y <= traj.end_year(); ++y)
                table.rows.push_back({std::to_string(y), fmt(engine.step(y, traj.row(y)))});
            std::string out_name = name;
            out_name.replace(0, std::string("scenario").size(), "temps");
            const std::string out_path = (fs::path(out_dir) / out_name).string();
            guard_output(out_path, force);
            csv::write_file(out_path, table);
            m.add_output(out_name, out_path);
        }
        m.stamp_time();
        m.save((fs::path(out_dir) / "run_manifest.json").string());
        std::cout << "wrote " << files.size() << " temperature traces to " << out_dir << "\n";
        return 0;
    }
};

struct MakeDatasetCmd {
    std::string scenarios, temps, out, split = "0.7,0.15,0.15";
    std::string species_csv;
    int window = 65;
    std::uint64_t seed = 0;
    bool force = false;

    int run() const {
        const std::string out_path = resolve_out(out);
        guard_output(out_path, force);
        verify_upstream((fs::path(temps) / "run_manifest.json").string());
        const auto registry = load_registry(species_csv);

        double tr = 0, va = 0, te = 0;
        char comma1 = 0, comma2 = 0;
        std::istringstream ss(split);
        if (!(ss >> tr >> comma1 >> va >> comma2 >> te) || comma1 != ',' || comma2 != ',')
            throw std::runtime_error("--split expects three comma-separated ratios");
        announce("make-dataset",
                 {{"scenarios", scenarios},
                  {"temps", temps},
                  {"window", std::to_string(window)},
                  {"split", split},
                  {"seed", std::to_string(seed)},
                  {"out", out_path}});

        std::ifstream in(fs::path(scenarios) / "manifest.json");
        if (!in) throw MissingFileError("missing file: " + scenarios + "/manifest.json");
        const auto ensemble = nlohmann::json::parse(in);
        const auto files = ensemble.at("files").get<std::vector<std::string>>();

        std::vector<EmissionTrajectory> trajs;
        std::vector<std::vector<double>> traces;
        int temps_start_year = 0;
        std::int64_t next_id = 0;
        for (const auto& name : files) {
            auto traj = EmissionTrajectory::load_csv((fs::path(scenarios) / name).string(),
                                                     registry, next_id++);
            std::string temps_name = name;
            temps_name.replace(0, std::string("scenario").size(), "temps");
            const auto table = csv::read_file((fs::path(temps) / temps_name).string());
            std::vector<double> trace;
            trace.reserve(table.rows.size());
            for (const auto& row : table.rows) trace.push_back(std::stod(row.at(1)));
            temps_start_year = std::stoi(table.rows.front().at(0));
            trajs.push_back(std::move(traj));
            traces.push_back(std::move(trace));
        }
        const auto dataset = build_dataset(trajs, registry, traces, temps_start_year, window,
                                           tr, va, te, seed);
        dataset.save(out_path);

        RunManifest m;
        m.command = "make-dataset";
        m.seed = seed;
        m.config_hash = fnv1a_text(split + "|" + std::to_string(window));
        m.add_input("temps-manifest", (fs::path(temps) / "run_manifest.json").string());
        m.add_output("dataset", out_path);
        m.stamp_time();
        m.save(out_path + ".manifest.json");
        std::cout << "dataset: " << dataset.samples.size() << " samples from " << trajs.size()
                  << " scenarios\n";
        return 0;
    }
};

struct TrainSurrogateCmd {
    std::string dataset, encoder = "gru", out;
    int hidden = 64, head_hidden = 64, epochs = 60, batch = 256, patience = 10;
    double lr = 3e-3, target_rmse = 0.0;
    std::uint64_t seed = 0;
    bool force = false;

    int run() const {
        const std::string out_path = resolve_out(out);
        guard_output(out_path, force);
        require_file(dataset);
        const auto ds = Dataset::load(dataset);

        SurrogateConfig config;
        config.encoder = encoder_from_string(encoder);
        config.hidden_dim = hidden;
        config.head_hidden = head_hidden;
        config.window = ds.window;
        config.learning_rate = lr;
        config.batch_size = batch;
        config.max_epochs = epochs;
        config.patience = patience;
        config.target_val_rmse = target_rmse;
        config.seed = seed;
        announce("train-surrogate",
                 {{"dataset", dataset},
                  {"encoder", encoder},
                  {"hidden", std::to_string(hidden)},
                  {"epochs", std::to_string(epochs)},
                  {"lr", fmt(lr)},
                  {"batch", std::to_string(batch)},
                  {"seed", std::to_string(seed)},
                  {"out", out_path}});

        Surrogate model(config, ds.stats, ds.registry_hash);
        const auto metrics = model.train(ds);
        model.save(out_path);

        csv::Table curve;
        curve.header = {"epoch", "train_loss", "val_rmse"};
        for (std::size_t e = 0; e < metrics.train_loss.size(); ++e)
            curve.rows.push_back(
                {std::to_string(e), fmt(metrics.train_loss[e]), fmt(metrics.val_rmse[e])});
        csv::write_file(out_path + ".metrics.csv", curve);

        RunManifest m;
        m.command = "train-surrogate";
        m.seed = seed;
        m.config_hash = fnv1a_text(encoder + "|" + std::to_string(hidden));
        m.add_input("dataset", dataset);
        m.add_output("checkpoint", out_path);
        m.add_output("metrics", out_path + ".metrics.csv");
        m.stamp_time();
        m.save(out_path + ".manifest.json");

        const double best = metrics.best_epoch >= 0
                                ? metrics.val_rmse[static_cast<std::size_t>(metrics.best_epoch)]
                                : 0.0;
        std::cout << "best epoch " << metrics.best_epoch << ", val RMSE " << best << " K\n";
        return 0;
    }
};

struct EvalSurrogateCmd {
    std::string ckpt, dataset, split = "test", out;
    bool force = false;

    int run() const {
        require_file(ckpt);
        require_file(dataset);
        const auto model = Surrogate::load(ckpt);
        const auto ds = Dataset::load(dataset);
        if (model.registry_hash() != ds.registry_hash)
            throw HashMismatchError("checkpoint and dataset disagree on the gas registry");
        announce("eval-surrogate", {{"ckpt", ckpt}, {"dataset", dataset}, {"split", split}});
        const auto res = model.evaluate(ds.of_split(split_from_string(split)));
        std::cout << split << " RMSE = " << res.rmse << " K, R^2 = "
                  << (res.r2 ? std::to_string(*res.r2) : std::string("n/a")) << "\n";
        if (!out.empty()) {
            const std::string out_path = resolve_out(out);
            guard_output(out_path, force);
            nlohmann::json j;
            j["split"] = split;
            j["rmse"] = res.rmse;
            if (res.r2) j["r2"] = *res.r2;
            std::ofstream f(out_path, std::ios::binary);
            f << j.dump(2) << "\n";
        }
        return 0;
    }
};

struct RunEpisodeCmd {
    std::string spec = "scenario-i", engine = "sim", ckpt, actions, policy_dir, out;
    WorldOptions world;
    bool sample = false;
    std::uint64_t seed = 0;
    bool force = false;

    int run() const {
        const std::string out_path = out.empty() ? "" : resolve_out(out);
        if (!out_path.empty()) guard_output(out_path, force);
        const auto scenario = load_spec(spec);
        const World w = build_world(world, scenario.start_year - 1);
        announce("run-episode", {{"spec", spec},
                                 {"engine", engine},
                                 {"actions", actions.empty() ? "policy" : actions},
                                 {"seed", std::to_string(seed)}});

        ClimateGameEnv env(scenario, w.registry, w.baseline, make_factory(w, engine, ckpt));
        std::vector<std::vector<AgentAction>> plan;
        std::vector<PolicyNet> policies;
        if (!actions.empty()) {
            require_file(actions);
            std::ifstream in(actions);
            const auto j = nlohmann::json::parse(in);
            for (const auto& step : j) {
                std::vector<AgentAction> row;
                for (const auto& a : step)
                    row.push_back({a.at("energy").get<int>(), a.at("methane").get<int>(),
                                   a.at("agriculture").get<int>(), a.at("adaptation").get<int>()});
                plan.push_back(std::move(row));
            }
            if (static_cast<int>(plan.size()) != scenario.horizon)
                throw std::runtime_error("action file must cover every episode year");
        } else {
            if (policy_dir.empty())
                throw std::runtime_error("need --actions <file> or --policy <dir>");
            for (int i = 0; i < scenario.n_agents; ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "agent_%03d.policy", i);
                const std::string path = (fs::path(policy_dir) / name).string();
                require_file(path);
                policies.push_back(PolicyNet::load_file(path));
            }
        }

        rng::Stream stream(rng::key(seed, 0x616374, 0, 0));
        std::vector<LstmState> states;
        for (const auto& p : policies) states.push_back(p.initial_state());
        std::vector<double> totals(static_cast<std::size_t>(scenario.n_agents), 0.0);
        auto obs = env.reset();
        for (int t = 0; t < scenario.horizon; ++t) {
            std::vector<AgentAction> joint;
            if (!plan.empty()) {
                joint = plan[static_cast<std::size_t>(t)];
            } else {
                for (int i = 0; i < scenario.n_agents; ++i)
                    joint.push_back(policies[static_cast<std::size_t>(i)]
                                        .act(obs, states[static_cast<std::size_t>(i)],
                                             sample ? &stream : nullptr)
                                        .action);
            }
            const auto res = env.step(joint);
            for (int i = 0; i < scenario.n_agents; ++i)
                totals[static_cast<std::size_t>(i)] += res.rewards[static_cast<std::size_t>(i)];
            obs = res.observation;
        }
        for (std::size_t i = 0; i < totals.size(); ++i)
            std::cout << "agent " << i << " return " << totals[i] << "\n";
        std::cout << "final-year temperature "
                  << env.record().temps[static_cast<std::size_t>(scenario.horizon - 1)]
                  << " K\n";
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::binary);
            f << env.record().to_json() << "\n";
            std::cout << "wrote episode record to " << out_path << "\n";
        }
        return 0;
    }
};

struct TrainMarlCmd {
    std::string spec = "scenario-i", engine = "sim", ckpt, out;
    WorldOptions world;
    TrainConfig config;
    bool force = false;

    int run() const {
        const std::string out_dir = resolve_out(out);
        guard_output((fs::path(out_dir) / "run_manifest.json").string(), force);
        const auto scenario = load_spec(spec);
        const World w = build_world(world, scenario.start_year - 1);
        announce("train-marl",
                 {{"spec", spec},
                  {"engine", engine},
                  {"episodes", std::to_string(config.total_episodes)},
                  {"episodes-per-update", std::to_string(config.episodes_per_update)},
                  {"lr", fmt(config.learning_rate)},
                  {"entropy", fmt(config.entropy_coeff)},
                  {"hidden", std::to_string(config.hidden_dim)},
                  {"seed", std::to_string(config.seed)},
                  {"store-every", std::to_string(config.store_every)},
                  {"out", out_dir}});

        ClimateGameEnv env(scenario, w.registry, w.baseline, make_factory(w, engine, ckpt));
        const auto result = train(env, config);
        fs::create_directories(out_dir);

        RunManifest m;
        m.command = "train-marl";
        m.seed = config.seed;
        m.config_hash = fnv1a_text(spec + "|" + engine + "|" +
                                   std::to_string(config.total_episodes));
        if (!ckpt.empty()) m.add_input("surrogate", ckpt);
        for (std::size_t i = 0; i < result.policies.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "agent_%03zu.policy", i);
            const std::string path = (fs::path(out_dir) / name).string();
            result.policies[i].save_file(path);
            m.add_output(name, path);
        }
        const std::string rewards_path = (fs::path(out_dir) / "reward_curves.csv").string();
        const std::string levers_path = (fs::path(out_dir) / "lever_curves.csv").string();
        write_reward_curves_csv(rewards_path, result);
        write_lever_curves_csv(levers_path, result);
        m.add_output("reward-curves", rewards_path);
        m.add_output("lever-curves", levers_path);

        const std::string records_path = (fs::path(out_dir) / "records.jsonl").string();
        {
            std::ofstream f(records_path, std::ios::binary);
            for (const auto& r : result.records) f << r.to_json() << "\n";
        }
        m.add_output("records", records_path);
        m.stamp_time();
        m.save((fs::path(out_dir) / "run_manifest.json").string());

        double final_mean = 0.0;
        for (const auto& curve : result.reward_curves) final_mean += curve.back();
        final_mean /= static_cast<double>(result.reward_curves.size());
        std::cout << "ran " << result.episodes_run << " episodes ("
                  << (result.plateaued ? "plateaued" : "full budget") << "), stored "
                  << result.records.size() << " trajectories, final mean return " << final_mean
                  << "\n";
        return 0;
    }
};

struct EvalConsistencyCmd {
    std::string manifest, records, out;
    WorldOptions world;
    std::size_t n = 1000;
    double gamma = 0.999;
    std::uint64_t seed = 0;
    bool force = false;

    int run() const {
        const std::string out_path = resolve_out(out);
        guard_output(out_path, force);
        std::string records_path = records;
        if (!manifest.empty()) {
            verify_upstream(manifest);
            records_path = RunManifest::load(manifest).outputs.at("records");
        }
        if (records_path.empty())
            throw std::runtime_error("need --manifest <run_manifest.json> or --records <jsonl>");
        require_file(records_path);
        announce("eval-consistency", {{"records", records_path},
                                      {"n", std::to_string(n)},
                                      {"gamma", fmt(gamma)},
                                      {"seed", std::to_string(seed)},
                                      {"out", out_path}});

        std::vector<EpisodeRecord> stored;
        {
            std::ifstream in(records_path);
            std::string line;
            while (std::getline(in, line))
                if (!line.empty()) stored.push_back(EpisodeRecord::from_json(line));
        }
        const std::size_t take = std::min(n, stored.size());
        auto samples = sample_trajectories(stored, take, seed);
        const World w = build_world(world, stored.front().start_year - 1);
        for (auto& s : samples)
            s.replay_temps = replay(s.record, w.params, w.registry, w.history);

        const auto report = build_report(samples, gamma, seed);
        {
            std::ofstream f(out_path, std::ios::binary);
            f << report.to_json() << "\n";
        }
        const std::string csv_path = fs::path(out_path).replace_extension(".csv").string();
        report.save_csv(csv_path);

        RunManifest m;
        m.command = "eval-consistency";
        m.seed = seed;
        m.config_hash = fnv1a_text(fmt(gamma) + "|" + std::to_string(take));
        m.add_input("records", records_path);
        m.add_output("report", out_path);
        m.add_output("report-csv", csv_path);
        m.stamp_time();
        m.save(out_path + ".manifest.json");

        std::cout << "replayed " << report.n_sampled << " trajectories: pooled RMSE "
                  << report.pooled_rmse << " K, Kendall tau "
                  << (report.tau ? std::to_string(*report.tau) : std::string("n/a")) << "\n";
        return 0;
    }
};

struct BenchCmd {
    std::string mode = "engine", engine = "sim", ckpt, spec = "scenario-i", out;
    WorldOptions world;
    std::size_t steps = 100000;
    int episodes = 0;  // env mode; 0 = derive from steps
    std::uint64_t seed = 0;
    bool force = false;

    int run() const {
        const std::string out_path = out.empty() ? "" : resolve_out(out);
        if (!out_path.empty()) guard_output(out_path, force);
        const auto scenario = load_spec(spec);
        const World w = build_world(world, scenario.start_year - 1);
        announce("bench", {{"mode", mode},
                           {"engine", engine},
                           {"steps", std::to_string(steps)},
                           {"seed", std::to_string(seed)}});

        BenchReport report;
        if (mode == "engine") {
            auto backend = make_factory(w, engine, ckpt)();
            std::vector<std::vector<double>> inputs;
            for (int y = scenario.start_year; y <= w.baseline.end_year(); ++y)
                inputs.push_back(w.baseline.row(y));
            report = time_engine_step(*backend, inputs, steps);
        } else if (mode == "env") {
            ClimateGameEnv env(scenario, w.registry, w.baseline,
                               make_factory(w, engine, ckpt));
            const int n_episodes =
                episodes > 0 ? episodes
                             : std::max<int>(1, static_cast<int>(steps) / scenario.horizon);
            report = time_env_step(env, n_episodes, seed);
        } else {
            throw std::runtime_error("--mode must be engine or env");
        }
        std::cout << report.mode << " [" << report.engine_tag << "]: mean "
                  << report.mean_s << " s, median " << report.median_s << " s, p95 "
                  << report.p95_s << " s over " << report.n_steps << " steps\n";
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::binary);
            f << report.to_json() << "\n";
            std::cout << "wrote " << out_path << "\n";
        }
        return 0;
    }
};

double quantile(std::vector<double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

struct PlotDataCmd {
    std::string figure, in, out;
    int smooth = 25;
    bool force = false;

    int run() const {
        const std::string out_path = resolve_out(out);
        guard_output(out_path, force);
        announce("plot-data", {{"figure", figure}, {"in", in}, {"out", out_path}});
        if (figure == "temp-ensemble") return temp_ensemble(out_path);
        if (figure == "reward-curves") return smoothed_copy(out_path);
        if (figure == "lever-trajectories") return smoothed_copy(out_path);
        if (figure == "consistency-scatter") return scatter(out_path);
        throw std::runtime_error("unknown figure: " + figure);
    }

    // Median and 5-95% band of the simulated ensemble, per year.
    int temp_ensemble(const std::string& out_path) const {
        require_file(in);
        std::map<int, std::vector<double>> by_year;
        std::size_t n_files = 0;
        std::vector<fs::path> paths;
        for (const auto& entry : fs::directory_iterator(in))
            if (entry.path().filename().string().rfind("temps_", 0) == 0)
                paths.push_back(entry.path());
        std::sort(paths.begin(), paths.end());
        for (const auto& path : paths) {
            const auto table = csv::read_file(path.string());
            for (const auto& row : table.rows)
                by_year[std::stoi(row.at(0))].push_back(std::stod(row.at(1)));
            ++n_files;
        }
        if (n_files == 0) throw MissingFileError("no temps_*.csv under " + in);
        csv::Table table;
        table.header = {"year", "median", "p05", "p95"};
        for (auto& [year, temps] : by_year) {
            std::sort(temps.begin(), temps.end());
            table.rows.push_back({std::to_string(year), fmt(quantile(temps, 0.5)),
                                  fmt(quantile(temps, 0.05)), fmt(quantile(temps, 0.95))});
        }
        csv::write_file(out_path, table);
        std::cout << "ensemble band over " << n_files << " traces -> " << out_path << "\n";
        return 0;
    }

    // Rolling mean over the episode axis of a per-episode training CSV.
    int smoothed_copy(const std::string& out_path) const {
        require_file(in);
        const auto table = csv::read_file(in);
        const std::size_t cols = table.header.size();
        csv::Table smoothed;
        smoothed.header = table.header;
        std::vector<std::vector<double>> data(table.rows.size());
        for (std::size_t r = 0; r < table.rows.size(); ++r)
            for (std::size_t c = 1; c < cols; ++c)
                data[r].push_back(std::stod(table.rows[r][c]));
        const std::size_t win = static_cast<std::size_t>(std::max(1, smooth));
        for (std::size_t r = 0; r < data.size(); ++r) {
            const std::size_t from = r + 1 >= win ? r + 1 - win : 0;
            std::vector<std::string> row = {table.rows[r][0]};
            for (std::size_t c = 0; c + 1 < cols; ++c) {
                double acc = 0.0;
                for (std::size_t k = from; k <= r; ++k) acc += data[k][c];
                row.push_back(fmt(acc / static_cast<double>(r - from + 1)));
            }
            smoothed.rows.push_back(std::move(row));
        }
        csv::write_file(out_path, smoothed);
        std::cout << "smoothed " << data.size() << " rows (window " << win << ") -> "
                  << out_path << "\n";
        return 0;
    }

    // (return under training-time traces, return under replayed simulator).
    int scatter(const std::string& out_path) const {
        require_file(in);
        std::ifstream f(in);
        const auto j = nlohmann::json::parse(f);
        csv::Table table;
        table.header = {"return_net", "return_sim"};
        const auto& net = j.at("returns_net");
        const auto& sim = j.at("returns_sim");
        for (std::size_t i = 0; i < net.size(); ++i)
            table.rows.push_back(
                {fmt(net[i].get<double>()), fmt(sim[i].get<double>())});
        csv::write_file(out_path, table);
        std::cout << table.rows.size() << " points -> " << out_path << "\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reduced-complexity climate simulator, learned emulator, and "
                 "multi-agent mitigation game"};
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "worker budget hint (execution is currently serial)");

    GenScenariosCmd gen;
    auto* gen_sub = app.add_subcommand("gen-scenarios", "sample a perturbed emission ensemble");
    gen_sub->add_option("--out", gen.out, "output directory")->required();
    gen_sub->add_option("--n", gen.n, "number of perturbed scenarios");
    gen_sub->add_option("--seed", gen.seed, "ensemble seed");
    gen_sub->add_option("--alpha", gen.alpha, "log-space smoothing weight");
    gen_sub->add_option("--lo", gen.lo, "lower multiplier bound for controllable gases");
    gen_sub->add_option("--hi", gen.hi, "upper multiplier bound for controllable gases");
    gen_sub->add_option("--lo-trend", gen.lo_trend,
                        "lower bound of the per-scenario persistent growth trend");
    gen_sub->add_option("--hi-trend", gen.hi_trend,
                        "upper bound of the per-scenario persistent growth trend");
    add_world_options(gen_sub, gen.world);
    gen_sub->add_flag("--force", gen.force, "overwrite existing outputs");
    gen_sub->set_config("--config");

    SimulateCmd sim;
    auto* sim_sub = app.add_subcommand("simulate", "run the simulator over a scenario directory");
    sim_sub->add_option("--scenarios", sim.scenarios, "scenario directory")->required();
    sim_sub->add_option("--out", sim.out, "output directory")->required();
    add_world_options(sim_sub, sim.world);
    sim_sub->add_flag("--force", sim.force, "overwrite existing outputs");
    sim_sub->set_config("--config");

    MakeDatasetCmd mkds;
    auto* mkds_sub = app.add_subcommand("make-dataset", "window scenarios + traces into a dataset");
    mkds_sub->add_option("--scenarios", mkds.scenarios, "scenario directory")->required();
    mkds_sub->add_option("--temps", mkds.temps, "temperature trace directory")->required();
    mkds_sub->add_option("--out", mkds.out, "dataset file")->required();
    mkds_sub->add_option("--window", mkds.window, "input window length W");
    mkds_sub->add_option("--split", mkds.split, "train,val,test ratios");
    mkds_sub->add_option("--seed", mkds.seed, "scenario-split seed");
    mkds_sub->add_option("--species", mkds.species_csv, "gas registry CSV (default: built-in)");
    mkds_sub->add_flag("--force", mkds.force, "overwrite existing outputs");
    mkds_sub->set_config("--config");

    TrainSurrogateCmd tsur;
    auto* tsur_sub = app.add_subcommand("train-surrogate", "fit the temperature emulator");
    tsur_sub->add_option("--dataset", tsur.dataset, "dataset file")->required();
    tsur_sub->add_option("--out", tsur.out, "checkpoint file")->required();
    tsur_sub->add_option("--encoder", tsur.encoder, "gru|lstm|tcn");
    tsur_sub->add_option("--hidden", tsur.hidden, "encoder width");
    tsur_sub->add_option("--head-hidden", tsur.head_hidden, "head width");
    tsur_sub->add_option("--epochs", tsur.epochs, "max epochs");
    tsur_sub->add_option("--batch", tsur.batch, "batch size");
    tsur_sub->add_option("--patience", tsur.patience, "early-stop patience");
    tsur_sub->add_option("--lr", tsur.lr, "learning rate");
    tsur_sub->add_option("--target-rmse", tsur.target_rmse,
                         "stop once validation RMSE [K] drops below this (0 = off)");
    tsur_sub->add_option("--seed", tsur.seed, "initialization/shuffle seed");
    tsur_sub->add_flag("--force", tsur.force, "overwrite existing outputs");
    tsur_sub->set_config("--config");

    EvalSurrogateCmd esur;
    auto* esur_sub = app.add_subcommand("eval-surrogate", "score a checkpoint on a split");
    esur_sub->add_option("--ckpt", esur.ckpt, "checkpoint file")->required();
    esur_sub->add_option("--dataset", esur.dataset, "dataset file")->required();
    esur_sub->add_option("--split", esur.split, "train|val|test");
    esur_sub->add_option("--out", esur.out, "optional metrics JSON");
    esur_sub->add_flag("--force", esur.force, "overwrite existing outputs");

    RunEpisodeCmd ep;
    auto* ep_sub = app.add_subcommand("run-episode", "play one episode of the mitigation game");
    ep_sub->add_option("--spec", ep.spec, "scenario-i|scenario-ii|<json file>");
    ep_sub->add_option("--engine", ep.engine, "sim|gru|lstm|tcn");
    ep_sub->add_option("--ckpt", ep.ckpt, "surrogate checkpoint (non-sim engines)");
    ep_sub->add_option("--actions", ep.actions, "JSON action plan, one row per year");
    ep_sub->add_option("--policy", ep.policy_dir, "directory of agent_*.policy checkpoints");
    ep_sub->add_flag("--sample", ep.sample, "sample from the policies instead of argmax");
    ep_sub->add_option("--seed", ep.seed, "action-sampling seed");
    ep_sub->add_option("--out", ep.out, "episode record JSON");
    add_world_options(ep_sub, ep.world);
    ep_sub->add_flag("--force", ep.force, "overwrite existing outputs");
    ep_sub->set_config("--config");

    TrainMarlCmd marl;
    auto* marl_sub = app.add_subcommand("train-marl", "train independent recurrent learners");
    marl_sub->add_option("--spec", marl.spec, "scenario-i|scenario-ii|<json file>");
    marl_sub->add_option("--engine", marl.engine, "sim|gru|lstm|tcn");
    marl_sub->add_option("--ckpt", marl.ckpt, "surrogate checkpoint (non-sim engines)");
    marl_sub->add_option("--out", marl.out, "output directory")->required();
    marl_sub->add_option("--episodes", marl.config.total_episodes, "episode budget");
    marl_sub->add_option("--episodes-per-update", marl.config.episodes_per_update,
                         "rollouts per policy update");
    marl_sub->add_option("--epochs-per-update", marl.config.epochs_per_update,
                         "optimizer passes per update");
    marl_sub->add_option("--lr", marl.config.learning_rate, "learning rate");
    marl_sub->add_option("--clip", marl.config.clip, "surrogate-objective clip radius");
    marl_sub->add_option("--entropy", marl.config.entropy_coeff, "entropy bonus weight");
    marl_sub->add_option("--value-coeff", marl.config.value_coeff, "value-loss weight");
    marl_sub->add_option("--gae-lambda", marl.config.gae_lambda, "advantage-estimation lambda");
    marl_sub->add_option("--hidden", marl.config.hidden_dim, "policy width");
    marl_sub->add_option("--seed", marl.config.seed, "training seed");
    marl_sub->add_option("--store-every", marl.config.store_every,
                         "keep every k-th episode record (0 = none)");
    marl_sub->add_option("--plateau-window", marl.config.plateau_window,
                         "plateau-stop window in episodes (0 = off)");
    marl_sub->add_option("--plateau-tol", marl.config.plateau_tol,
                         "relative improvement below this counts as a plateau");
    add_world_options(marl_sub, marl.world);
    marl_sub->add_flag("--force", marl.force, "overwrite existing outputs");
    marl_sub->set_config("--config");

    EvalConsistencyCmd cons;
    auto* cons_sub = app.add_subcommand("eval-consistency",
                                        "replay stored trajectories through the simulator");
    cons_sub->add_option("--manifest", cons.manifest, "training-run manifest");
    cons_sub->add_option("--records", cons.records, "records JSONL (alternative to --manifest)");
    cons_sub->add_option("--n", cons.n, "trajectories to sample");
    cons_sub->add_option("--gamma", cons.gamma, "discount for the temperature return");
    cons_sub->add_option("--seed", cons.seed, "sampling seed");
    cons_sub->add_option("--out", cons.out, "report JSON")->required();
    add_world_options(cons_sub, cons.world);
    cons_sub->add_flag("--force", cons.force, "overwrite existing outputs");
    cons_sub->set_config("--config");

    BenchCmd bench;
    auto* bench_sub = app.add_subcommand("bench", "time engine or environment steps");
    bench_sub->add_option("--mode", bench.mode, "engine|env");
    bench_sub->add_option("--engine", bench.engine, "sim|gru|lstm|tcn");
    bench_sub->add_option("--ckpt", bench.ckpt, "surrogate checkpoint (non-sim engines)");
    bench_sub->add_option("--steps", bench.steps, "timed steps");
    bench_sub->add_option("--episodes", bench.episodes, "env mode: episodes (0 = from steps)");
    bench_sub->add_option("--spec", bench.spec, "game spec for env mode");
    bench_sub->add_option("--seed", bench.seed, "action seed for env mode");
    bench_sub->add_option("--out", bench.out, "report JSON");
    add_world_options(bench_sub, bench.world);
    bench_sub->add_flag("--force", bench.force, "overwrite existing outputs");

    PlotDataCmd plot;
    auto* plot_sub = app.add_subcommand("plot-data", "emit plot-ready CSV series");
    plot_sub->add_option("--figure", plot.figure,
                         "temp-ensemble|reward-curves|lever-trajectories|consistency-scatter")
        ->required();
    plot_sub->add_option("--in", plot.in, "input directory or file")->required();
    plot_sub->add_option("--out", plot.out, "output CSV")->required();
    plot_sub->add_option("--smooth", plot.smooth, "rolling-mean window for training curves");
    plot_sub->add_flag("--force", plot.force, "overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen_sub->parsed()) return gen.run();
        if (sim_sub->parsed()) return sim.run();
        if (mkds_sub->parsed()) return mkds.run();
        if (tsur_sub->parsed()) return tsur.run();
        if (esur_sub->parsed()) return esur.run();
        if (ep_sub->parsed()) return ep.run();
        if (marl_sub->parsed()) return marl.run();
        if (cons_sub->parsed()) return cons.run();
        if (bench_sub->parsed()) return bench.run();
        if (plot_sub->parsed()) return plot.run();
    } catch (const MissingFileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const HashMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const WouldOverwriteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
