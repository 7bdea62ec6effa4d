#include "env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "scenario.hpp"

namespace scmgame {

using nlohmann::json;

void ScenarioSpec::validate() const {
    if (n_agents < 1) throw std::runtime_error("spec: need at least one agent");
    auto check_len = [&](const std::vector<double>& v, const char* what) {
        if (static_cast<int>(v.size()) != n_agents)
            throw std::runtime_error(std::string("spec: ") + what + " must have one entry per agent");
    };
    check_len(shares, "shares");
    check_len(c_climate, "climate costs");
    check_len(c_energy, "energy costs");
    check_len(c_methane, "methane costs");
    check_len(c_agriculture, "agriculture costs");
    check_len(c_prevention, "prevention costs");
    double share_sum = 0.0;
    for (double s : shares) {
        if (s < 0.0) throw std::runtime_error("spec: negative share");
        share_sum += s;
    }
    if (std::abs(share_sum - 1.0) > 1e-12)
        throw std::runtime_error("spec: agent shares must sum to 1");
    for (const auto& costs : {c_climate, c_energy, c_methane, c_agriculture, c_prevention})
        for (double c : costs)
            if (c < 0.0) throw std::runtime_error("spec: negative cost coefficient");
    if (effort_levels.size() != 3 || adaptation_levels.size() != 3)
        throw std::runtime_error("spec: level tables must have 3 entries");
    if (phi < 0.0 || phi > 1.0) throw std::runtime_error("spec: phi must be in [0,1]");
    if (p_max < 0.0 || p_max > 1.0) throw std::runtime_error("spec: p_max must be in [0,1]");
    if (horizon < 1 || lookahead < 0) throw std::runtime_error("spec: bad horizon");
}

ScenarioSpec ScenarioSpec::scenario_i() {
    ScenarioSpec s;
    s.name = "scenario_i";
    s.n_agents = 4;
    s.shares = {0.25, 0.25, 0.25, 0.25};
    // Controllable order: CO2_FF, CO2_AFOLU, CH4, N2O, SO2.
    s.policy_matrix = {{{-0.05, 0.0, -0.005, -0.005, -0.05},   // energy
                        {0.0, 0.0, 0.0, 0.0, 0.0},             // methane
                        {0.0, 0.0, 0.0, 0.0, 0.0}}};           // agriculture
    s.c_climate = {100.0, 100.0, 100.0, 100.0};
    s.c_energy = {1e-3, 1e-3, 1e-3, 1e-3};
    s.c_methane = {10.0, 10.0, 10.0, 10.0};
    s.c_agriculture = {10.0, 10.0, 10.0, 10.0};
    s.c_prevention = {10.0, 10.0, 10.0, 10.0};
    s.phi = 0.95;
    s.p_max = 0.0;
    return s;
}

ScenarioSpec ScenarioSpec::scenario_ii() {
    ScenarioSpec s;
    s.name = "scenario_ii";
    s.n_agents = 10;
    s.shares = {0.35, 0.15, 0.10, 0.05, 0.02, 0.01, 0.03, 0.14, 0.1, 0.05};
    s.policy_matrix = {{{-0.05, 0.0, -0.005, -0.005, -0.05},   // energy
                        {0.0, 0.0, -0.04, 0.0, 0.0},           // methane
                        {0.0, -0.04, -0.005, -0.03, 0.0}}};    // agriculture
    s.c_climate = {50, 50, 100, 100, 10, 25, 50, 1000, 1, 15};
    s.c_energy = {1e-3, 1e-2, 1e-1, 10, 1e-1, 1e-3, 1e-2, 1e-1, 10, 1e-1};
    s.c_methane = {1e-3, 1e-2, 10, 1e-1, 1e-1, 2e-1, 5e-2, 1e-1, 10, 1e-1};
    s.c_agriculture = {1e-1, 10, 1e-2, 1e-3, 1e-1, 1e-3, 10, 100, 10, 1e-1};
    s.c_prevention = {10, 1e-1, 1e-2, 1e-3, 1e-1, 1e-3, 1e-2, 1e-1, 10, 1e-1};
    s.phi = 0.95;
    s.p_max = 0.5;
    return s;
}

std::string ScenarioSpec::to_json() const {
    json j;
    j["name"] = name;
    j["n_agents"] = n_agents;
    j["shares"] = shares;
    j["policy_matrix"] = policy_matrix;
    j["effort_levels"] = effort_levels;
    j["adaptation_levels"] = adaptation_levels;
    j["costs"] = {{"climate", c_climate},
                  {"energy", c_energy},
                  {"methane", c_methane},
                  {"agriculture", c_agriculture},
                  {"prevention", c_prevention}};
    j["phi"] = phi;
    j["p_max"] = p_max;
    j["psi"] = psi;
    j["eta"] = eta;
    j["gamma"] = gamma;
    j["start_year"] = start_year;
    j["horizon"] = horizon;
    j["lookahead"] = lookahead;
    return j.dump(2);
}

ScenarioSpec ScenarioSpec::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ScenarioSpec s;
    s.name = j.at("name").get<std::string>();
    s.n_agents = j.at("n_agents").get<int>();
    s.shares = j.at("shares").get<std::vector<double>>();
    s.policy_matrix = j.at("policy_matrix").get<std::array<std::array<double, 5>, 3>>();
    s.effort_levels = j.at("effort_levels").get<std::vector<double>>();
    s.adaptation_levels = j.at("adaptation_levels").get<std::vector<double>>();
    s.c_climate = j.at("costs").at("climate").get<std::vector<double>>();
    s.c_energy = j.at("costs").at("energy").get<std::vector<double>>();
    s.c_methane = j.at("costs").at("methane").get<std::vector<double>>();
    s.c_agriculture = j.at("costs").at("agriculture").get<std::vector<double>>();
    s.c_prevention = j.at("costs").at("prevention").get<std::vector<double>>();
    s.phi = j.at("phi").get<double>();
    s.p_max = j.at("p_max").get<double>();
    s.psi = j.at("psi").get<double>();
    s.eta = j.at("eta").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.start_year = j.at("start_year").get<int>();
    s.horizon = j.at("horizon").get<int>();
    s.lookahead = j.at("lookahead").get<int>();
    s.validate();
    return s;
}

ScenarioSpec ScenarioSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("spec: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::array<double, 5> lever_to_growth(const std::array<double, 3>& efforts,
                                      const std::array<std::array<double, 5>, 3>& policy_matrix) {
    std::array<double, 5> out{};
    for (std::size_t row = 0; row < 3; ++row)
        for (std::size_t g = 0; g < 5; ++g) out[g] += efforts[row] * policy_matrix[row][g];
    return out;
}

SimulatorBackend::SimulatorBackend(const EngineParams& params, const SpeciesRegistry& registry,
                                   const EmissionTrajectory& historical)
    : engine_(params, registry, historical) {}

double SimulatorBackend::step(const std::vector<double>& global_emissions) {
    return engine_.step(global_emissions);
}

std::unique_ptr<EngineBackend> SimulatorBackend::clone() const {
    return std::make_unique<SimulatorBackend>(engine_.clone());
}

SurrogateBackend::SurrogateBackend(std::shared_ptr<const Surrogate> model,
                                   const SpeciesRegistry& registry,
                                   const EmissionTrajectory& historical,
                                   double last_historical_temp)
    : model_(std::move(model)),
      registry_(&registry),
      stepper_([&]() {
          std::vector<std::vector<double>> hist;
          for (const auto& row : historical.values)
              hist.push_back(registry.project_controllable(row));
          return SurrogateStepper(*model_, hist, historical.end_year());
      }()),
      last_temp_(last_historical_temp) {}

double SurrogateBackend::step(const std::vector<double>& global_emissions) {
    last_temp_ = stepper_.step(registry_->project_controllable(global_emissions));
    return last_temp_;
}

std::unique_ptr<EngineBackend> SurrogateBackend::clone() const {
    return std::make_unique<SurrogateBackend>(*this);
}

std::string SurrogateBackend::tag() const { return to_string(model_->config().encoder); }

std::string EpisodeRecord::to_json() const {
    json j;
    j["engine_tag"] = engine_tag;
    j["start_year"] = start_year;
    json acts = json::array();
    for (const auto& step : actions) {
        json per_agent = json::array();
        for (const auto& a : step)
            per_agent.push_back({a.energy, a.methane, a.agriculture, a.adaptation});
        acts.push_back(per_agent);
    }
    j["actions"] = acts;
    j["rewards"] = rewards;
    j["emissions"] = emissions;
    j["temps"] = temps;
    return j.dump();
}

EpisodeRecord EpisodeRecord::from_json(const std::string& text) {
    json j = json::parse(text);
    EpisodeRecord r;
    r.engine_tag = j.at("engine_tag").get<std::string>();
    r.start_year = j.at("start_year").get<int>();
    for (const auto& step : j.at("actions")) {
        std::vector<AgentAction> per_agent;
        for (const auto& a : step)
            per_agent.push_back({a.at(0).get<int>(), a.at(1).get<int>(), a.at(2).get<int>(),
                                 a.at(3).get<int>()});
        r.actions.push_back(std::move(per_agent));
    }
    r.rewards = j.at("rewards").get<std::vector<std::vector<double>>>();
    r.emissions = j.at("emissions").get<std::vector<std::vector<double>>>();
    r.temps = j.at("temps").get<std::vector<double>>();
    return r;
}

ClimateGameEnv::ClimateGameEnv(ScenarioSpec spec, const SpeciesRegistry& registry,
                               const EmissionTrajectory& baseline, BackendFactory factory)
    : spec_(std::move(spec)), registry_(&registry), baseline_(baseline),
      factory_(std::move(factory)) {
    spec_.validate();
    const int needed_end = spec_.end_year() + spec_.lookahead;
    if (!baseline_.covers(spec_.start_year - 1) || !baseline_.covers(needed_end))
        throw std::runtime_error("env: baseline must cover " +
                                 std::to_string(spec_.start_year - 1) + ".." +
                                 std::to_string(needed_end));
    baseline_growth_ = baseline_growth(baseline_);
}

std::vector<double> ClimateGameEnv::reset() {
    backend_ = factory_();
    year_ = spec_.start_year - 1;
    last_temp_ = backend_->last_temp();
    const auto& base_2015 = baseline_.row(year_);
    agent_emissions_.assign(static_cast<std::size_t>(spec_.n_agents), {});
    for (int i = 0; i < spec_.n_agents; ++i) {
        auto& e = agent_emissions_[static_cast<std::size_t>(i)];
        e.resize(registry_->size());
        for (std::size_t g = 0; g < registry_->size(); ++g)
            e[g] = spec_.shares[static_cast<std::size_t>(i)] * base_2015[g];
    }
    cumulative_deviation_.assign(static_cast<std::size_t>(spec_.n_agents), {});
    prevention_.assign(static_cast<std::size_t>(spec_.n_agents), 0.0);
    record_ = EpisodeRecord{};
    record_.engine_tag = backend_->tag();
    record_.start_year = spec_.start_year;
    done_ = false;
    return build_observation();
}

std::vector<double> ClimateGameEnv::build_observation() const {
    std::vector<double> obs;
    obs.reserve(static_cast<std::size_t>(observation_size()));
    obs.push_back(last_temp_);
    // Observation is for the decision at year t; the terminal observation
    // (no decision left) keeps tau pinned at 1.
    const int t = std::min(year_ + 1, spec_.end_year());
    obs.push_back(spec_.horizon > 1
                      ? static_cast<double>(t - spec_.start_year) / static_cast<double>(spec_.horizon - 1)
                      : 0.0);
    for (int i = 0; i < spec_.n_agents; ++i) {
        auto ctrl = registry_->project_controllable(agent_emissions_[static_cast<std::size_t>(i)]);
        obs.insert(obs.end(), ctrl.begin(), ctrl.end());
    }
    for (int i = 0; i < spec_.n_agents; ++i)
        for (double d : cumulative_deviation_[static_cast<std::size_t>(i)]) obs.push_back(d);
    for (double p : prevention_) obs.push_back(p);
    return obs;
}

double ClimateGameEnv::compute_reward(int agent, const AgentAction& action, double temp) const {
    const auto ai = static_cast<std::size_t>(agent);
    const double e = spec_.effort_levels.at(static_cast<std::size_t>(action.energy));
    const double m = spec_.effort_levels.at(static_cast<std::size_t>(action.methane));
    const double l = spec_.effort_levels.at(static_cast<std::size_t>(action.agriculture));
    const double p = spec_.adaptation_levels.at(static_cast<std::size_t>(action.adaptation));
    const double t4 = temp * temp * temp * temp;
    const double climate = spec_.c_climate[ai] * spec_.psi * t4 * (1.0 - prevention_[ai]);
    const double policy = spec_.c_energy[ai] * e * e + spec_.c_methane[ai] * m * m +
                          spec_.c_agriculture[ai] * l * l;
    const double prevention = spec_.c_prevention[ai] * p;
    return -spec_.eta * (climate + policy + prevention);
}

ClimateGameEnv::StepResult ClimateGameEnv::step(const std::vector<AgentAction>& actions) {
    if (done_) throw std::runtime_error("env: step after episode end; call reset()");
    if (static_cast<int>(actions.size()) != spec_.n_agents)
        throw std::runtime_error("env: expected one action per agent");
    const int t = year_ + 1;
    const auto& growth = baseline_growth_[static_cast<std::size_t>(t - baseline_.start_year - 1)];
    const auto& ctrl_idx = registry_->controllable_indices();

    std::vector<double> global(registry_->size(), 0.0);
    for (int i = 0; i < spec_.n_agents; ++i) {
        const auto ai = static_cast<std::size_t>(i);
        const AgentAction& a = actions[ai];
        const std::array<double, 3> efforts = {
            spec_.effort_levels.at(static_cast<std::size_t>(a.energy)),
            spec_.effort_levels.at(static_cast<std::size_t>(a.methane)),
            spec_.effort_levels.at(static_cast<std::size_t>(a.agriculture))};
        const auto deviation = lever_to_growth(efforts, spec_.policy_matrix);

        auto& e = agent_emissions_[ai];
        for (std::size_t g = 0; g < registry_->size(); ++g) {
            double eff = growth[g];
            e[g] *= eff;
        }
        for (std::size_t c = 0; c < ctrl_idx.size(); ++c) {
            // Controllables get the (1 + deviation) factor on top of baseline growth.
            e[ctrl_idx[c]] *= 1.0 + deviation[c];
            if (e[ctrl_idx[c]] < 0.0) e[ctrl_idx[c]] = 0.0;
        }
        for (std::size_t g = 0; g < registry_->size(); ++g) global[g] += e[g];

        for (std::size_t c = 0; c < ctrl_idx.size(); ++c)
            cumulative_deviation_[ai][c] +=
                e[ctrl_idx[c]] - spec_.shares[ai] * baseline_.row(t)[ctrl_idx[c]];

        const double p = spec_.adaptation_levels.at(static_cast<std::size_t>(a.adaptation));
        prevention_[ai] = std::min(spec_.p_max, prevention_[ai] * spec_.phi + p);
    }

    last_temp_ = backend_->step(global);
    year_ = t;

    StepResult result;
    result.rewards.resize(static_cast<std::size_t>(spec_.n_agents));
    for (int i = 0; i < spec_.n_agents; ++i)
        result.rewards[static_cast<std::size_t>(i)] = compute_reward(i, actions[static_cast<std::size_t>(i)], last_temp_);

    record_.actions.push_back(actions);
    record_.emissions.push_back(global);
    record_.temps.push_back(last_temp_);

    result.done = (year_ == spec_.end_year());
    if (result.done) {
        auto penalties = terminal_lookahead();
        for (int i = 0; i < spec_.n_agents; ++i)
            result.rewards[static_cast<std::size_t>(i)] -=
                spec_.eta * penalties[static_cast<std::size_t>(i)];
        done_ = true;
    }
    record_.rewards.push_back(result.rewards);
    result.observation = build_observation();
    return result;
}

std::vector<double> ClimateGameEnv::terminal_lookahead() {
    std::vector<double> penalties(static_cast<std::size_t>(spec_.n_agents), 0.0);
    std::vector<double> global = record_.emissions.back();
    for (int u = 1; u <= spec_.lookahead; ++u) {
        const int y = spec_.end_year() + u;
        const auto& growth = baseline_growth_[static_cast<std::size_t>(y - baseline_.start_year - 1)];
        for (std::size_t g = 0; g < global.size(); ++g) global[g] *= growth[g];
        const double temp = backend_->step(global);
        record_.emissions.push_back(global);
        record_.temps.push_back(temp);
        const double t4 = temp * temp * temp * temp;
        for (int i = 0; i < spec_.n_agents; ++i) {
            const auto ai = static_cast<std::size_t>(i);
            const double p = std::min(spec_.p_max, prevention_[ai] *
                                                       std::pow(spec_.phi, static_cast<double>(u)));
            penalties[ai] += spec_.c_climate[ai] * spec_.psi * t4 * (1.0 - p);
        }
    }
    return penalties;
}

}  // namespace scmgame
