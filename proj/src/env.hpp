#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "engine.hpp"
#include "species.hpp"
#include "surrogate.hpp"
#include "trajectory.hpp"

namespace scmgame {

// Discrete action: index into the effort/adaptation level tables.
struct AgentAction {
    int energy = 0;
    int methane = 0;
    int agriculture = 0;
    int adaptation = 0;
};

struct ScenarioSpec {
    std::string name = "scenario_i";
    int n_agents = 4;
    std::vector<double> shares;  // per agent, applied uniformly across gases
    // Rows: energy, methane, agriculture; columns follow the controllable order.
    std::array<std::array<double, 5>, 3> policy_matrix{};
    std::vector<double> effort_levels = {0.0, 0.5, 1.0};
    std::vector<double> adaptation_levels = {0.0, 0.03, 0.08};
    // Per-agent cost coefficients.
    std::vector<double> c_climate, c_energy, c_methane, c_agriculture, c_prevention;
    double phi = 0.95;
    double p_max = 0.0;
    double psi = 0.003;
    double eta = 0.1;
    double gamma = 0.999;
    int start_year = 2016;
    int horizon = 35;    // episode years, 2016..2050
    int lookahead = 15;  // terminal rollout years

    int end_year() const { return start_year + horizon - 1; }
    void validate() const;

    static ScenarioSpec scenario_i();
    static ScenarioSpec scenario_ii();
    static ScenarioSpec from_json_file(const std::string& path);
    static ScenarioSpec from_json_text(const std::string& text);
    std::string to_json() const;
};

// Growth deviations induced by one agent's mitigation efforts, over the
// controllable gases.
std::array<double, 5> lever_to_growth(const std::array<double, 3>& efforts,
                                      const std::array<std::array<double, 5>, 3>& policy_matrix);

// Uniform interface over the two climate engines plus a test mock. The step
// takes the full 40-gas global emission vector; each backend filters to what
// it consumes.
class EngineBackend {
  public:
    virtual ~EngineBackend() = default;
    virtual double step(const std::vector<double>& global_emissions) = 0;
    virtual double last_temp() const = 0;
    virtual std::unique_ptr<EngineBackend> clone() const = 0;
    virtual std::string tag() const = 0;
};

class SimulatorBackend final : public EngineBackend {
  public:
    SimulatorBackend(const EngineParams& params, const SpeciesRegistry& registry,
                     const EmissionTrajectory& historical);
    explicit SimulatorBackend(ClimateEngine engine) : engine_(std::move(engine)) {}
    double step(const std::vector<double>& global_emissions) override;
    double last_temp() const override { return engine_.last_temp(); }
    std::unique_ptr<EngineBackend> clone() const override;
    std::string tag() const override { return "sim"; }
    const ClimateEngine& engine() const { return engine_; }

  private:
    ClimateEngine engine_;
};

class SurrogateBackend final : public EngineBackend {
  public:
    // historical: full-gas baseline; projection to controllables happens here.
    SurrogateBackend(std::shared_ptr<const Surrogate> model, const SpeciesRegistry& registry,
                     const EmissionTrajectory& historical, double last_historical_temp);
    double step(const std::vector<double>& global_emissions) override;
    double last_temp() const override { return last_temp_; }
    std::unique_ptr<EngineBackend> clone() const override;
    std::string tag() const override;

  private:
    std::shared_ptr<const Surrogate> model_;
    const SpeciesRegistry* registry_;
    SurrogateStepper stepper_;
    double last_temp_ = 0.0;  // seeded with the historical value until first step
};

// Deterministic fixed-temperature backend for plumbing tests.
class MockBackend final : public EngineBackend {
  public:
    explicit MockBackend(double fixed_temp) : temp_(fixed_temp) {}
    double step(const std::vector<double>&) override { return temp_; }
    double last_temp() const override { return temp_; }
    std::unique_ptr<EngineBackend> clone() const override {
        return std::make_unique<MockBackend>(temp_);
    }
    std::string tag() const override { return "mock"; }

  private:
    double temp_;
};

struct EpisodeRecord {
    std::string engine_tag;
    int start_year = 2016;
    std::vector<std::vector<AgentAction>> actions;   // [step][agent]
    std::vector<std::vector<double>> rewards;        // [step][agent]
    std::vector<std::vector<double>> emissions;      // global Ē(t), H+U rows x |G|
    std::vector<double> temps;                       // ΔT(t), H+U entries

    std::string to_json() const;
    static EpisodeRecord from_json(const std::string& text);
};

// The finite-horizon climate-mitigation game. One instance is single-writer;
// run several instances for parallel rollouts.
class ClimateGameEnv {
  public:
    // factory is called on every reset so each episode gets a fresh engine.
    using BackendFactory = std::function<std::unique_ptr<EngineBackend>()>;

    ClimateGameEnv(ScenarioSpec spec, const SpeciesRegistry& registry,
                   const EmissionTrajectory& baseline, BackendFactory factory);

    std::vector<double> reset();

    struct StepResult {
        std::vector<double> observation;
        std::vector<double> rewards;
        bool done = false;
    };
    StepResult step(const std::vector<AgentAction>& actions);

    int observation_size() const { return 2 + spec_.n_agents * (2 * 5 + 1); }
    int year() const { return year_; }
    const ScenarioSpec& spec() const { return spec_; }
    const EpisodeRecord& record() const { return record_; }
    const std::vector<double>& prevention_stocks() const { return prevention_; }
    const std::vector<std::vector<double>>& agent_emissions() const { return agent_emissions_; }

  private:
    std::vector<double> build_observation() const;
    double compute_reward(int agent, const AgentAction& action, double temp) const;
    std::vector<double> terminal_lookahead();

    ScenarioSpec spec_;
    const SpeciesRegistry* registry_;
    EmissionTrajectory baseline_;
    std::vector<std::vector<double>> baseline_growth_;  // growth into year start+i
    BackendFactory factory_;
    std::unique_ptr<EngineBackend> backend_;

    int year_ = 0;
    double last_temp_ = 0.0;
    std::vector<std::vector<double>> agent_emissions_;       // [agent][gas]
    std::vector<std::array<double, 5>> cumulative_deviation_;  // [agent][ctrl gas]
    std::vector<double> prevention_;
    EpisodeRecord record_;
    bool done_ = true;
};

}  // namespace scmgame
