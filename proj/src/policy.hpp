#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "env.hpp"
#include "nn/optim.hpp"
#include "nn/tape.hpp"
#include "rng.hpp"

namespace scmgame {

// Four discrete levers, three levels each.
inline constexpr int kPolicyHeads = 4;
inline constexpr int kPolicyLevels = 3;

struct PolicyConfig {
    int obs_dim = 0;
    int hidden_dim = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LstmState {
    Eigen::VectorXd h, c;
};

struct ActResult {
    AgentAction action;
    double log_prob = 0.0;  // summed over the four heads
    double value = 0.0;
};

// Recurrent actor-critic: one LSTM core, four categorical heads, one value
// head. The fast path (act/evaluate) runs plain Eigen; the tape path unrolls
// whole episodes for training and shares the same parameters.
class PolicyNet {
  public:
    explicit PolicyNet(PolicyConfig config);

    const PolicyConfig& config() const { return config_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    LstmState initial_state() const;

    // stream == nullptr takes the per-head argmax (deterministic evaluation).
    ActResult act(const std::vector<double>& obs, LstmState& state, rng::Stream* stream) const;

    // Per-head probabilities at a given observation (diagnostics, tests).
    std::array<Eigen::Vector3d, kPolicyHeads> head_probs(const std::vector<double>& obs,
                                                         LstmState& state) const;

    struct Unrolled {
        std::vector<nn::Var> log_probs;  // log pi(a_t | o_<=t), scalar per step
        std::vector<nn::Var> entropies;  // summed over heads, scalar per step
        std::vector<nn::Var> values;     // V(o_t), scalar per step
    };
    // Tape forward over a whole episode; gradients land in params().grad(...).
    Unrolled unroll(nn::Tape& tape, const std::vector<std::vector<double>>& observations,
                    const std::vector<AgentAction>& actions);

    void save(std::ostream& out) const;
    static PolicyNet load(std::istream& in);
    void save_file(const std::string& path) const;
    static PolicyNet load_file(const std::string& path);

  private:
    void lstm_cell(const Eigen::VectorXd& x, LstmState& state) const;

    PolicyConfig config_;
    nn::ParamStore params_;
};

}  // namespace scmgame
