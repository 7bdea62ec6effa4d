#include "policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scmgame {

using nlohmann::json;
using nn::Mat;
using nn::Var;

namespace {

constexpr char kPolicyMagic[8] = {'S', 'C', 'M', 'P', 'O', 'L', '0', '1'};
constexpr const char* kGateNames[4] = {"i", "f", "o", "g"};

std::string head_name(int k) { return "head" + std::to_string(k); }

int action_index(const AgentAction& a, int head) {
    switch (head) {
        case 0: return a.energy;
        case 1: return a.methane;
        case 2: return a.agriculture;
        default: return a.adaptation;
    }
}

int& action_index(AgentAction& a, int head) {
    switch (head) {
        case 0: return a.energy;
        case 1: return a.methane;
        case 2: return a.agriculture;
        default: return a.adaptation;
    }
}

Eigen::Vector3d stable_softmax(const Eigen::Vector3d& logits) {
    Eigen::Vector3d z = logits.array() - logits.maxCoeff();
    Eigen::Vector3d e = z.array().exp();
    return e / e.sum();
}

}  // namespace

void PolicyConfig::validate() const {
    if (obs_dim < 1) throw std::runtime_error("policy: obs_dim must be positive");
    if (hidden_dim < 1) throw std::runtime_error("policy: hidden_dim must be positive");
}

PolicyNet::PolicyNet(PolicyConfig config) : config_(config) {
    config_.validate();
    rng::Stream stream(rng::key(config_.seed, 0x706f6c69ULL, 0, 0));
    const int h = config_.hidden_dim;
    const int d = config_.obs_dim;
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const double rec_scale = 1.0 / std::sqrt(static_cast<double>(h));
    for (const char* gate : kGateNames) {
        params_.add(std::string("lstm.W") + gate, h, d, in_scale, stream);
        params_.add(std::string("lstm.U") + gate, h, h, rec_scale, stream);
        params_.add(std::string("lstm.b") + gate, h, 1, 0.0, stream);
    }
    params_.tensor("lstm.bf").setOnes();  // encourage long memory early on
    for (int k = 0; k < kPolicyHeads; ++k) {
        params_.add(head_name(k) + ".W", kPolicyLevels, h, rec_scale, stream);
        params_.add(head_name(k) + ".b", kPolicyLevels, 1, 0.0, stream);
    }
    params_.add("value.W", 1, h, rec_scale, stream);
    params_.add("value.b", 1, 1, 0.0, stream);
}

LstmState PolicyNet::initial_state() const {
    LstmState s;
    s.h = Eigen::VectorXd::Zero(config_.hidden_dim);
    s.c = Eigen::VectorXd::Zero(config_.hidden_dim);
    return s;
}

void PolicyNet::lstm_cell(const Eigen::VectorXd& x, LstmState& state) const {
    auto gate = [&](const char* g) -> Eigen::VectorXd {
        return params_.tensor(std::string("lstm.W") + g) * x +
               params_.tensor(std::string("lstm.U") + g) * state.h +
               params_.tensor(std::string("lstm.b") + g).col(0);
    };
    Eigen::VectorXd i = gate("i").unaryExpr([](double v) { return nn::sigmoid_scalar(v); });
    Eigen::VectorXd f = gate("f").unaryExpr([](double v) { return nn::sigmoid_scalar(v); });
    Eigen::VectorXd o = gate("o").unaryExpr([](double v) { return nn::sigmoid_scalar(v); });
    Eigen::VectorXd g = gate("g").array().tanh();
    state.c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
    state.h = o.cwiseProduct(state.c.array().tanh().matrix());
}

std::array<Eigen::Vector3d, kPolicyHeads> PolicyNet::head_probs(const std::vector<double>& obs,
                                                                LstmState& state) const {
    if (static_cast<int>(obs.size()) != config_.obs_dim)
        throw std::runtime_error("policy: observation size mismatch");
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), config_.obs_dim);
    lstm_cell(x, state);
    std::array<Eigen::Vector3d, kPolicyHeads> probs;
    for (int k = 0; k < kPolicyHeads; ++k) {
        Eigen::Vector3d logits = params_.tensor(head_name(k) + ".W") * state.h +
                                 params_.tensor(head_name(k) + ".b").col(0);
        probs[static_cast<std::size_t>(k)] = stable_softmax(logits);
    }
    return probs;
}

ActResult PolicyNet::act(const std::vector<double>& obs, LstmState& state,
                         rng::Stream* stream) const {
    auto probs = head_probs(obs, state);
    ActResult result;
    for (int k = 0; k < kPolicyHeads; ++k) {
        const Eigen::Vector3d& p = probs[static_cast<std::size_t>(k)];
        int pick = 0;
        if (stream) {
            const double u = stream->next_uniform(0.0, 1.0);
            double acc = 0.0;
            for (int j = 0; j < kPolicyLevels; ++j) {
                acc += p(j);
                if (u < acc) {
                    pick = j;
                    break;
                }
                pick = j;  // numerical tail lands on the last level
            }
        } else {
            p.maxCoeff(&pick);
        }
        action_index(result.action, k) = pick;
        result.log_prob += std::log(p(pick));
    }
    result.value = (params_.tensor("value.W") * state.h)(0) + params_.tensor("value.b")(0, 0);
    return result;
}

PolicyNet::Unrolled PolicyNet::unroll(nn::Tape& tape,
                                      const std::vector<std::vector<double>>& observations,
                                      const std::vector<AgentAction>& actions) {
    if (observations.size() != actions.size())
        throw std::runtime_error("policy: unroll length mismatch");
    auto pvar = [&](const std::string& name) {
        return tape.param(params_.tensor(name), &params_.grad(name));
    };
    struct Gate {
        Var W, U, b;
    };
    std::array<Gate, 4> gates;
    for (int g = 0; g < 4; ++g)
        gates[static_cast<std::size_t>(g)] = {pvar(std::string("lstm.W") + kGateNames[g]),
                                              pvar(std::string("lstm.U") + kGateNames[g]),
                                              pvar(std::string("lstm.b") + kGateNames[g])};
    std::array<Var, kPolicyHeads> head_w, head_b;
    for (int k = 0; k < kPolicyHeads; ++k) {
        head_w[static_cast<std::size_t>(k)] = pvar(head_name(k) + ".W");
        head_b[static_cast<std::size_t>(k)] = pvar(head_name(k) + ".b");
    }
    Var value_w = pvar("value.W");
    Var value_b = pvar("value.b");

    Var h = tape.input(Mat::Zero(config_.hidden_dim, 1));
    Var c = tape.input(Mat::Zero(config_.hidden_dim, 1));

    Unrolled out;
    for (std::size_t t = 0; t < observations.size(); ++t) {
        if (static_cast<int>(observations[t].size()) != config_.obs_dim)
            throw std::runtime_error("policy: observation size mismatch");
        Var x = tape.input(
            Eigen::Map<const Eigen::VectorXd>(observations[t].data(), config_.obs_dim));
        auto pre = [&](const Gate& g) {
            return tape.add(tape.add(tape.matmul(g.W, x), tape.matmul(g.U, h)), g.b);
        };
        Var i = tape.sigmoid(pre(gates[0]));
        Var f = tape.sigmoid(pre(gates[1]));
        Var o = tape.sigmoid(pre(gates[2]));
        Var g = tape.tanh(pre(gates[3]));
        c = tape.add(tape.hadamard(f, c), tape.hadamard(i, g));
        h = tape.hadamard(o, tape.tanh(c));

        Var step_log_prob;
        Var step_entropy;
        for (int k = 0; k < kPolicyHeads; ++k) {
            Var logits = tape.add(tape.matmul(head_w[static_cast<std::size_t>(k)], h),
                                  head_b[static_cast<std::size_t>(k)]);
            Var lsm = tape.log_softmax_cols(logits);
            Mat onehot = Mat::Zero(kPolicyLevels, 1);
            onehot(action_index(actions[t], k), 0) = 1.0;
            Var taken = tape.sum(tape.hadamard(lsm, tape.input(onehot)));
            Var ent = tape.scale(tape.sum(tape.hadamard(tape.exp(lsm), lsm)), -1.0);
            step_log_prob = step_log_prob.valid() ? tape.add(step_log_prob, taken) : taken;
            step_entropy = step_entropy.valid() ? tape.add(step_entropy, ent) : ent;
        }
        out.log_probs.push_back(step_log_prob);
        out.entropies.push_back(step_entropy);
        out.values.push_back(tape.add(tape.matmul(value_w, h), value_b));
    }
    return out;
}

void PolicyNet::save(std::ostream& out) const {
    json header;
    header["obs_dim"] = config_.obs_dim;
    header["hidden_dim"] = config_.hidden_dim;
    header["seed"] = config_.seed;
    const std::string text = header.dump();
    out.write(kPolicyMagic, sizeof(kPolicyMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    params_.save(out);
    if (!out) throw std::runtime_error("policy: write failed");
}

PolicyNet PolicyNet::load(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kPolicyMagic, sizeof(magic)) != 0)
        throw std::runtime_error("policy: bad checkpoint magic");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("policy: truncated checkpoint header");
    json header = json::parse(text);
    PolicyConfig config;
    config.obs_dim = header.at("obs_dim").get<int>();
    config.hidden_dim = header.at("hidden_dim").get<int>();
    config.seed = header.at("seed").get<std::uint64_t>();
    PolicyNet net(config);
    net.params_.load(in);
    return net;
}

void PolicyNet::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("policy: cannot open " + path);
    save(out);
}

PolicyNet PolicyNet::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("policy: cannot open " + path);
    return load(in);
}

}  // namespace scmgame
