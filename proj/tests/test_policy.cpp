#include "doctest.h"

#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <vector>

#include "env.hpp"
#include "nn/tape.hpp"
#include "policy.hpp"
#include "ppo.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "species.hpp"

using namespace scmgame;

namespace {

std::vector<double> random_obs(int n, rng::Stream& s) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = s.next_uniform(-1.0, 1.0);
    return v;
}

PolicyConfig tiny_config(int obs_dim = 6, int hidden = 4, std::uint64_t seed = 42) {
    PolicyConfig c;
    c.obs_dim = obs_dim;
    c.hidden_dim = hidden;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("head probabilities are normalized distributions at every step") {
    PolicyNet net(tiny_config(10, 8));
    rng::Stream s(5);
    auto state = net.initial_state();
    for (int t = 0; t < 20; ++t) {
        auto probs = net.head_probs(random_obs(10, s), state);
        for (const auto& p : probs) {
            CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
            for (int j = 0; j < 3; ++j) CHECK(p(j) > 0.0);
        }
    }
}

TEST_CASE("greedy action is reproducible and sampling follows the seed") {
    PolicyNet net(tiny_config());
    rng::Stream obs_stream(9);
    auto obs = random_obs(6, obs_stream);

    auto s1 = net.initial_state();
    auto s2 = net.initial_state();
    auto g1 = net.act(obs, s1, nullptr);
    auto g2 = net.act(obs, s2, nullptr);
    CHECK(g1.action.energy == g2.action.energy);
    CHECK(g1.log_prob == g2.log_prob);
    CHECK(g1.value == g2.value);

    rng::Stream a(123), b(123);
    auto sa = net.initial_state();
    auto sb = net.initial_state();
    auto ra = net.act(obs, sa, &a);
    auto rb = net.act(obs, sb, &b);
    CHECK(ra.action.adaptation == rb.action.adaptation);
    CHECK(ra.log_prob == rb.log_prob);
}

TEST_CASE("hidden state carries information across steps") {
    PolicyNet net(tiny_config());
    rng::Stream s(31);
    auto obs1 = random_obs(6, s);
    auto obs2 = random_obs(6, s);
    // Same second observation, different first observation -> different value.
    auto sa = net.initial_state();
    auto sb = net.initial_state();
    net.act(obs1, sa, nullptr);
    net.act(obs2, sb, nullptr);
    auto va = net.act(obs2, sa, nullptr);
    auto vb = net.act(obs2, sb, nullptr);
    CHECK(va.value != vb.value);
}

TEST_CASE("policy checkpoint round-trips bitwise") {
    PolicyNet net(tiny_config(12, 6, 77));
    std::stringstream buf;
    net.save(buf);
    PolicyNet back = PolicyNet::load(buf);
    CHECK(back.config().obs_dim == 12);
    CHECK(back.params().flatten_values() == net.params().flatten_values());
    // Same behaviour too.
    rng::Stream s(1);
    auto obs = random_obs(12, s);
    auto st1 = net.initial_state();
    auto st2 = back.initial_state();
    CHECK(net.act(obs, st1, nullptr).log_prob == back.act(obs, st2, nullptr).log_prob);
}

TEST_CASE("tape unroll reproduces the fast path log-probs and values") {
    PolicyNet net(tiny_config(8, 5, 3));
    rng::Stream s(17), acts(18);
    std::vector<std::vector<double>> obs;
    std::vector<AgentAction> actions;
    std::vector<double> fast_lp, fast_v;
    auto state = net.initial_state();
    for (int t = 0; t < 7; ++t) {
        obs.push_back(random_obs(8, s));
        auto r = net.act(obs.back(), state, &acts);
        actions.push_back(r.action);
        fast_lp.push_back(r.log_prob);
        fast_v.push_back(r.value);
    }
    nn::Tape tape;
    auto rolled = net.unroll(tape, obs, actions);
    for (int t = 0; t < 7; ++t) {
        CHECK(tape.value(rolled.log_probs[static_cast<std::size_t>(t)])(0, 0) ==
              doctest::Approx(fast_lp[static_cast<std::size_t>(t)]).epsilon(1e-12));
        CHECK(tape.value(rolled.values[static_cast<std::size_t>(t)])(0, 0) ==
              doctest::Approx(fast_v[static_cast<std::size_t>(t)]).epsilon(1e-12));
    }
}

TEST_CASE("unrolled entropy of a fresh policy sits near uniform") {
    PolicyNet net(tiny_config(8, 5, 3));
    rng::Stream s(2);
    nn::Tape tape;
    auto rolled = net.unroll(tape, {random_obs(8, s)}, {AgentAction{}});
    const double max_ent = 4.0 * std::log(3.0);
    const double ent = tape.value(rolled.entropies[0])(0, 0);
    CHECK(ent > 0.9 * max_ent);
    CHECK(ent <= max_ent + 1e-12);
}

TEST_CASE("constant reward, zero values, lambda=1 gives geometric-sum advantages") {
    AgentEpisode ep;
    const double r = -0.5, gamma = 0.9;
    const int T = 10;
    ep.rewards.assign(T, r);
    ep.values.assign(T, 0.0);
    gae_advantages(ep, gamma, 1.0);
    for (int t = 0; t < T; ++t) {
        double expected = 0.0;
        for (int u = t; u < T; ++u) expected += std::pow(gamma, u - t) * r;
        CHECK(ep.advantages[static_cast<std::size_t>(t)] ==
              doctest::Approx(expected).epsilon(1e-12));
        CHECK(ep.returns[static_cast<std::size_t>(t)] ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("lambda=0 reduces GAE to the one-step TD error") {
    AgentEpisode ep;
    ep.rewards = {1.0, -2.0, 0.5};
    ep.values = {0.3, -0.1, 0.2};
    const double gamma = 0.99;
    gae_advantages(ep, gamma, 0.0);
    CHECK(ep.advantages[0] == doctest::Approx(1.0 + gamma * -0.1 - 0.3));
    CHECK(ep.advantages[1] == doctest::Approx(-2.0 + gamma * 0.2 - -0.1));
    CHECK(ep.advantages[2] == doctest::Approx(0.5 - 0.2));
}

TEST_CASE("zero rewards and zero values give zero advantages") {
    AgentEpisode ep;
    ep.rewards.assign(5, 0.0);
    ep.values.assign(5, 0.0);
    gae_advantages(ep, 0.999, 0.95);
    for (double a : ep.advantages) CHECK(a == 0.0);
}

namespace {

// A synthetic single-episode batch played by the given policy.
AgentEpisode play_episode(PolicyNet& net, int T, std::uint64_t seed) {
    rng::Stream obs_s(seed), act_s(seed + 1);
    AgentEpisode ep;
    auto state = net.initial_state();
    for (int t = 0; t < T; ++t) {
        ep.observations.push_back(random_obs(net.config().obs_dim, obs_s));
        auto r = net.act(ep.observations.back(), state, &act_s);
        ep.actions.push_back(r.action);
        ep.log_probs.push_back(r.log_prob);
        ep.values.push_back(r.value);
        ep.rewards.push_back(obs_s.next_uniform(-1.0, 0.0));
    }
    gae_advantages(ep, 0.999, 0.95);
    return ep;
}

}  // namespace

TEST_CASE("PPO loss gradient on a tiny policy matches finite differences") {
    PolicyNet net(tiny_config(6, 4, 11));
    AgentEpisode ep = play_episode(net, 5, 91);
    TrainConfig cfg;
    cfg.hidden_dim = 4;

    auto build_loss = [&](PolicyNet& p, nn::Tape& tape) {
        auto rolled = p.unroll(tape, ep.observations, ep.actions);
        nn::Var total;
        for (std::size_t t = 0; t < ep.rewards.size(); ++t) {
            nn::Var ratio = tape.exp(tape.add_scalar(rolled.log_probs[t], -ep.log_probs[t]));
            nn::Var surr = tape.min_elem(
                tape.scale(ratio, ep.advantages[t]),
                tape.scale(tape.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), ep.advantages[t]));
            nn::Var verr = tape.add_scalar(rolled.values[t], -ep.returns[t]);
            nn::Var step = tape.add(
                tape.add(tape.scale(surr, -1.0),
                         tape.scale(tape.hadamard(verr, verr), cfg.value_coeff)),
                tape.scale(rolled.entropies[t], -cfg.entropy_coeff));
            total = total.valid() ? tape.add(total, step) : step;
        }
        return tape.scale(total, 1.0 / static_cast<double>(ep.rewards.size()));
    };

    net.params().zero_grads();
    nn::Tape tape;
    tape.backward(build_loss(net, tape));
    std::vector<double> analytic = net.params().flatten_grads();

    std::vector<double> theta = net.params().flatten_values();
    const double h = 1e-5;
    for (std::size_t k = 0; k < theta.size(); k += 7) {  // every 7th weight keeps this quick
        auto eval = [&](double v) {
            std::vector<double> shifted = theta;
            shifted[k] = v;
            net.params().unflatten_values(shifted);
            nn::Tape t2;
            return t2.value(build_loss(net, t2))(0, 0);
        };
        const double fd = (eval(theta[k] + h) - eval(theta[k] - h)) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(analytic[k]), 1.0});
        CHECK(std::abs(fd - analytic[k]) / scale < 1e-4);
    }
    net.params().unflatten_values(theta);
}

TEST_CASE("zero advantages and exact value targets leave parameters untouched") {
    PolicyNet net(tiny_config(6, 4, 13));
    AgentEpisode ep = play_episode(net, 6, 7);
    ep.advantages.assign(ep.rewards.size(), 0.0);
    ep.returns = ep.values;  // value error is zero too
    TrainConfig cfg;
    cfg.entropy_coeff = 0.0;
    cfg.value_coeff = 0.0;  // isolate the policy-gradient term
    cfg.epochs_per_update = 1;
    nn::Adam opt(cfg.learning_rate);
    auto before = net.params().flatten_values();
    auto stats = ppo_update(net, {ep}, cfg, opt);
    CHECK_FALSE(stats.aborted);
    CHECK(net.params().flatten_values() == before);
}

TEST_CASE("the clip freezes the policy gradient for runaway ratios") {
    PolicyNet net(tiny_config(6, 4, 17));
    AgentEpisode ep = play_episode(net, 6, 29);
    // Pretend the data came from a far-off policy: ratios blow past 1+clip,
    // the min picks the clipped branch, and no policy gradient flows.
    for (double& lp : ep.log_probs) lp -= 20.0;
    ep.advantages.assign(ep.rewards.size(), 1.0);  // equal: normalization skipped
    ep.returns = ep.values;
    TrainConfig cfg;
    cfg.entropy_coeff = 0.0;
    cfg.value_coeff = 0.0;
    cfg.epochs_per_update = 1;
    nn::Adam opt(cfg.learning_rate);
    auto before = net.params().flatten_values();
    ppo_update(net, {ep}, cfg, opt);
    CHECK(net.params().flatten_values() == before);
}

TEST_CASE("rollout collection fills per-agent transitions for a full horizon") {
    auto reg = default_registry();
    auto base = synthetic_baseline(7, reg, 1900, 2075);
    ClimateGameEnv env(ScenarioSpec::scenario_i(), reg, base,
                       [] { return std::make_unique<MockBackend>(1.0); });
    PolicyConfig pc;
    pc.obs_dim = env.observation_size();
    pc.hidden_dim = 8;
    std::vector<PolicyNet> policies;
    for (int i = 0; i < 4; ++i) {
        pc.seed = static_cast<std::uint64_t>(i);
        policies.emplace_back(pc);
    }
    rng::Stream stream(55);
    auto batch = collect_rollouts(env, policies, 2, stream);
    REQUIRE(batch.episodes.size() == 2);
    REQUIRE(batch.records.size() == 2);
    for (const auto& joint : batch.episodes) {
        REQUIRE(joint.size() == 4);
        for (const auto& ep : joint) {
            CHECK(ep.observations.size() == 35);
            CHECK(ep.actions.size() == 35);
            CHECK(ep.log_probs.size() == 35);
            CHECK(ep.values.size() == 35);
            CHECK(ep.rewards.size() == 35);
        }
    }
    for (const auto& rec : batch.records) CHECK(rec.emissions.size() == 50);
}

TEST_CASE("rollout collection is reproducible from the seed") {
    auto reg = default_registry();
    auto base = synthetic_baseline(7, reg, 1900, 2075);
    auto run = [&] {
        ClimateGameEnv env(ScenarioSpec::scenario_i(), reg, base,
                           [] { return std::make_unique<MockBackend>(1.2); });
        PolicyConfig pc;
        pc.obs_dim = env.observation_size();
        pc.hidden_dim = 8;
        pc.seed = 4;
        std::vector<PolicyNet> policies(4, PolicyNet(pc));
        rng::Stream stream(99);
        return collect_rollouts(env, policies, 2, stream);
    };
    auto a = run();
    auto b = run();
    for (std::size_t e = 0; e < 2; ++e)
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(a.episodes[e][i].log_probs == b.episodes[e][i].log_probs);
            CHECK(a.episodes[e][i].rewards == b.episodes[e][i].rewards);
        }
}

TEST_CASE("training with zero costs keeps rewards at zero and policies near uniform") {
    auto reg = default_registry();
    auto base = synthetic_baseline(7, reg, 1900, 2075);
    ScenarioSpec spec = ScenarioSpec::scenario_i();
    for (auto* c : {&spec.c_climate, &spec.c_energy, &spec.c_methane, &spec.c_agriculture,
                    &spec.c_prevention})
        for (double& v : *c) v = 0.0;
    ClimateGameEnv env(spec, reg, base, [] { return std::make_unique<MockBackend>(1.0); });
    TrainConfig cfg;
    cfg.total_episodes = 8;
    cfg.episodes_per_update = 4;
    cfg.hidden_dim = 8;
    cfg.entropy_coeff = 0.0;  // isolate the (absent) reward signal
    auto result = train(env, cfg);
    for (const auto& curve : result.reward_curves)
        for (double r : curve) CHECK(r == 0.0);
    rng::Stream s(6);
    auto obs = random_obs(env.observation_size(), s);
    for (auto& p : result.policies) {
        auto state = p.initial_state();
        for (const auto& head : p.head_probs(obs, state))
            for (int j = 0; j < 3; ++j) CHECK(head(j) > 0.15);
    }
}

TEST_CASE("training learns to stop paying pointless lever costs") {
    // Fixed-temperature engine: levers cannot help the climate, so the only
    // signal is their own quadratic cost and the optimum is zero effort.
    auto reg = default_registry();
    auto base = synthetic_baseline(7, reg, 1900, 2075);
    ScenarioSpec spec = ScenarioSpec::scenario_i();
    ClimateGameEnv env(spec, reg, base, [] { return std::make_unique<MockBackend>(1.0); });
    TrainConfig cfg;
    cfg.total_episodes = 320;
    cfg.episodes_per_update = 8;
    cfg.hidden_dim = 16;
    cfg.learning_rate = 1e-2;
    cfg.entropy_coeff = 0.003;
    cfg.seed = 2;
    auto result = train(env, cfg);

    auto tail_mean = [&](const std::vector<std::array<double, 4>>& curve, int lever) {
        double s = 0.0;
        const std::size_t from = curve.size() - 12;
        for (std::size_t e = from; e < curve.size(); ++e)
            s += curve[e][static_cast<std::size_t>(lever)];
        return s / 12.0;
    };
    for (const auto& curve : result.lever_curves) {
        CHECK(tail_mean(curve, 1) < 0.2);  // methane costs 10 per unit^2
        CHECK(tail_mean(curve, 2) < 0.2);  // agriculture likewise
    }
    // Returns improved: final decile better than first decile for every agent.
    for (const auto& curve : result.reward_curves) {
        const std::size_t n = curve.size(), d = n / 10;
        const double first = std::accumulate(curve.begin(), curve.begin() + d, 0.0) / d;
        const double last = std::accumulate(curve.end() - d, curve.end(), 0.0) / d;
        CHECK(last > first);
    }
}

TEST_CASE("training runs are reproducible end to end") {
    auto reg = default_registry();
    auto base = synthetic_baseline(7, reg, 1900, 2075);
    auto run = [&] {
        ClimateGameEnv env(ScenarioSpec::scenario_i(), reg, base,
                           [] { return std::make_unique<MockBackend>(1.0); });
        TrainConfig cfg;
        cfg.total_episodes = 8;
        cfg.episodes_per_update = 4;
        cfg.hidden_dim = 8;
        cfg.seed = 3;
        return train(env, cfg);
    };
    auto a = run();
    auto b = run();
    CHECK(a.reward_curves == b.reward_curves);
    for (std::size_t i = 0; i < a.policies.size(); ++i)
        CHECK(a.policies[i].params().flatten_values() == b.policies[i].params().flatten_values());
}

TEST_CASE("an update only touches the agent being trained") {
    PolicyNet trained(tiny_config(6, 4, 1));
    PolicyNet bystander(tiny_config(6, 4, 2));
    auto frozen = bystander.params().flatten_values();
    AgentEpisode ep = play_episode(trained, 6, 3);
    TrainConfig cfg;
    nn::Adam opt(cfg.learning_rate);
    ppo_update(trained, {ep}, cfg, opt);
    CHECK(bystander.params().flatten_values() == frozen);
}
