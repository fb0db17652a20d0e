#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dsp/error.hpp"
#include "dsp/rl.hpp"
#include "oracles.hpp"

using namespace dsp;
using namespace dsp::rl;

namespace {

// A net whose output ignores its input: every weight is zero and the head
// biases carry the requested values.
nn::MLPParams constant_net(std::size_t input, const std::vector<double>& q) {
  Rng rng(1);
  auto net = nn::make_mlp({input, {}, q.size(), nn::HeadMode::single}, rng);
  net.heads[0].weight.setZero();
  for (std::size_t k = 0; k < q.size(); ++k) net.heads[0].bias(static_cast<Eigen::Index>(k)) = q[k];
  return net;
}

nn::MLPParams constant_dueling(std::size_t input, double v, const std::vector<double>& a) {
  Rng rng(1);
  auto net = nn::make_mlp({input, {}, a.size(), nn::HeadMode::dueling}, rng);
  net.heads[0].weight.setZero();
  net.heads[1].weight.setZero();
  net.heads[0].bias(0) = v;
  for (std::size_t k = 0; k < a.size(); ++k) net.heads[1].bias(static_cast<Eigen::Index>(k)) = a[k];
  return net;
}

Transition random_transition(Rng& rng, std::size_t dim, std::size_t actions) {
  Transition t;
  for (std::size_t k = 0; k < dim; ++k) {
    t.state.push_back(rng.normal());
    t.next_state.push_back(rng.normal());
  }
  t.action = rng.index(actions);
  t.reward = rng.normal();
  return t;
}

std::vector<double> flat(const nn::MLPParams& p) {
  std::vector<double> out;
  for (const double* r : p.parameter_refs()) out.push_back(*r);
  return out;
}

AgentConfig small_config(Variant v) {
  AgentConfig cfg;
  cfg.variant = v;
  cfg.hidden = {16};
  cfg.batch_size = 8;
  cfg.buffer_capacity = 64;
  cfg.sync_period = 5;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("parse_variant") {
  CHECK(parse_variant("rsv-dudqn") == Variant::rsv_dudqn);
  CHECK(parse_variant("ddqn") == Variant::ddqn);
  CHECK(to_string(Variant::dudqn) == "dudqn");
  CHECK_THROWS_WITH_AS(parse_variant("foo"),
                       "unknown variant 'foo' (valid: dqn, ddqn, dudqn, rsv-dudqn)", Error);
}

TEST_CASE("agent config validation") {
  AgentConfig cfg;
  CHECK(cfg.action_set == std::vector<double>{-1, -0.5, -0.1, 0, 0.1, 0.5, 1});
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.lambda = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.variant = Variant::dqn;
  CHECK_NOTHROW(cfg.validate());
  cfg.action_set.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("epsilon schedule anneals linearly then holds") {
  AgentConfig cfg;
  cfg.epsilon_decay_episodes = 100;
  CHECK(epsilon_at(cfg, 0) == 1.0);
  CHECK(std::abs(epsilon_at(cfg, 50) - 0.525) < 1e-15);
  CHECK(epsilon_at(cfg, 100) == 0.05);
  CHECK(epsilon_at(cfg, 4000) == 0.05);
}

TEST_CASE("select_action: greedy choices") {
  AgentConfig cfg = small_config(Variant::dqn);
  cfg.hidden = {};
  Agent agent(cfg, 3);
  agent.set_epsilon(0.0);
  const std::vector<double> s{0.1, 0.2, 0.3};

  agent.set_online(constant_net(3, {0.1, 0.9, 0.2, 0.0, -1.0, 0.3, 0.5}));
  CHECK(agent.select_action(s) == 1);

  agent.set_online(constant_net(3, {0.1, 0.2, 0.8, 0.0, -1.0, 0.8, 0.5}));
  CHECK(agent.select_action(s) == 2);

  CHECK_THROWS_AS(agent.select_action(std::vector<double>{1.0}), Error);
}

TEST_CASE("select_action: epsilon = 1 is uniform over the actions") {
  Agent agent(small_config(Variant::dqn), 3);
  agent.set_epsilon(1.0);
  const std::vector<double> s{0.0, 0.0, 0.0};
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int k = 0; k < draws; ++k) ++counts[agent.select_action(s)];
  const double expected = draws / 7.0;
  const double sigma = std::sqrt(draws * (1.0 / 7.0) * (6.0 / 7.0));
  for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * sigma);
}

TEST_CASE("dueling_aggregate") {
  const std::vector<double> zeros(5, 0.0);
  for (auto mode : {Aggregation::max, Aggregation::mean})
    for (double q : dueling_aggregate(1.25, zeros, mode)) CHECK(q == 1.25);

  CHECK(dueling_aggregate(3.0, std::vector<double>{2.0, 0.0}, Aggregation::max) ==
        std::vector<double>{3.0, 1.0});
  CHECK(dueling_aggregate(3.0, std::vector<double>{2.0, 0.0}, Aggregation::mean) ==
        std::vector<double>{4.0, 2.0});
  CHECK_THROWS_AS(dueling_aggregate(0.0, std::vector<double>{}, Aggregation::mean), Error);
}

TEST_CASE("dueling identities hold on random draws") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const double v = 10.0 * rng.normal();
    std::vector<double> a(7);
    for (auto& x : a) x = 10.0 * rng.normal();
    auto qmax = dueling_aggregate(v, a, Aggregation::max);
    auto qmean = dueling_aggregate(v, a, Aggregation::mean);
    CHECK(std::abs(*std::max_element(qmax.begin(), qmax.end()) - v) <= 1e-12);
    CHECK(std::abs(std::accumulate(qmean.begin(), qmean.end(), 0.0) / 7.0 - v) <= 1e-12);
  }
}

TEST_CASE("dqn_target") {
  Transition t{{0.0}, 0, 1.0, {0.0}, false};
  auto target = constant_net(1, {2.0, 1.5});
  CHECK(std::abs(dqn_target(t, target, 0.9) - 2.8) < 1e-15);
  CHECK(dqn_target(t, target, 0.0) == 1.0);
  t.terminal = true;
  CHECK(dqn_target(t, target, 0.9) == 1.0);
}

TEST_CASE("ddqn_target decouples selection from evaluation") {
  Transition t{{0.0}, 0, 0.0, {0.0}, false};
  auto online = constant_net(1, {5.0, 1.0});
  auto target = constant_net(1, {0.0, 9.0});
  CHECK(ddqn_target(t, online, target, 1.0) == 0.0);
  CHECK(dqn_target(t, target, 1.0) == 9.0);
  CHECK(ddqn_target(t, target, target, 1.0) == dqn_target(t, target, 1.0));
  CHECK(ddqn_target(t, online, target, 0.0) == 0.0);
  t.terminal = true;
  t.reward = -2.0;
  CHECK(ddqn_target(t, online, target, 0.9) == -2.0);
}

TEST_CASE("ddqn target never exceeds the dqn target") {
  Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    auto mode = k % 2 ? nn::HeadMode::dueling : nn::HeadMode::single;
    auto online = nn::make_mlp({3, {8}, 7, mode}, rng);
    auto target = nn::make_mlp({3, {8}, 7, mode}, rng);
    auto t = random_transition(rng, 3, 7);
    for (double g : {0.0, 0.5, 0.9, 0.99}) CHECK(ddqn_target(t, online, target, g) <= dqn_target(t, target, g));
  }
}

TEST_CASE("rsv_shape_rewards") {
  Rng rng(5);
  auto online = nn::make_mlp({3, {8}, 7, nn::HeadMode::dueling}, rng);
  std::vector<Transition> batch;
  for (double r : {1.0, 2.0, 3.0}) {
    auto t = random_transition(rng, 3, 7);
    t.reward = r;
    batch.push_back(t);
  }
  auto R = rsv_shape_rewards(batch, online, 0.0);
  const double z = std::sqrt(1.5);  // 1 / popstd([1, 2, 3])
  CHECK(std::abs(R[0] + z) < 1e-12);
  CHECK(std::abs(R[1]) < 1e-12);
  CHECK(std::abs(R[2] - z) < 1e-12);
  CHECK(std::abs(R[2] - 1.2247) < 1e-4);

  std::vector<Transition> flat_batch(4, batch[0]);
  for (double r : rsv_shape_rewards(flat_batch, online, 0.5)) CHECK(r == 0.0);

  CHECK_THROWS_AS(rsv_shape_rewards(std::span(batch).first(1), online, 0.1), Error);
  CHECK_THROWS_AS(rsv_shape_rewards(batch, online, 1.0), Error);
  auto single = nn::make_mlp({3, {8}, 7, nn::HeadMode::single}, rng);
  CHECK_THROWS_AS(rsv_shape_rewards(batch, single, 0.1), Error);
}

TEST_CASE("shaped rewards are standardized around the value term") {
  Rng rng(41);
  auto online = nn::make_mlp({3, {8}, 7, nn::HeadMode::dueling}, rng);
  for (int k = 0; k < 50; ++k) {
    std::vector<Transition> batch;
    for (int j = 0; j < 32; ++j) batch.push_back(random_transition(rng, 3, 7));
    auto r0 = rsv_shape_rewards(batch, online, 0.0);
    const double n = static_cast<double>(r0.size());
    const double mean = std::accumulate(r0.begin(), r0.end(), 0.0) / n;
    double var = 0.0;
    for (double r : r0) var += (r - mean) * (r - mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var / n) - 1.0) < 1e-9);

    // Adding lambda * z(V) moves the mean by lambda * mean(z(V)) = 0.
    auto r1 = rsv_shape_rewards(batch, online, 0.3);
    CHECK(std::abs(std::accumulate(r1.begin(), r1.end(), 0.0) / n) < 1e-9);
  }
}

TEST_CASE("lambda = 0 reduces RSV targets to DuDQN on standardized rewards") {
  Rng rng(29);
  auto online = nn::make_mlp({3, {8}, 7, nn::HeadMode::dueling}, rng);
  auto target = nn::make_mlp({3, {8}, 7, nn::HeadMode::dueling}, rng);
  std::vector<Transition> batch;
  for (int j = 0; j < 16; ++j) {
    batch.push_back(random_transition(rng, 3, 7));
    batch.back().terminal = j % 5 == 0;
  }
  const auto rsv = compute_targets(Variant::rsv_dudqn, batch, online, target, 0.9, 0.0, Aggregation::mean);

  std::vector<double> rewards;
  for (const auto& t : batch) rewards.push_back(t.reward);
  const auto z = zscore(rewards);
  auto standardized = batch;
  for (std::size_t j = 0; j < batch.size(); ++j) standardized[j].reward = z[j];
  const auto dudqn =
      compute_targets(Variant::dudqn, standardized, online, target, 0.9, 0.0, Aggregation::mean);
  CHECK(rsv == dudqn);
}

TEST_CASE("td_loss_gradient matches finite differences with targets held fixed") {
  Rng rng(37);
  for (auto mode : {Aggregation::mean, Aggregation::max}) {
    for (auto head : {nn::HeadMode::single, nn::HeadMode::dueling}) {
      auto net = nn::make_mlp({3, {6}, 4, head}, rng);
      std::vector<Transition> batch;
      std::vector<double> y;
      for (int j = 0; j < 6; ++j) {
        batch.push_back(random_transition(rng, 3, 4));
        y.push_back(rng.normal());
      }
      auto lg = td_loss_gradient(net, batch, y, mode);
      auto numeric = oracle::finite_difference(net, [&](const nn::MLPParams& n) {
        double l = 0.0;
        for (std::size_t j = 0; j < batch.size(); ++j) {
          const double q = q_values(n, batch[j].state, mode)[batch[j].action];
          l += (y[j] - q) * (y[j] - q);
        }
        return l / static_cast<double>(batch.size());
      });
      const auto analytic = flat(lg.grads);
      for (std::size_t k = 0; k < analytic.size(); ++k) {
        const double scale = std::max(std::abs(analytic[k]), std::abs(numeric[k]));
        CHECK(std::abs(analytic[k] - numeric[k]) <= 1e-4 * scale + 1e-8);
      }
    }
  }
}

TEST_CASE("no gradient flows through the state-value term") {
  Rng rng(43);
  auto online = nn::make_mlp({3, {8}, 7, nn::HeadMode::dueling}, rng);
  auto target = nn::make_mlp({3, {8}, 7, nn::HeadMode::dueling}, rng);
  std::vector<Transition> batch;
  for (int j = 0; j < 12; ++j) batch.push_back(random_transition(rng, 3, 7));

  // Recomputed: the shaping reads V from the network being differentiated.
  const auto recomputed_y =
      compute_targets(Variant::rsv_dudqn, batch, online, target, 0.9, 0.4, Aggregation::mean);
  const auto recomputed = td_loss_gradient(online, batch, recomputed_y, Aggregation::mean);

  // Frozen: shaped rewards baked into the transitions as plain numbers.
  auto frozen_batch = batch;
  const auto shaped = rsv_shape_rewards(batch, online, 0.4);
  for (std::size_t j = 0; j < batch.size(); ++j) frozen_batch[j].reward = shaped[j];
  const auto frozen_y =
      compute_targets(Variant::dudqn, frozen_batch, online, target, 0.9, 0.4, Aggregation::mean);
  const auto frozen = td_loss_gradient(online, frozen_batch, frozen_y, Aggregation::mean);

  CHECK(recomputed_y == frozen_y);
  CHECK(recomputed.loss == frozen.loss);
  CHECK(flat(recomputed.grads) == flat(frozen.grads));
}

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buf(5);
  for (int k = 0; k < 13; ++k) buf.push(Transition{{0.0}, 0, static_cast<double>(k), {0.0}, false});
  REQUIRE(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf[i].reward == static_cast<double>(8 + i));
  CHECK_THROWS_AS(ReplayBuffer(0), Error);
  CHECK_THROWS_AS(buf[5], Error);
}

TEST_CASE("train_step waits for a full batch") {
  Agent agent(small_config(Variant::rsv_dudqn), 3);
  const auto before = flat(agent.online());
  for (int k = 0; k < 7; ++k) {
    agent.remember(Transition{{0, 0, 0}, 1, 1.0, {0, 0, 0}, false});
    CHECK_FALSE(agent.train_step().has_value());
  }
  CHECK(flat(agent.online()) == before);
  CHECK(agent.train_steps() == 0);
  agent.remember(Transition{{0, 0, 0}, 1, 2.0, {0, 0, 0}, false});
  CHECK(agent.train_step().has_value());
  CHECK(agent.train_steps() == 1);
}

TEST_CASE("regressing onto a constant reward drives the loss down") {
  AgentConfig cfg = small_config(Variant::dqn);
  cfg.gamma = 0.0;
  cfg.learning_rate = 0.05;
  Agent agent(cfg, 3);
  for (std::size_t k = 0; k < cfg.batch_size; ++k)
    agent.remember(Transition{{0.3, -0.2, 0.1}, 2, 1.0, {0.5, 0.5, 0.5}, false});
  const double initial = agent.train_step()->loss;
  double last = initial;
  for (int k = 1; k < 200; ++k) last = agent.train_step()->loss;
  CHECK(initial > 0.0);
  CHECK(last < 1e-3 * initial);
}

TEST_CASE("cloned agents follow identical trajectories") {
  for (auto v : {Variant::dqn, Variant::ddqn, Variant::dudqn, Variant::rsv_dudqn}) {
    Agent a(small_config(v), 3), b(small_config(v), 3);
    Rng rng(3);
    for (int k = 0; k < 40; ++k) {
      auto t = random_transition(rng, 3, 7);
      a.remember(t);
      b.remember(t);
      CHECK(a.select_action(t.state) == b.select_action(t.state));
      auto la = a.train_step(), lb = b.train_step();
      REQUIRE(la.has_value() == lb.has_value());
      if (la) CHECK(la->loss == lb->loss);
    }
    CHECK(flat(a.online()) == flat(b.online()));
    CHECK(flat(a.target()) == flat(b.target()));
  }
}

TEST_CASE("target network sync schedule and isolation") {
  AgentConfig cfg = small_config(Variant::dudqn);
  Agent agent(cfg, 3);
  Rng rng(9);
  for (std::size_t k = 0; k < cfg.batch_size; ++k) agent.remember(random_transition(rng, 3, 7));
  for (std::size_t k = 0; k < 3 * cfg.sync_period; ++k) {
    agent.train_step();
    if (agent.train_steps() % cfg.sync_period == 0)
      CHECK(flat(agent.online()) == flat(agent.target()));
    else
      CHECK(flat(agent.online()) != flat(agent.target()));
  }
  CHECK(agent.sync_events() == std::vector<std::size_t>{5, 10, 15});

  const auto target_before = flat(agent.target());
  agent.train_step();
  CHECK(flat(agent.target()) == target_before);
  for (int k = 0; k < 20; ++k) {
    const auto s = random_transition(rng, 3, 7).state;
    CHECK(nn::forward(agent.online(), s) != nn::forward(agent.target(), s));
  }
  agent.sync_target();
  for (int k = 0; k < 20; ++k) {
    const auto s = random_transition(rng, 3, 7).state;
    CHECK(nn::forward(agent.online(), s) == nn::forward(agent.target(), s));
  }
}
