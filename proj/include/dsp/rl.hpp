#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dsp/nn.hpp"
#include "dsp/rng.hpp"

namespace dsp::rl {

enum class Variant { dqn, ddqn, dudqn, rsv_dudqn };

std::string_view to_string(Variant v);
/// Accepts "dqn", "ddqn", "dudqn", "rsv-dudqn"; the error lists the valid names.
Variant parse_variant(std::string_view name);
inline bool uses_dueling(Variant v) { return v == Variant::dudqn || v == Variant::rsv_dudqn; }

/// How the value and advantage streams are recombined into Q.
enum class Aggregation { max, mean };

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// Fixed-capacity FIFO store. Index 0 is the oldest retained transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // slot overwritten by the next push once full
  std::vector<Transition> store_;
};

std::vector<double> default_action_set();

struct AgentConfig {
  Variant variant = Variant::rsv_dudqn;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Episodes over which epsilon anneals linearly; 0 lets the training driver
  /// pick half of its episode budget.
  std::size_t epsilon_decay_episodes = 0;
  double lambda = 0.1;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  std::size_t sync_period = 200;
  double learning_rate = 1e-3;
  std::vector<double> action_set = default_action_set();
  std::vector<std::size_t> hidden{64, 64};
  Aggregation aggregation = Aggregation::mean;
  std::uint64_t seed = 0;

  void validate() const;
  nn::NetShape net_shape(std::size_t state_dim) const;
};

double epsilon_at(const AgentConfig& cfg, std::size_t episode);

/// Lowest index among the maxima.
std::size_t argmax(std::span<const double> values);

/// max: Q_a = V + A_a - max A.  mean: Q_a = V + A_a - mean(A).
std::vector<double> dueling_aggregate(double value, std::span<const double> advantages,
                                      Aggregation mode);

/// Q values of a network, aggregating the streams when it has a dueling head.
std::vector<double> q_values(const nn::MLPParams& net, std::span<const double> state,
                             Aggregation mode);
/// Batched form of q_values: raw outputs (one column per input) to Q.
Eigen::MatrixXd aggregate_batch(const nn::MLPParams& net, const Eigen::MatrixXd& raw,
                                Aggregation mode);

/// r, or r + gamma * max_a Q_target(s', a).
double dqn_target(const Transition& t, const nn::MLPParams& target, double gamma,
                  Aggregation mode = Aggregation::mean);
/// r, or r + gamma * Q_target(s', argmax_a Q_online(s', a)).
double ddqn_target(const Transition& t, const nn::MLPParams& online, const nn::MLPParams& target,
                   double gamma, Aggregation mode = Aggregation::mean);

/// Population z-scores; a spread below 1e-12 maps every entry to 0.
std::vector<double> zscore(std::span<const double> xs);

/// R_j = z(r)_j + lambda * z(V_online(s))_j over the minibatch. The value term
/// is a plain number here, so nothing downstream differentiates through it.
/// Requires at least 2 transitions and 0 <= lambda < 1.
std::vector<double> rsv_shape_rewards(std::span<const Transition> batch,
                                      const nn::MLPParams& online, double lambda);

/// Per-transition regression targets for a minibatch under `variant`.
std::vector<double> compute_targets(Variant variant, std::span<const Transition> batch,
                                    const nn::MLPParams& online, const nn::MLPParams& target,
                                    double gamma, double lambda, Aggregation mode);

struct LossAndGradient {
  double loss = 0.0;
  nn::Gradients grads;
};

/// Mean of (y_j - Q(s_j, a_j))^2 and its parameter gradient; targets are constants.
LossAndGradient td_loss_gradient(const nn::MLPParams& online, std::span<const Transition> batch,
                                 std::span<const double> targets, Aggregation mode);

/// Minibatch reward/value statistics of the last RSV update, used to express a
/// single transition's reward on the shaped scale.
struct ShapingStats {
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double value_mean = 0.0;
  double value_std = 0.0;
};

struct TrainStats {
  double loss = 0.0;
  std::optional<ShapingStats> shaping;
};

class Agent {
 public:
  Agent(AgentConfig cfg, std::size_t state_dim);

  const AgentConfig& config() const { return cfg_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double eps);

  /// Epsilon-greedy over the online network's Q values.
  std::size_t select_action(std::span<const double> state);
  void remember(Transition t);

  /// One minibatch update. Returns nullopt (parameters untouched) while the
  /// buffer holds fewer than batch_size transitions. Syncs the target network
  /// every sync_period updates.
  std::optional<TrainStats> train_step();
  void sync_target();

  std::size_t train_steps() const { return steps_; }
  const std::vector<std::size_t>& sync_events() const { return sync_events_; }

  const nn::MLPParams& online() const { return online_; }
  const nn::MLPParams& target() const { return target_; }
  void set_online(nn::MLPParams net);
  const ReplayBuffer& buffer() const { return buffer_; }

  std::vector<double> q_values(std::span<const double> state) const;
  /// The reward r at `state` mapped through the last shaping statistics; r
  /// itself for variants without shaping or before the first update.
  double shaped_reward(std::span<const double> state, double reward) const;

 private:
  AgentConfig cfg_;
  nn::MLPParams online_;
  nn::MLPParams target_;
  ReplayBuffer buffer_;
  Rng policy_rng_;
  Rng replay_rng_;
  double epsilon_;
  std::size_t steps_ = 0;
  std::vector<std::size_t> sync_events_;
  std::optional<ShapingStats> last_shaping_;
};

}  // namespace dsp::rl
