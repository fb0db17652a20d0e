#include "dsp/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsp/error.hpp"

namespace dsp::rl {

namespace {

constexpr double kStdFloor = 1e-12;

Eigen::MatrixXd stack_columns(std::span<const Transition> batch, bool next) {
  const auto dim = static_cast<Eigen::Index>(batch.front().state.size());
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& v = next ? batch[j].next_state : batch[j].state;
    if (static_cast<Eigen::Index>(v.size()) != dim) throw Error("rl: inconsistent state dimensions");
    for (Eigen::Index r = 0; r < dim; ++r) m(r, static_cast<Eigen::Index>(j)) = v[static_cast<std::size_t>(r)];
  }
  return m;
}

std::size_t argmax_col(const Eigen::MatrixXd& q, Eigen::Index col) {
  std::size_t best = 0;
  for (Eigen::Index r = 1; r < q.rows(); ++r)
    if (q(r, col) > q(static_cast<Eigen::Index>(best), col)) best = static_cast<std::size_t>(r);
  return best;
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double popstd_of(std::span<const double> xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double standardized(double x, double mean, double sd) {
  return sd < kStdFloor ? 0.0 : (x - mean) / sd;
}

// y_j = R_j for terminal transitions, otherwise R_j + gamma * bootstrap_j.
std::vector<double> bootstrapped(std::span<const Transition> batch, std::span<const double> rewards,
                                 const nn::MLPParams& online, const nn::MLPParams& target,
                                 double gamma, Aggregation mode, bool double_q) {
  std::vector<double> y(rewards.begin(), rewards.end());
  if (gamma == 0.0) return y;
  const Eigen::MatrixXd next = stack_columns(batch, true);
  const Eigen::MatrixXd q_target = aggregate_batch(target, nn::forward_batch(target, next), mode);
  Eigen::MatrixXd q_online;
  if (double_q) q_online = aggregate_batch(online, nn::forward_batch(online, next), mode);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (batch[j].terminal) continue;
    const auto col = static_cast<Eigen::Index>(j);
    const auto a = double_q ? argmax_col(q_online, col) : argmax_col(q_target, col);
    y[j] = rewards[j] + gamma * q_target(static_cast<Eigen::Index>(a), col);
  }
  return y;
}

ShapingStats shaping_stats(std::span<const Transition> batch, const nn::MLPParams& online) {
  std::vector<double> r(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) r[j] = batch[j].reward;
  const Eigen::MatrixXd raw = nn::forward_batch(online, stack_columns(batch, false));
  std::vector<double> v(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) v[j] = raw(0, static_cast<Eigen::Index>(j));
  ShapingStats s;
  s.reward_mean = mean_of(r);
  s.reward_std = popstd_of(r, s.reward_mean);
  s.value_mean = mean_of(v);
  s.value_std = popstd_of(v, s.value_mean);
  return s;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::dqn: return "dqn";
    case Variant::ddqn: return "ddqn";
    case Variant::dudqn: return "dudqn";
    case Variant::rsv_dudqn: return "rsv-dudqn";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::dqn, Variant::ddqn, Variant::dudqn, Variant::rsv_dudqn})
    if (name == to_string(v)) return v;
  throw Error("unknown variant '" + std::string(name) +
              "' (valid: dqn, ddqn, dudqn, rsv-dudqn)");
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("ReplayBuffer: capacity must be > 0");
  store_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(t));
    return;
  }
  store_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  if (i >= store_.size()) throw Error("ReplayBuffer: index out of range");
  return store_[(next_ + i) % store_.size()];
}

// ---------------------------------------------------------------------------

std::vector<double> default_action_set() { return {-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0}; }

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("AgentConfig: gamma must lie in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
    throw Error("AgentConfig: epsilon values must lie in [0, 1]");
  if (variant == Variant::rsv_dudqn && !(lambda > 0.0 && lambda < 1.0))
    throw Error("AgentConfig: lambda must lie strictly inside (0, 1) for rsv-dudqn");
  if (batch_size == 0) throw Error("AgentConfig: batch_size must be > 0");
  if (variant == Variant::rsv_dudqn && batch_size < 2)
    throw Error("AgentConfig: rsv-dudqn needs batch_size >= 2 to standardize rewards");
  if (buffer_capacity < batch_size) throw Error("AgentConfig: buffer_capacity below batch_size");
  if (sync_period == 0) throw Error("AgentConfig: sync_period must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error("AgentConfig: learning_rate must be > 0");
  if (action_set.empty()) throw Error("AgentConfig: action set is empty");
  for (double a : action_set)
    if (!std::isfinite(a)) throw Error("AgentConfig: non-finite action increment");
}

nn::NetShape AgentConfig::net_shape(std::size_t state_dim) const {
  nn::NetShape s;
  s.input = state_dim;
  s.hidden = hidden;
  s.actions = action_set.size();
  s.head = uses_dueling(variant) ? nn::HeadMode::dueling : nn::HeadMode::single;
  return s;
}

double epsilon_at(const AgentConfig& cfg, std::size_t episode) {
  if (cfg.epsilon_decay_episodes == 0 || episode >= cfg.epsilon_decay_episodes)
    return cfg.epsilon_end;
  const double frac =
      static_cast<double>(episode) / static_cast<double>(cfg.epsilon_decay_episodes);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> dueling_aggregate(double value, std::span<const double> advantages,
                                      Aggregation mode) {
  if (advantages.empty()) throw Error("dueling_aggregate: empty advantage list");
  const double baseline = mode == Aggregation::max
                              ? *std::max_element(advantages.begin(), advantages.end())
                              : mean_of(advantages);
  std::vector<double> q(advantages.size());
  for (std::size_t a = 0; a < q.size(); ++a) q[a] = value + (advantages[a] - baseline);
  return q;
}

Eigen::MatrixXd aggregate_batch(const nn::MLPParams& net, const Eigen::MatrixXd& raw,
                                Aggregation mode) {
  if (net.shape.head == nn::HeadMode::single) return raw;
  const Eigen::Index k = raw.rows() - 1;
  Eigen::MatrixXd q(k, raw.cols());
  std::vector<double> adv(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    for (Eigen::Index a = 0; a < k; ++a) adv[static_cast<std::size_t>(a)] = raw(a + 1, j);
    const auto col = dueling_aggregate(raw(0, j), adv, mode);
    for (Eigen::Index a = 0; a < k; ++a) q(a, j) = col[static_cast<std::size_t>(a)];
  }
  return q;
}

std::vector<double> q_values(const nn::MLPParams& net, std::span<const double> state,
                             Aggregation mode) {
  const Eigen::VectorXd raw = nn::forward(net, state);
  if (net.shape.head == nn::HeadMode::single)
    return std::vector<double>(raw.data(), raw.data() + raw.size());
  return dueling_aggregate(raw(0), std::span<const double>(raw.data() + 1, raw.size() - 1), mode);
}

double dqn_target(const Transition& t, const nn::MLPParams& target, double gamma,
                  Aggregation mode) {
  const double r = t.reward;
  return bootstrapped(std::span(&t, 1), std::span(&r, 1), target, target, gamma, mode, false)
      .front();
}

double ddqn_target(const Transition& t, const nn::MLPParams& online, const nn::MLPParams& target,
                   double gamma, Aggregation mode) {
  const double r = t.reward;
  return bootstrapped(std::span(&t, 1), std::span(&r, 1), online, target, gamma, mode, true)
      .front();
}

std::vector<double> zscore(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double m = mean_of(xs);
  const double sd = popstd_of(xs, m);
  std::vector<double> z(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) z[i] = standardized(xs[i], m, sd);
  return z;
}

std::vector<double> rsv_shape_rewards(std::span<const Transition> batch,
                                      const nn::MLPParams& online, double lambda) {
  if (batch.size() < 2) throw Error("rsv_shape_rewards: batch needs at least 2 transitions");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw Error("rsv_shape_rewards: lambda must lie in [0, 1)");
  if (online.shape.head != nn::HeadMode::dueling)
    throw Error("rsv_shape_rewards: network has no value stream");
  const auto s = shaping_stats(batch, online);
  const Eigen::MatrixXd raw = nn::forward_batch(online, stack_columns(batch, false));
  std::vector<double> shaped(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const double r_std = standardized(batch[j].reward, s.reward_mean, s.reward_std);
    const double sv_std =
        standardized(raw(0, static_cast<Eigen::Index>(j)), s.value_mean, s.value_std);
    shaped[j] = r_std + lambda * sv_std;
  }
  return shaped;
}

std::vector<double> compute_targets(Variant variant, std::span<const Transition> batch,
                                    const nn::MLPParams& online, const nn::MLPParams& target,
                                    double gamma, double lambda, Aggregation mode) {
  if (batch.empty()) return {};
  std::vector<double> rewards(batch.size());
  if (variant == Variant::rsv_dudqn) {
    rewards = rsv_shape_rewards(batch, online, lambda);
  } else {
    for (std::size_t j = 0; j < batch.size(); ++j) rewards[j] = batch[j].reward;
  }
  return bootstrapped(batch, rewards, online, target, gamma, mode, variant == Variant::ddqn);
}

LossAndGradient td_loss_gradient(const nn::MLPParams& online, std::span<const Transition> batch,
                                 std::span<const double> targets, Aggregation mode) {
  if (batch.empty() || targets.size() != batch.size())
    throw Error("td_loss_gradient: targets must match a non-empty batch");
  const auto cache = nn::forward_cached(online, stack_columns(batch, false));
  const Eigen::MatrixXd q = aggregate_batch(online, cache.output, mode);
  const bool dueling = online.shape.head == nn::HeadMode::dueling;
  const auto n_actions = static_cast<Eigen::Index>(online.shape.actions);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  LossAndGradient out;
  Eigen::MatrixXd grad_raw = Eigen::MatrixXd::Zero(cache.output.rows(), cache.output.cols());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const auto a = static_cast<Eigen::Index>(batch[j].action);
    if (a >= n_actions) throw Error("td_loss_gradient: action index out of range");
    const double diff = q(a, col) - targets[j];
    out.loss += diff * diff * inv_b;
    const double g = 2.0 * diff * inv_b;
    if (!dueling) {
      grad_raw(a, col) = g;
      continue;
    }
    // dQ_a/dV = 1; dQ_a/dA_b = [b == a] - dBaseline/dA_b.
    grad_raw(0, col) = g;
    grad_raw(a + 1, col) += g;
    if (mode == Aggregation::mean) {
      for (Eigen::Index b = 0; b < n_actions; ++b)
        grad_raw(b + 1, col) -= g / static_cast<double>(n_actions);
    } else {
      Eigen::Index m = 0;
      for (Eigen::Index b = 1; b < n_actions; ++b)
        if (cache.output(b + 1, col) > cache.output(m + 1, col)) m = b;
      grad_raw(m + 1, col) -= g;
    }
  }
  out.grads = nn::backward(online, cache, grad_raw);
  return out;
}

// ---------------------------------------------------------------------------

Agent::Agent(AgentConfig cfg, std::size_t state_dim)
    : cfg_(std::move(cfg)),
      buffer_(cfg_.buffer_capacity),
      policy_rng_(Rng::stream(cfg_.seed, "rl.policy")),
      replay_rng_(Rng::stream(cfg_.seed, "rl.replay")),
      epsilon_(cfg_.epsilon_start) {
  cfg_.validate();
  Rng init = Rng::stream(cfg_.seed, "rl.init");
  online_ = nn::make_mlp(cfg_.net_shape(state_dim), init);
  target_ = nn::clone_params(online_);
}

void Agent::set_epsilon(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw Error("Agent: epsilon must lie in [0, 1]");
  epsilon_ = eps;
}

std::vector<double> Agent::q_values(std::span<const double> state) const {
  return rl::q_values(online_, state, cfg_.aggregation);
}

std::size_t Agent::select_action(std::span<const double> state) {
  if (state.size() != online_.shape.input)
    throw Error("select_action: state dimension does not match the network");
  const double u = policy_rng_.uniform();
  if (u < epsilon_) return policy_rng_.index(cfg_.action_set.size());
  return argmax(q_values(state));
}

void Agent::remember(Transition t) {
  if (t.action >= cfg_.action_set.size()) throw Error("Transition: action index out of range");
  if (!std::isfinite(t.reward)) throw Error("Transition: non-finite reward");
  if (t.state.size() != online_.shape.input || t.next_state.size() != online_.shape.input)
    throw Error("Transition: state dimension does not match the network");
  buffer_.push(std::move(t));
}

std::optional<TrainStats> Agent::train_step() {
  if (buffer_.size() < cfg_.batch_size) return std::nullopt;
  std::vector<Transition> batch;
  batch.reserve(cfg_.batch_size);
  for (std::size_t k = 0; k < cfg_.batch_size; ++k)
    batch.push_back(buffer_[replay_rng_.index(buffer_.size())]);

  TrainStats stats;
  if (cfg_.variant == Variant::rsv_dudqn) {
    stats.shaping = shaping_stats(batch, online_);
    last_shaping_ = stats.shaping;
  }
  const auto targets = compute_targets(cfg_.variant, batch, online_, target_, cfg_.gamma,
                                       cfg_.lambda, cfg_.aggregation);
  auto lg = td_loss_gradient(online_, batch, targets, cfg_.aggregation);
  nn::sgd_step(online_, lg.grads, {cfg_.learning_rate});
  stats.loss = lg.loss;

  ++steps_;
  if (steps_ % cfg_.sync_period == 0) sync_target();
  return stats;
}

void Agent::sync_target() {
  target_ = nn::clone_params(online_);
  sync_events_.push_back(steps_);
}

void Agent::set_online(nn::MLPParams net) {
  nn::check_consistent(net);
  if (!(net.shape == online_.shape)) throw Error("Agent: replacement network has a different shape");
  online_ = std::move(net);
}

double Agent::shaped_reward(std::span<const double> state, double reward) const {
  if (!last_shaping_) return reward;
  const auto& s = *last_shaping_;
  const Eigen::VectorXd raw = nn::forward(online_, state);
  return standardized(reward, s.reward_mean, s.reward_std) +
         cfg_.lambda * standardized(raw(0), s.value_mean, s.value_std);
}

}  // namespace dsp::rl
