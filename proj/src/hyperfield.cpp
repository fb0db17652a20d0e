#include "dsp/hyperfield.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "dsp/error.hpp"
#include "dsp/json_util.hpp"

namespace dsp::hyper {

namespace {

// Snap to a 1e-9 lattice so repeated +-0.1 increments do not drift.
double snap_power(double p) { return std::round(p * 1e9) / 1e9; }

PowerAssignment empty_assignment(const Dataset& d, const EnvConfig& cfg) {
  PowerAssignment pa;
  pa.dataset_name = d.name();
  pa.p_min = cfg.p_min;
  pa.p_max = cfg.p_max;
  pa.entries.reserve(d.size());
  return pa;
}

// Observation scaling. Unlike standardize_coords, a constant column is
// centred but left unscaled so collinear layouts still get an environment.
StandardizationParams observation_scaling(const Dataset& d) {
  StandardizationParams p;
  const double n = static_cast<double>(d.size());
  for (const auto& s : d.samples()) {
    p.mean_x += s.x;
    p.mean_y += s.y;
  }
  p.mean_x /= n;
  p.mean_y /= n;
  double vx = 0.0, vy = 0.0;
  for (const auto& s : d.samples()) {
    vx += (s.x - p.mean_x) * (s.x - p.mean_x);
    vy += (s.y - p.mean_y) * (s.y - p.mean_y);
  }
  p.std_x = std::sqrt(vx / n);
  p.std_y = std::sqrt(vy / n);
  if (p.std_x < 1e-12) p.std_x = 1.0;
  if (p.std_y < 1e-12) p.std_y = 1.0;
  return p;
}

}  // namespace

void EnvConfig::validate() const {
  if (!(p_min > 0.0 && p_min < p_init && p_init < p_max) || !std::isfinite(p_max))
    throw Error("EnvConfig: need 0 < p_min < p_init < p_max");
  if (episode_length == 0) throw Error("EnvConfig: episode_length must be >= 1");
}

PowerEnvironment::PowerEnvironment(const Dataset& dataset, std::vector<double> action_set,
                                   EnvConfig cfg, IdwConfig idw)
    : dataset_(dataset), actions_(std::move(action_set)), cfg_(cfg), idw_(idw) {
  cfg_.validate();
  if (actions_.empty()) throw Error("PowerEnvironment: action set is empty");
  if (dataset_.empty()) throw Error("PowerEnvironment: empty dataset");
  standardization_ = observation_scaling(dataset_);
}

EnvState PowerEnvironment::reset(std::size_t i) const {
  if (i >= dataset_.size()) throw Error("env: sample index out of range");
  const Point z = standardization_.apply(dataset_[i].point());
  return {z.x, z.y, cfg_.p_init};
}

double PowerEnvironment::error(std::size_t i, double power) const {
  return loo_error(dataset_, i, power, idw_);
}

StepResult PowerEnvironment::step(std::size_t i, const EnvState& state, std::size_t action,
                                  std::size_t step_in_episode) const {
  if (action >= actions_.size())
    throw Error("env_step: invalid action index " + std::to_string(action));
  if (i >= dataset_.size()) throw Error("env_step: sample index out of range");
  StepResult out;
  out.next = state;
  out.next.power = snap_power(std::clamp(state.power + actions_[action], cfg_.p_min, cfg_.p_max));
  out.reward = out.next.power == state.power ? 0.0 : error(i, state.power) - error(i, out.next.power);
  out.terminal = step_in_episode + 1 >= cfg_.episode_length;
  return out;
}

// ---------------------------------------------------------------------------

LearnResult learn_powers(const Dataset& dataset, rl::AgentConfig agent_cfg,
                         const EnvConfig& env_cfg, const IdwConfig& idw,
                         const LearnHooks& hooks) {
  if (dataset.size() < 3) throw Error("learn_powers: dataset needs at least 3 samples");
  agent_cfg.validate();
  env_cfg.validate();
  if (agent_cfg.epsilon_decay_episodes == 0)
    agent_cfg.epsilon_decay_episodes = std::max<std::size_t>(1, env_cfg.episode_budget / 2);

  const auto t0 = std::chrono::steady_clock::now();
  PowerEnvironment env(dataset, agent_cfg.action_set, env_cfg, idw);
  rl::Agent agent(agent_cfg, 3);

  const std::size_t n = dataset.size();
  LearnResult result;
  result.assignment = empty_assignment(dataset, env_cfg);
  std::vector<GridResult> best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = {env_cfg.p_init, env.error(i, env_cfg.p_init)};

  std::size_t global_step = 0;
  for (std::size_t episode = 0; episode < env_cfg.episode_budget; ++episode) {
    const std::size_t i = episode % n;
    agent.set_epsilon(rl::epsilon_at(agent_cfg, episode));
    EnvState state = env.reset(i);
    double current_error = best[i].power == state.power ? best[i].error : env.error(i, state.power);

    for (std::size_t t = 0; t < env_cfg.episode_length; ++t) {
      auto features = state.features(env_cfg);
      const auto action = agent.select_action(features);
      const auto res = env.step(i, state, action, t);
      const double next_error =
          res.next.power == state.power ? current_error : env.error(i, res.next.power);
      auto next_features = res.next.features(env_cfg);
      agent.remember({features, action, res.reward, next_features, res.terminal});
      const auto stats = agent.train_step();

      if (next_error < best[i].error) best[i] = {res.next.power, next_error};

      if (hooks.on_step) {
        StepLog log;
        log.step = global_step;
        log.episode = episode;
        if (stats) log.loss = stats->loss;
        log.epsilon = agent.epsilon();
        log.reward_raw = res.reward;
        log.reward_shaped = agent.shaped_reward(features, res.reward);
        log.p_current = res.next.power;
        log.loo_error = next_error;
        hooks.on_step(log);
      }
      ++global_step;
      state = res.next;
      current_error = next_error;
    }
    result.episode_errors.push_back(current_error);
    if (hooks.on_episode) hooks.on_episode(episode, current_error);
  }

  for (std::size_t i = 0; i < n; ++i)
    result.assignment.entries.push_back(
        {i, dataset[i].x, dataset[i].y, best[i].power, best[i].error});
  result.sync_events = agent.sync_events();
  result.network = agent.online();
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<double> default_grid(double p_min, double p_max, double step) {
  if (!(step > 0.0) || !(p_min > 0.0) || !(p_max >= p_min))
    throw Error("default_grid: invalid range");
  std::vector<double> grid;
  const auto first = static_cast<long long>(std::llround(p_min / step));
  const auto last = static_cast<long long>(std::llround(p_max / step));
  for (long long k = first; k <= last; ++k) grid.push_back(static_cast<double>(k) * step);
  return grid;
}

GridResult grid_search_power(const Dataset& dataset, std::size_t i, std::span<const double> grid,
                             const IdwConfig& idw) {
  if (grid.empty()) throw Error("grid_search_power: empty grid");
  std::optional<GridResult> best;
  for (double p : grid) {
    const double e = loo_error(dataset, i, p, idw);
    if (!best || e < best->error || (e == best->error && p < best->power)) best = GridResult{p, e};
  }
  return *best;
}

PowerAssignment grid_assignment(const Dataset& dataset, std::span<const double> grid,
                                const EnvConfig& env_cfg, const IdwConfig& idw) {
  auto pa = empty_assignment(dataset, env_cfg);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto g = grid_search_power(dataset, i, grid, idw);
    pa.entries.push_back({i, dataset[i].x, dataset[i].y, g.power, g.error});
  }
  return pa;
}

PowerAssignment constant_assignment(const Dataset& dataset, double power, const EnvConfig& env_cfg,
                                    const IdwConfig& idw) {
  auto pa = empty_assignment(dataset, env_cfg);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    pa.entries.push_back({i, dataset[i].x, dataset[i].y, power,
                          dataset.size() >= 2 ? loo_error(dataset, i, power, idw) : 0.0});
  return pa;
}

// ---------------------------------------------------------------------------

PowerField::PowerField(Dataset support, double field_power, double p_min, double p_max)
    : support_(std::move(support)), field_power_(field_power), p_min_(p_min), p_max_(p_max) {
  if (support_.empty()) throw Error("PowerField: empty field");
  if (!(field_power_ > 0.0)) throw Error("PowerField: field_power must be > 0");
  if (!(p_min_ > 0.0 && p_min_ <= p_max_)) throw Error("PowerField: invalid clamp range");
}

double PowerField::query_power(Point p) const {
  IdwConfig cfg;
  cfg.power = field_power_;
  return std::clamp(idw_predict(support_, p, cfg), p_min_, p_max_);
}

PowerField build_power_field(const PowerAssignment& pa, double field_power) {
  std::vector<Sample> support;
  support.reserve(pa.entries.size());
  for (std::size_t k = 0; k < pa.entries.size(); ++k) {
    const auto& e = pa.entries[k];
    if (e.index != k) throw Error("build_power_field: entries must be in index order");
    if (!(e.power >= pa.p_min && e.power <= pa.p_max))
      throw Error("build_power_field: power outside [p_min, p_max] at index " + std::to_string(k));
    support.push_back({e.x, e.y, e.power});
  }
  return PowerField(Dataset(pa.dataset_name + "-powers", std::move(support)), field_power,
                    pa.p_min, pa.p_max);
}

PowerField build_power_field(const Dataset& dataset, const PowerAssignment& pa,
                             double field_power) {
  if (pa.entries.size() != dataset.size())
    throw Error("build_power_field: assignment covers " + std::to_string(pa.entries.size()) +
                " points, dataset has " + std::to_string(dataset.size()));
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const auto& e = pa.entries[k];
    if (e.x != dataset[k].x || e.y != dataset[k].y)
      throw Error("build_power_field: coordinates of entry " + std::to_string(k) +
                  " do not match the dataset");
  }
  return build_power_field(pa, field_power);
}

double pipeline_predict(const Dataset& train, const PowerField& field, Point query,
                        const IdwConfig& idw) {
  return differential_idw_predict(train, query, field.query_power(query), idw);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PowerAssignment& pa) {
  j = nlohmann::json::object();
  j["dataset_name"] = pa.dataset_name;
  j["p_min"] = pa.p_min;
  j["p_max"] = pa.p_max;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : pa.entries)
    j["entries"].push_back({{"index", e.index},
                            {"x", e.x},
                            {"y", e.y},
                            {"power", e.power},
                            {"loo_error", e.loo_error}});
}

void from_json(const nlohmann::json& j, PowerAssignment& pa) {
  json_util::require_known_keys(j, {"dataset_name", "p_min", "p_max", "entries", "field_power"},
                                 "power assignment");
  try {
    pa.dataset_name = j.at("dataset_name").get<std::string>();
    pa.p_min = j.at("p_min").get<double>();
    pa.p_max = j.at("p_max").get<double>();
    pa.entries.clear();
    for (const auto& e : j.at("entries")) {
      json_util::require_known_keys(e, {"index", "x", "y", "power", "loo_error"},
                                    "power assignment entry");
      pa.entries.push_back({e.at("index").get<std::size_t>(), e.at("x").get<double>(),
                            e.at("y").get<double>(), e.at("power").get<double>(),
                            e.at("loo_error").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed power assignment: ") + e.what());
  }
}

nlohmann::json field_to_json(const PowerAssignment& pa, double field_power) {
  nlohmann::json j = pa;
  j["field_power"] = field_power;
  return j;
}

FieldFile field_from_json(const nlohmann::json& j) {
  FieldFile f;
  f.assignment = j.get<PowerAssignment>();
  try {
    f.field_power = j.at("field_power").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed power field: ") + e.what());
  }
  return f;
}

}  // namespace dsp::hyper
