#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsp/geo_core.hpp"
#include "dsp/idw.hpp"
#include "dsp/rl.hpp"

namespace dsp::hyper {

struct EnvConfig {
  double p_min = 0.1;
  double p_max = 20.0;
  double p_init = 2.0;
  std::size_t episode_length = 50;
  std::size_t episode_budget = 5000;

  void validate() const;
};

/// Observation for the Q-network: standardized location plus normalized power.
struct EnvState {
  double std_x = 0.0;
  double std_y = 0.0;
  double power = 0.0;

  std::vector<double> features(const EnvConfig& cfg) const {
    return {std_x, std_y, power / cfg.p_max};
  }
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool terminal = false;
};

/// Power-search environment over one dataset: each sample point is an
/// episode start, actions nudge the IDW power, and the reward is the drop in
/// that point's leave-one-out error.
class PowerEnvironment {
 public:
  PowerEnvironment(const Dataset& dataset, std::vector<double> action_set, EnvConfig cfg,
                   IdwConfig idw = {});

  EnvState reset(std::size_t i) const;
  /// `step_in_episode` is the caller's 0-based step counter; the step with
  /// index episode_length - 1 is terminal.
  StepResult step(std::size_t i, const EnvState& state, std::size_t action,
                  std::size_t step_in_episode) const;
  double error(std::size_t i, double power) const;

  const Dataset& dataset() const { return dataset_; }
  const EnvConfig& config() const { return cfg_; }
  const std::vector<double>& action_set() const { return actions_; }

 private:
  const Dataset& dataset_;
  std::vector<double> actions_;
  EnvConfig cfg_;
  IdwConfig idw_;
  StandardizationParams standardization_;
};

struct PowerEntry {
  std::size_t index = 0;
  double x = 0.0;
  double y = 0.0;
  double power = 0.0;
  double loo_error = 0.0;
};

struct PowerAssignment {
  std::string dataset_name;
  double p_min = 0.1;
  double p_max = 20.0;
  std::vector<PowerEntry> entries;  // one per sample, in index order
};

/// One record per environment step of the training loop.
struct StepLog {
  std::size_t step = 0;
  std::size_t episode = 0;
  std::optional<double> loss;  // empty while the replay buffer is filling
  double epsilon = 0.0;
  double reward_raw = 0.0;
  double reward_shaped = 0.0;
  double p_current = 0.0;
  double loo_error = 0.0;
};

struct LearnHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(std::size_t episode, double final_error)> on_episode;
};

struct LearnResult {
  PowerAssignment assignment;
  std::vector<double> episode_errors;  // LOO error at the end of each episode
  std::vector<std::size_t> sync_events;
  nn::MLPParams network;  // final online network
  double wall_seconds = 0.0;
};

/// Trains one shared agent, visiting sample points round-robin, and keeps the
/// lowest-error power seen for each point.
LearnResult learn_powers(const Dataset& dataset, rl::AgentConfig agent_cfg,
                         const EnvConfig& env_cfg, const IdwConfig& idw = {},
                         const LearnHooks& hooks = {});

/// 0.1, 0.2, ..., up to p_max (inclusive), starting at p_min.
std::vector<double> default_grid(double p_min = 0.1, double p_max = 20.0, double step = 0.1);

struct GridResult {
  double power = 0.0;
  double error = 0.0;
};

/// Exhaustive LOO minimization over `grid`; ties go to the smaller power.
GridResult grid_search_power(const Dataset& dataset, std::size_t i, std::span<const double> grid,
                             const IdwConfig& idw = {});

/// Oracle assignment built from grid_search_power at every sample.
PowerAssignment grid_assignment(const Dataset& dataset, std::span<const double> grid,
                                const EnvConfig& env_cfg, const IdwConfig& idw = {});

/// Every sample assigned the same power.
PowerAssignment constant_assignment(const Dataset& dataset, double power, const EnvConfig& env_cfg,
                                    const IdwConfig& idw = {});

class PowerField {
 public:
  PowerField(Dataset support, double field_power, double p_min, double p_max);

  /// IDW interpolation of the learned powers, clamped to [p_min, p_max].
  double query_power(Point p) const;

  const Dataset& support() const { return support_; }
  double field_power() const { return field_power_; }
  double p_min() const { return p_min_; }
  double p_max() const { return p_max_; }

 private:
  Dataset support_;  // (x, y, power)
  double field_power_;
  double p_min_;
  double p_max_;
};

/// Throws unless `pa` has exactly one entry per sample at matching coordinates.
PowerField build_power_field(const Dataset& dataset, const PowerAssignment& pa,
                             double field_power = 2.0);
PowerField build_power_field(const PowerAssignment& pa, double field_power = 2.0);

/// IDW prediction at `query` using the power the field assigns to it.
double pipeline_predict(const Dataset& train, const PowerField& field, Point query,
                        const IdwConfig& idw = {});

void to_json(nlohmann::json& j, const PowerAssignment& pa);
void from_json(const nlohmann::json& j, PowerAssignment& pa);

/// Assignment JSON plus `field_power`.
nlohmann::json field_to_json(const PowerAssignment& pa, double field_power);
struct FieldFile {
  PowerAssignment assignment;
  double field_power = 2.0;
};
FieldFile field_from_json(const nlohmann::json& j);

}  // namespace dsp::hyper
