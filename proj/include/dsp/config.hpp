#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "dsp/eval.hpp"
#include "dsp/geo_core.hpp"
#include "dsp/hyperfield.hpp"
#include "dsp/idw.hpp"
#include "dsp/rl.hpp"

namespace dsp {

/// Everything a CLI run can be configured with. Loaded from JSON; every key is
/// optional, unknown keys are rejected.
///
///   { "seed": 42,
///     "synth": { n, seed, regions, base_field },
///     "idw":   { zero_distance_epsilon, neighbor_limit },
///     "agent": { variant, gamma, epsilon_start, epsilon_end, epsilon_decay_episodes,
///                lambda, batch_size, buffer_capacity, sync_period, learning_rate,
///                action_set, hidden, aggregation },
///     "env":   { p_min, p_max, p_init, episode_length, episode_budget },
///     "field": { field_power },
///     "eval":  { train_fraction, classic_power, window, precision } }
struct RunConfig {
  std::uint64_t seed = 42;
  SyntheticConfig synth = SyntheticConfig::defaults();
  IdwConfig idw;
  rl::AgentConfig agent;
  hyper::EnvConfig env;
  double field_power = 2.0;
  double train_fraction = 0.8;
  double classic_power = 2.0;
  std::size_t curve_window = 100;
  double curve_precision = 0.01;

  static RunConfig load(const std::filesystem::path& path);

  /// Re-derives the per-module seeds after `seed` changes.
  void reseed(std::uint64_t global_seed);
  std::uint64_t split_seed() const;
  eval::CompareConfig compare_config() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace dsp
