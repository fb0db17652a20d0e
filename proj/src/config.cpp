#include "dsp/config.hpp"

#include <fstream>

#include "dsp/error.hpp"
#include "dsp/json_util.hpp"
#include "dsp/rng.hpp"

namespace dsp {

namespace {

using json_util::read_if_present;
using json_util::require_known_keys;

void read_agent(const nlohmann::json& j, rl::AgentConfig& a) {
  require_known_keys(j,
                     {"variant", "gamma", "epsilon_start", "epsilon_end", "epsilon_decay_episodes",
                      "lambda", "batch_size", "buffer_capacity", "sync_period", "learning_rate",
                      "action_set", "hidden", "aggregation"},
                     "agent");
  if (auto it = j.find("variant"); it != j.end()) a.variant = rl::parse_variant(it->get<std::string>());
  read_if_present(j, "gamma", a.gamma, "agent");
  read_if_present(j, "epsilon_start", a.epsilon_start, "agent");
  read_if_present(j, "epsilon_end", a.epsilon_end, "agent");
  read_if_present(j, "epsilon_decay_episodes", a.epsilon_decay_episodes, "agent");
  read_if_present(j, "lambda", a.lambda, "agent");
  read_if_present(j, "batch_size", a.batch_size, "agent");
  read_if_present(j, "buffer_capacity", a.buffer_capacity, "agent");
  read_if_present(j, "sync_period", a.sync_period, "agent");
  read_if_present(j, "learning_rate", a.learning_rate, "agent");
  read_if_present(j, "action_set", a.action_set, "agent");
  read_if_present(j, "hidden", a.hidden, "agent");
  if (auto it = j.find("aggregation"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "mean") {
      a.aggregation = rl::Aggregation::mean;
    } else if (s == "max") {
      a.aggregation = rl::Aggregation::max;
    } else {
      throw Error("agent.aggregation: expected 'mean' or 'max', got '" + s + "'");
    }
  }
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
  return j.get<RunConfig>();
}

void RunConfig::reseed(std::uint64_t global_seed) {
  seed = global_seed;
  synth.seed = global_seed;
  agent.seed = derive_seed(global_seed, "agent");
}

std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, "split"); }

eval::CompareConfig RunConfig::compare_config() const {
  eval::CompareConfig c;
  c.train_fraction = train_fraction;
  c.classic_power = classic_power;
  c.field_power = field_power;
  c.agent = agent;
  c.env = env;
  c.idw = idw;
  return c;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json::object();
  j["seed"] = c.seed;
  j["synth"] = c.synth;
  j["idw"] = {{"zero_distance_epsilon", c.idw.zero_distance_epsilon},
              {"neighbor_limit", c.idw.neighbor_limit}};
  j["agent"] = {{"variant", rl::to_string(c.agent.variant)},
                {"gamma", c.agent.gamma},
                {"epsilon_start", c.agent.epsilon_start},
                {"epsilon_end", c.agent.epsilon_end},
                {"epsilon_decay_episodes", c.agent.epsilon_decay_episodes},
                {"lambda", c.agent.lambda},
                {"batch_size", c.agent.batch_size},
                {"buffer_capacity", c.agent.buffer_capacity},
                {"sync_period", c.agent.sync_period},
                {"learning_rate", c.agent.learning_rate},
                {"action_set", c.agent.action_set},
                {"hidden", c.agent.hidden},
                {"aggregation", c.agent.aggregation == rl::Aggregation::mean ? "mean" : "max"}};
  j["env"] = {{"p_min", c.env.p_min},
              {"p_max", c.env.p_max},
              {"p_init", c.env.p_init},
              {"episode_length", c.env.episode_length},
              {"episode_budget", c.env.episode_budget}};
  j["field"] = {{"field_power", c.field_power}};
  j["eval"] = {{"train_fraction", c.train_fraction},
               {"classic_power", c.classic_power},
               {"window", c.curve_window},
               {"precision", c.curve_precision}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  require_known_keys(j, {"seed", "synth", "idw", "agent", "env", "field", "eval"}, "config");
  std::uint64_t seed = c.seed;
  read_if_present(j, "seed", seed, "config");
  c.reseed(seed);
  if (auto it = j.find("synth"); it != j.end()) {
    from_json(*it, c.synth);
    if (!it->contains("seed")) c.synth.seed = seed;
  }
  if (auto it = j.find("idw"); it != j.end()) {
    require_known_keys(*it, {"zero_distance_epsilon", "neighbor_limit"}, "idw");
    read_if_present(*it, "zero_distance_epsilon", c.idw.zero_distance_epsilon, "idw");
    read_if_present(*it, "neighbor_limit", c.idw.neighbor_limit, "idw");
  }
  if (auto it = j.find("agent"); it != j.end()) read_agent(*it, c.agent);
  if (auto it = j.find("env"); it != j.end()) {
    require_known_keys(*it, {"p_min", "p_max", "p_init", "episode_length", "episode_budget"}, "env");
    read_if_present(*it, "p_min", c.env.p_min, "env");
    read_if_present(*it, "p_max", c.env.p_max, "env");
    read_if_present(*it, "p_init", c.env.p_init, "env");
    read_if_present(*it, "episode_length", c.env.episode_length, "env");
    read_if_present(*it, "episode_budget", c.env.episode_budget, "env");
  }
  if (auto it = j.find("field"); it != j.end()) {
    require_known_keys(*it, {"field_power"}, "field");
    read_if_present(*it, "field_power", c.field_power, "field");
  }
  if (auto it = j.find("eval"); it != j.end()) {
    require_known_keys(*it, {"train_fraction", "classic_power", "window", "precision"}, "eval");
    read_if_present(*it, "train_fraction", c.train_fraction, "eval");
    read_if_present(*it, "classic_power", c.classic_power, "eval");
    read_if_present(*it, "window", c.curve_window, "eval");
    read_if_present(*it, "precision", c.curve_precision, "eval");
  }
  c.idw.validate();
  c.env.validate();
  c.agent.validate();
  if (!(c.field_power > 0.0) || !(c.classic_power > 0.0))
    throw Error("config: field_power and classic_power must be > 0");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw Error("config: eval.train_fraction must lie in (0, 1)");
  if (c.curve_window == 0) throw Error("config: eval.window must be >= 1");
  if (!(c.curve_precision >= 0.0)) throw Error("config: eval.precision must be >= 0");
}

}  // namespace dsp
