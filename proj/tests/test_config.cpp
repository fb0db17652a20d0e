#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dsp/config.hpp"
#include "dsp/error.hpp"

using namespace dsp;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  auto path = std::filesystem::temp_directory_path() / ("dsp_config_" + name + ".json");
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("defaults") {
  RunConfig c;
  CHECK(c.seed == 42);
  CHECK(c.agent.variant == rl::Variant::rsv_dudqn);
  CHECK(c.env.episode_budget == 5000);
  CHECK(c.train_fraction == 0.8);
}

TEST_CASE("loading overrides and rejects typos") {
  auto ok = write_temp("ok", R"({"seed": 7, "agent": {"gamma": 0.5, "variant": "ddqn"},
                                  "env": {"episode_budget": 10}, "eval": {"window": 3}})");
  auto c = RunConfig::load(ok);
  CHECK(c.seed == 7);
  CHECK(c.agent.gamma == 0.5);
  CHECK(c.agent.variant == rl::Variant::ddqn);
  CHECK(c.env.episode_budget == 10);
  CHECK(c.curve_window == 3);
  CHECK(c.agent.batch_size == 32);

  CHECK_THROWS_WITH_AS(RunConfig::load(write_temp("top", R"({"sead": 1})")),
                       doctest::Contains("unknown key 'sead'"), Error);
  CHECK_THROWS_WITH_AS(RunConfig::load(write_temp("nested", R"({"agent": {"gama": 0.5}})")),
                       doctest::Contains("unknown key 'gama'"), Error);
  CHECK_THROWS_AS(RunConfig::load(write_temp("bad", R"({"agent": {"lambda": 2.0}})")), Error);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/dsp.json"), Error);
}

TEST_CASE("reseed derives distinct per-module seeds") {
  RunConfig a, b;
  a.reseed(1);
  b.reseed(2);
  CHECK(a.synth.seed == 1);
  CHECK(a.agent.seed != b.agent.seed);
  CHECK(a.split_seed() != a.agent.seed);
  RunConfig c;
  c.reseed(1);
  CHECK(c.agent.seed == a.agent.seed);
}
