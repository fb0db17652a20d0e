#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dsp/error.hpp"
#include "dsp/hyperfield.hpp"
#include "oracles.hpp"

using namespace dsp;
using namespace dsp::hyper;

namespace {

Dataset collinear() { return Dataset("line", {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}); }

rl::AgentConfig quick_agent(std::uint64_t seed) {
  rl::AgentConfig cfg;
  cfg.hidden = {16, 16};
  cfg.seed = seed;
  return cfg;
}

EnvConfig quick_env(std::size_t episodes, std::size_t length = 10) {
  EnvConfig env;
  env.episode_budget = episodes;
  env.episode_length = length;
  return env;
}

}  // namespace

TEST_CASE("environment step") {
  const auto d = collinear();
  PowerEnvironment env(d, rl::default_action_set(), EnvConfig{});
  const auto s0 = env.reset(0);
  CHECK(s0.power == 2.0);

  SUBCASE("no-op action keeps the power and pays nothing") {
    auto r = env.step(0, s0, 3, 0);
    CHECK(r.next.power == 2.0);
    CHECK(r.reward == 0.0);
    CHECK_FALSE(r.terminal);
  }
  SUBCASE("clamped at p_min") {
    EnvState low = s0;
    low.power = 0.1;
    auto r = env.step(0, low, 0, 0);
    CHECK(r.next.power == 0.1);
    CHECK(r.reward == 0.0);
  }
  SUBCASE("reward is the drop in leave-one-out error") {
    auto r = env.step(0, s0, 6, 0);
    CHECK(r.next.power == 3.0);
    const auto pts = oracle::points_of(d);
    CHECK(std::abs(r.reward - (oracle::loo(pts, 0, 2.0) - oracle::loo(pts, 0, 3.0))) < 1e-12);
    CHECK(r.next.std_x == s0.std_x);
    CHECK(r.next.features(env.config())[2] == 3.0 / 20.0);
  }
  SUBCASE("terminal on the last step of an episode") {
    CHECK(env.step(0, s0, 3, 49).terminal);
    CHECK_FALSE(env.step(0, s0, 3, 48).terminal);
  }
  SUBCASE("bad action index") { CHECK_THROWS_AS(env.step(0, s0, 7, 0), Error); }
}

TEST_CASE("repeated increments stay on the decimal lattice") {
  const auto d = collinear();
  PowerEnvironment env(d, rl::default_action_set(), EnvConfig{});
  auto s = env.reset(1);
  for (int k = 0; k < 7; ++k) s = env.step(1, s, 4, 0).next;  // +0.1 each
  CHECK(s.power == 2.7);
}

TEST_CASE("learn_powers falls back to p_init for unvisited points") {
  Rng rng(1);
  std::vector<Sample> s;
  for (int i = 0; i < 8; ++i) s.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.normal()});
  Dataset d("tiny", s);
  auto res = learn_powers(d, quick_agent(3), quick_env(3));
  REQUIRE(res.assignment.entries.size() == 8);
  const auto pts = oracle::points_of(d);
  for (std::size_t i = 3; i < 8; ++i) {
    CHECK(res.assignment.entries[i].power == 2.0);
    CHECK(std::abs(res.assignment.entries[i].loo_error - oracle::loo(pts, i, 2.0)) < 1e-12);
  }
  CHECK(res.episode_errors.size() == 3);
  CHECK_THROWS_AS(learn_powers(Dataset("two", {{0, 0, 1}, {1, 1, 2}}), quick_agent(3), quick_env(3)),
                  Error);
}

TEST_CASE("learned assignment is deterministic and consistent") {
  auto cfg = SyntheticConfig::defaults();
  const auto d = generate_synthetic(20, cfg, 4);
  auto a = learn_powers(d, quick_agent(11), quick_env(60));
  auto b = learn_powers(d, quick_agent(11), quick_env(60));
  CHECK(nlohmann::json(a.assignment).dump() == nlohmann::json(b.assignment).dump());
  CHECK(a.episode_errors == b.episode_errors);

  const auto pts = oracle::points_of(d);
  for (const auto& e : a.assignment.entries) {
    CHECK(e.power >= 0.1);
    CHECK(e.power <= 20.0);
    const double recomputed = oracle::loo(pts, e.index, e.power);
    CHECK(std::abs(e.loo_error - recomputed) <= 1e-9 * std::max(1.0, recomputed));
    CHECK(e.loo_error <= oracle::loo(pts, e.index, 2.0) + 1e-12);
  }
}

TEST_CASE("grid search") {
  const auto d = collinear();
  SUBCASE("singleton grid") {
    const std::vector<double> g{2.0};
    auto r = grid_search_power(d, 0, g);
    CHECK(r.power == 2.0);
    CHECK(std::abs(r.error - oracle::loo(oracle::points_of(d), 0, 2.0)) < 1e-12);
  }
  SUBCASE("symmetric neighbours make every power optimal") {
    const auto g = default_grid();
    REQUIRE(g.size() == 200);
    CHECK(g.front() == 0.1);
    CHECK(g.back() == 20.0);
    auto r = grid_search_power(d, 1, g);
    CHECK(r.power == 0.1);
    CHECK(r.error == 0.0);
  }
  SUBCASE("equidistant neighbours tie everywhere") {
    Dataset plus("plus", {{0, 0, 5}, {1, 0, 1}, {-1, 0, 3}, {0, 1, 4}, {0, -1, 9}});
    auto r = grid_search_power(plus, 0, default_grid());
    CHECK(r.power == 0.1);
  }
  SUBCASE("empty grid") { CHECK_THROWS_AS(grid_search_power(d, 0, std::vector<double>{}), Error); }
}

TEST_CASE("power field") {
  const EnvConfig env;
  Dataset d("f", {{0, 0, 10}, {4, 0, 20}, {0, 3, 30}});

  SUBCASE("constant assignment gives a constant field") {
    auto f = build_power_field(d, constant_assignment(d, 3.5, env));
    for (auto q : {Point{1, 1}, Point{-50, 20}, Point{4, 0}}) CHECK(f.query_power(q) == 3.5);
  }
  SUBCASE("exact at supports, bounded between") {
    auto pa = constant_assignment(d, 2.0, env);
    pa.entries[0].power = 1.0;
    pa.entries[1].power = 3.0;
    pa.entries[2].power = 7.0;
    auto f = build_power_field(d, pa);
    CHECK(f.query_power({0, 0}) == 1.0);
    CHECK(f.query_power({0, 3}) == 7.0);
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
      const double p = f.query_power({rng.uniform(-10, 10), rng.uniform(-10, 10)});
      CHECK(p >= 1.0);
      CHECK(p <= 7.0);
    }
    const double far = f.query_power({1e6, 1e6});
    CHECK(std::abs(far - 11.0 / 3.0) < 1e-3);
  }
  SUBCASE("two supports, equidistant query") {
    Dataset two("two", {{0, 0, 0}, {2, 0, 0}});
    auto pa = constant_assignment(two, 1.0, env);
    pa.entries[1].power = 3.0;
    CHECK(build_power_field(two, pa).query_power({1, 5}) == 2.0);
  }
  SUBCASE("single support") {
    Dataset one("one", {{1, 1, 1}});
    PowerAssignment pa{"one", 0.1, 20.0, {{0, 1, 1, 4.2, 0.0}}};
    auto f = build_power_field(one, pa);
    CHECK(f.query_power({100, -3}) == 4.2);
  }
  SUBCASE("incomplete assignment") {
    auto pa = constant_assignment(d, 2.0, env);
    pa.entries.pop_back();
    CHECK_THROWS_AS(build_power_field(d, pa), Error);
  }
}

TEST_CASE("pipeline prediction") {
  const auto d = generate_synthetic(60, SyntheticConfig::defaults(), 8);
  const EnvConfig env;
  Rng rng(12);

  SUBCASE("constant power 2 reproduces classic IDW bit for bit") {
    auto f = build_power_field(d, constant_assignment(d, 2.0, env));
    for (int k = 0; k < 300; ++k) {
      const Point q{rng.uniform(-10, 110), rng.uniform(-10, 110)};
      CHECK(pipeline_predict(d, f, q) == idw_predict(d, q, IdwConfig{}));
    }
  }
  SUBCASE("exact at training points") {
    auto pa = constant_assignment(d, 2.0, env);
    for (auto& e : pa.entries) e.power = rng.uniform(0.1, 20.0);
    auto f = build_power_field(d, pa);
    for (const auto& s : d.samples()) CHECK(pipeline_predict(d, f, s.point()) == s.value);
  }
}

TEST_CASE("learned powers differ between the rough core and the smooth rim") {
  // Per seed: mean field power over random queries inside the core minus the
  // mean outside. The difference must clear three standard errors across seeds.
  const auto cfg = SyntheticConfig::defaults();
  std::vector<double> diffs;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto d = generate_synthetic(200, cfg, seed);
    EnvConfig env = quick_env(1000, 25);
    auto res = learn_powers(d, quick_agent(seed), env);
    auto field = build_power_field(d, res.assignment);
    Rng rng(seed + 100);
    double in_sum = 0.0, out_sum = 0.0;
    int in_n = 0, out_n = 0;
    for (int k = 0; k < 2000; ++k) {
      const Point q{rng.uniform(0, 100), rng.uniform(0, 100)};
      const double p = field.query_power(q);
      if (region_index(cfg, q) == 0) {
        in_sum += p;
        ++in_n;
      } else {
        out_sum += p;
        ++out_n;
      }
    }
    diffs.push_back(in_sum / in_n - out_sum / out_n);
    MESSAGE("seed " << seed << ": inner - outer mean power = " << diffs.back());
  }
  const double n = static_cast<double>(diffs.size());
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : diffs) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  CHECK(std::abs(mean) > 3.0 * se);
}

TEST_CASE("assignment and field JSON round trip") {
  const auto d = generate_synthetic(12, SyntheticConfig::defaults(), 3);
  auto pa = constant_assignment(d, 2.0, EnvConfig{});
  pa.entries[4].power = 0.30000000000000004;
  const auto j = nlohmann::json::parse(field_to_json(pa, 1.5).dump());
  auto back = field_from_json(j);
  CHECK(back.field_power == 1.5);
  CHECK(nlohmann::json(back.assignment) == nlohmann::json(pa));

  auto bad = nlohmann::json(pa);
  bad["entries"][0]["extra"] = 1;
  CHECK_THROWS_AS(bad.get<PowerAssignment>(), Error);
  auto out_of_range = nlohmann::json(pa);
  out_of_range["entries"][0]["power"] = 25.0;
  CHECK_THROWS_AS(build_power_field(out_of_range.get<PowerAssignment>()), Error);
}
