#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "market.hpp"
#include "test_util.hpp"

using namespace pricelab;
using namespace pricelab::testutil;

TEST_CASE("price grid from the published anchors") {
  const PriceGrid grid = build_price_grid(1.693, 1.925, 0.2, 15);
  CHECK(grid.size() == 15);
  CHECK(grid.prices[2] == doctest::Approx(1.693).epsilon(1e-12));
  CHECK(grid.prices[12] == doctest::Approx(1.925).epsilon(1e-12));
  CHECK(grid.spacing() == doctest::Approx(0.0232).epsilon(1e-9));
  CHECK(grid.nash_index == 2);
  CHECK(grid.monopoly_index == 12);
  CHECK(grid.low() == doctest::Approx(1.6466).epsilon(1e-12));
  CHECK(grid.high() == doctest::Approx(1.9714).epsilon(1e-12));
}

TEST_CASE("price grid with zero margin uses the anchors as endpoints") {
  const PriceGrid grid = build_price_grid(1.0, 2.0, 0.0, 2);
  CHECK(grid.prices[0] == 1.0);
  CHECK(grid.prices[1] == 2.0);
  CHECK(grid.nash_index == 0);
  CHECK(grid.monopoly_index == 1);
}

TEST_CASE("price grid from the unconstrained anchors") {
  const PriceGrid grid = build_price_grid(1.471, 1.925, 0.2, 15);
  CHECK(grid.prices[0] == doctest::Approx(1.3802).epsilon(1e-9));
  CHECK(grid.prices[14] == doctest::Approx(2.0158).epsilon(1e-9));
}

TEST_CASE("price grid rejects bad arguments") {
  CHECK_THROWS_AS(build_price_grid(2.0, 1.0, 0.2, 15), Error);  // invalid bounds
  CHECK_THROWS_AS(build_price_grid(1.0, 2.0, 0.2, 1), Error);   // invalid size
  CHECK_THROWS_AS(build_price_grid(1.0, 2.0, 0.5, 15), Error);  // xi out of range
}

TEST_CASE("logit demand at the symmetric collusive price") {
  const MarketParams p = duopoly_with_grid();
  const auto d = mnl_demand({1.925, 1.925}, {true, true}, p);
  CHECK(d[0] == doctest::Approx(0.364854550533).epsilon(1e-9));
  CHECK(d[1] == doctest::Approx(d[0]).epsilon(1e-12));
}

TEST_CASE("logit demand with an inactive opponent") {
  const MarketParams p = duopoly_with_grid();
  const auto d = mnl_demand({2.0, 1.6466}, {true, false}, p);
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-12));  // quality equals price, outside term 1
  CHECK(d[1] == 0.0);
}

TEST_CASE("logit demand at the extreme grid prices") {
  const MarketParams p = duopoly_with_grid();
  const auto d = mnl_demand({1.6466, 1.9714}, {true, true}, p);
  CHECK(d[0] == doctest::Approx(0.659623709012).epsilon(1e-9));
  CHECK(d[1] == doctest::Approx(0.179912304432).epsilon(1e-9));
}

TEST_CASE("demand shares plus the outside share sum to one") {
  const MarketParams p = duopoly_with_grid();
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> prices{p.grid.prices[rng.uniform_int(15)],
                                     p.grid.prices[rng.uniform_int(15)]};
    const std::vector<bool> active{rng.uniform() < 0.8, rng.uniform() < 0.8};
    const auto d = mnl_demand(prices, active, p);
    double outside = std::exp(p.outside_quality / p.differentiation);
    double denom = outside;
    for (int i = 0; i < 2; ++i)
      if (active[i]) denom += std::exp((p.qualities[i] - prices[i]) / p.differentiation);
    const double total = d[0] + d[1] + outside / denom;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("raising one price lowers own demand and raises the others") {
  const MarketParams p = duopoly_with_grid();
  const auto base = mnl_demand({1.8, 1.8}, {true, true}, p);
  const auto bumped = mnl_demand({1.85, 1.8}, {true, true}, p);
  CHECK(bumped[0] < base[0]);
  CHECK(bumped[1] > base[1]);
}

TEST_CASE("step at the symmetric collusive price") {
  MarketParams p = duopoly_with_grid();
  p.capacities = {1000, 1000};
  MarketState s;
  s.last_prices = {0, 0};
  s.inventories = {1000, 1000};
  s.t = 1;
  const StepOutcome out = step(s, {12, 12}, p);  // grid[12] = 1.925
  CHECK(out.quantities[0] == 364);
  CHECK(out.quantities[1] == 364);
  CHECK(out.rewards[0] == doctest::Approx(336.7).epsilon(1e-9));
  CHECK(out.next_state.inventories[0] == 636);
  CHECK(out.next_state.inventories[1] == 636);
  CHECK(out.next_state.t == 2);
  CHECK(out.next_state.last_prices == std::vector<int>{12, 12});
}

TEST_CASE("sold-out agent is excluded and earns nothing") {
  MarketParams p = duopoly_with_grid();
  MarketState s;
  s.last_prices = {0, 0};
  s.inventories = {0, 500};
  s.t = 1;
  const StepOutcome out = step(s, {3, 7}, p);
  CHECK(out.demands[0] == 0.0);
  CHECK(out.quantities[0] == 0);
  CHECK(out.rewards[0] == 0.0);
  // the survivor's demand is the single-agent share
  const double expect =
      oracle_demand(p.grid.prices[7], {}, p.qualities[1], p.outside_quality, p.differentiation);
  CHECK(out.demands[1] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sold-out agent's price does not move the others") {
  MarketParams p = duopoly_with_grid();
  MarketState s;
  s.last_prices = {0, 0};
  s.inventories = {0, 500};
  s.t = 1;
  const StepOutcome a = step(s, {0, 7}, p);
  const StepOutcome b = step(s, {14, 7}, p);
  CHECK(a.demands[1] == b.demands[1]);
  CHECK(a.rewards[1] == b.rewards[1]);
}

TEST_CASE("sales are capped by remaining inventory") {
  MarketParams p = duopoly_with_grid();
  MarketState s;
  s.last_prices = {0, 0};
  s.inventories = {100, 1000};
  s.t = 1;
  const StepOutcome out = step(s, {0, 14}, p);  // cheap vs expensive: demand ~659
  CHECK(out.quantities[0] == 100);
  CHECK(out.next_state.inventories[0] == 0);
}

TEST_CASE("stepping past the horizon is an error") {
  MarketParams p = duopoly_with_grid();
  MarketState s;
  s.last_prices = {0, 0};
  s.inventories = {100, 100};
  s.t = p.horizon + 1;
  CHECK_THROWS_AS(step(s, {0, 0}, p), Error);
}

TEST_CASE("inventory is conserved over an episode") {
  MarketParams p = duopoly_with_grid(100, 10);
  Rng rng(11);
  MarketState s = reset(p, rng);
  std::vector<long> sold(2, 0);
  for (int t = 1; t <= p.horizon; ++t) {
    const std::vector<int> actions{static_cast<int>(rng.uniform_int(15)),
                                   static_cast<int>(rng.uniform_int(15))};
    const StepOutcome out = step(s, actions, p);
    sold[0] += out.quantities[0];
    sold[1] += out.quantities[1];
    s = out.next_state;
  }
  for (int i = 0; i < 2; ++i) CHECK(p.capacities[i] == s.inventories[i] + sold[i]);
}

TEST_CASE("step is deterministic") {
  const MarketParams p = duopoly_with_grid();
  MarketState s;
  s.last_prices = {3, 9};
  s.inventories = {4000, 5200};
  s.t = 5;
  const StepOutcome a = step(s, {2, 12}, p);
  const StepOutcome b = step(s, {2, 12}, p);
  CHECK(a.demands == b.demands);
  CHECK(a.quantities == b.quantities);
  CHECK(a.rewards == b.rewards);
}

TEST_CASE("reset is deterministic per seed and fills inventories") {
  MarketParams p = duopoly_with_grid();
  p.capacities = {8800, 8800};
  const MarketState a = reset(p, 42);
  const MarketState b = reset(p, 42);
  CHECK(a.last_prices == b.last_prices);
  CHECK(a.inventories == std::vector<long>{8800, 8800});
  CHECK(a.t == 1);
  for (int trial = 0; trial < 50; ++trial) {
    const MarketState s = reset(p, trial);
    for (int idx : s.last_prices) {
      CHECK(idx >= 0);
      CHECK(idx < 15);
    }
  }
}

TEST_CASE("observation layout and masks") {
  const MarketParams p = duopoly_with_grid();
  MarketState s;
  s.last_prices = {0, 14};
  s.inventories = p.capacities;
  s.t = 1;

  ObservationSpec full;
  const auto obs = observe(s, 0, full, p);
  REQUIRE(obs.size() == 5);
  CHECK(obs[0] == doctest::Approx(0.0));        // own price at the grid floor
  CHECK(obs[1] == doctest::Approx(1.0));        // opponent at the ceiling
  CHECK(obs[2] == doctest::Approx(1.0));        // own fill fraction
  CHECK(obs[3] == doctest::Approx(1.0));        // opponent fill fraction
  CHECK(obs[4] == doctest::Approx(1.0 / 20.0));  // t/T

  // own-first ordering from the other agent's perspective
  const auto obs1 = observe(s, 1, full, p);
  CHECK(obs1[0] == doctest::Approx(1.0));
  CHECK(obs1[1] == doctest::Approx(0.0));

  ObservationSpec masked;
  masked.include_opponent_inventory = false;
  masked.include_time = false;
  CHECK(observe(s, 0, masked, p).size() == 3);
  CHECK(observation_size(p, masked) == 3);
}

TEST_CASE("reward bounds by exhaustive enumeration") {
  MarketParams p = duopoly_with_grid();

  // independent oracle: enumerate the 15x15 joint grid directly
  double oracle = 0.0;
  for (int a = 0; a < 15; ++a)
    for (int b = 0; b < 15; ++b) {
      const double pa = p.grid.prices[a];
      const double pb = p.grid.prices[b];
      const double da =
          oracle_demand(pa, {pb}, p.qualities[0], p.outside_quality, p.differentiation);
      const double db =
          oracle_demand(pb, {pa}, p.qualities[1], p.outside_quality, p.differentiation);
      oracle = std::max(oracle, (pa - 1.0) * std::floor(1000.0 * da));
      oracle = std::max(oracle, (pb - 1.0) * std::floor(1000.0 * db));
    }

  const auto [r_min, r_max] = reward_bounds(p);
  CHECK(r_min == 0.0);
  CHECK(r_max == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(r_max == doctest::Approx(427.3324).epsilon(1e-4));
}

TEST_CASE("reward bounds for a single unconstrained agent match the closed form") {
  MarketParams p;
  p.n = 1;
  p.qualities = {2.0};
  p.outside_quality = 0.0;
  p.differentiation = 0.25;
  p.costs = {1.0};
  p.demand_scale = 1000;
  p.horizon = 5;
  p.capacities = {100000};
  p.grid = build_price_grid(1.8, 2.2, 0.0, 2);

  double expect = 0.0;
  for (double price : p.grid.prices) {
    const double d =
        oracle_demand(price, {}, p.qualities[0], p.outside_quality, p.differentiation);
    expect = std::max(expect, (price - 1.0) * std::floor(1000.0 * d));
  }
  const auto [r_min, r_max] = reward_bounds(p);
  CHECK(r_min == 0.0);
  CHECK(r_max == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("reward bound is zero with no capacity") {
  MarketParams p = duopoly_with_grid();
  p.capacities = {0, 0};
  const auto [r_min, r_max] = reward_bounds(p);
  CHECK(r_min == 0.0);
  CHECK(r_max == 0.0);
}
