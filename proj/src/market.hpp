#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace pricelab {

// Shared discrete action set: every agent picks prices from the same grid.
struct PriceGrid {
  std::vector<double> prices;  // strictly increasing, equally spaced
  int nash_index = -1;         // grid point nearest the competitive anchor
  int monopoly_index = -1;     // grid point nearest the collusive anchor

  int size() const { return static_cast<int>(prices.size()); }
  bool empty() const { return prices.empty(); }
  double low() const { return prices.front(); }
  double high() const { return prices.back(); }
  double spacing() const;
  void validate() const;
};

// Grid over [p_low - xi*(p_high-p_low), p_high + xi*(p_high-p_low)] with
// k equally spaced points; anchor indices point at the nearest grid prices.
PriceGrid build_price_grid(double p_low_anchor, double p_high_anchor, double xi, int k);

struct MarketParams {
  int n = 0;                      // number of agents
  std::vector<double> qualities;  // product quality per agent
  double outside_quality = 0.0;   // quality of the outside (no-purchase) option
  double differentiation = 0.0;   // horizontal differentiation scale, > 0
  std::vector<double> costs;      // marginal cost per unit
  long demand_scale = 0;          // units demanded per unit of choice probability
  int horizon = 0;                // timesteps per episode
  std::vector<long> capacities;   // sellable units per episode
  PriceGrid grid;                 // may stay empty for solver-only use

  void validate(bool require_grid = true) const;
  bool identical_agents() const;
};

// Markov game state: previous joint prices (as grid indices), remaining
// inventories, and the 1-based timestep about to be played.
struct MarketState {
  std::vector<int> last_prices;
  std::vector<long> inventories;
  int t = 1;
};

struct StepOutcome {
  std::vector<double> demands;   // choice probabilities, 0 for sold-out agents
  std::vector<long> quantities;  // units sold this period
  std::vector<double> rewards;   // (price - cost) * quantity
  MarketState next_state;
};

struct ObservationSpec {
  bool include_opponent_inventory = true;
  bool include_time = true;
};

// Logit demand with choice substitution: sold-out agents are dropped from both
// numerator and denominator, so the remaining agents absorb their share. The
// outside option keeps the total strictly below one.
std::vector<double> mnl_demand(const std::vector<double>& prices,
                               const std::vector<bool>& active, const MarketParams& params);

// Deterministic transition: demands at the chosen prices, sales capped by
// inventory, profit rewards, inventories decremented.
StepOutcome step(const MarketState& state, const std::vector<int>& actions,
                 const MarketParams& params);

MarketState reset(const MarketParams& params, Rng& rng);
MarketState reset(const MarketParams& params, std::uint64_t seed);

int observation_size(const MarketParams& params, const ObservationSpec& spec);

// Per-agent view: [own price, opponent prices..., own inventory,
// opponent inventories..., time], prices normalized over the grid range,
// inventories as fill fractions, time as t/T. Masked entries are omitted.
std::vector<double> observe(const MarketState& state, int agent, const ObservationSpec& spec,
                            const MarketParams& params);

// (R_min, R_max) over the joint action grid at full inventories. R_min is 0,
// R_max found by exhaustive enumeration of the K^n joint actions.
std::pair<double, double> reward_bounds(const MarketParams& params);

}  // namespace pricelab
