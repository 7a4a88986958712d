#include "market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pricelab {

double PriceGrid::spacing() const {
  if (prices.size() < 2) return 0.0;
  return (prices.back() - prices.front()) / static_cast<double>(prices.size() - 1);
}

void PriceGrid::validate() const {
  require(prices.size() >= 2, Errc::invalid_argument, "price grid needs at least 2 points");
  for (size_t i = 1; i < prices.size(); ++i)
    require(prices[i] > prices[i - 1], Errc::invalid_argument,
            "price grid must be strictly increasing");
  const double h = spacing();
  for (size_t i = 1; i < prices.size(); ++i) {
    const double gap = prices[i] - prices[i - 1];
    require(std::abs(gap - h) <= 1e-9 * std::max(1.0, std::abs(h)), Errc::invalid_argument,
            "price grid must be equally spaced");
  }
  require(nash_index >= 0 && monopoly_index > nash_index && monopoly_index < size(),
          Errc::invalid_argument, "grid anchor indices out of order");
}

PriceGrid build_price_grid(double p_low_anchor, double p_high_anchor, double xi, int k) {
  require(p_low_anchor < p_high_anchor, Errc::invalid_argument,
          "invalid-bounds: grid anchors must satisfy low < high");
  require(k >= 2, Errc::invalid_argument, "invalid-size: grid needs at least 2 points");
  require(xi >= 0.0 && xi < 0.5, Errc::invalid_argument, "xi must lie in [0, 0.5)");

  const double width = p_high_anchor - p_low_anchor;
  const double lo = p_low_anchor - xi * width;
  const double hi = p_high_anchor + xi * width;

  PriceGrid grid;
  grid.prices.resize(k);
  for (int i = 0; i < k; ++i)
    grid.prices[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);

  auto nearest = [&](double anchor) {
    int best = 0;
    for (int i = 1; i < k; ++i)
      if (std::abs(grid.prices[i] - anchor) < std::abs(grid.prices[best] - anchor)) best = i;
    return best;
  };
  grid.nash_index = nearest(p_low_anchor);
  grid.monopoly_index = nearest(p_high_anchor);
  grid.validate();
  return grid;
}

void MarketParams::validate(bool require_grid) const {
  require(n >= 1, Errc::invalid_argument, "market needs at least one agent");
  require(static_cast<int>(qualities.size()) == n, Errc::invalid_argument,
          "qualities size mismatch");
  require(static_cast<int>(costs.size()) == n, Errc::invalid_argument, "costs size mismatch");
  require(static_cast<int>(capacities.size()) == n, Errc::invalid_argument,
          "capacities size mismatch");
  require(differentiation > 0.0, Errc::invalid_argument, "differentiation scale must be > 0");
  require(demand_scale >= 1, Errc::invalid_argument, "demand scale must be >= 1");
  require(horizon >= 1, Errc::invalid_argument, "horizon must be >= 1");
  for (double c : costs) require(c >= 0.0, Errc::invalid_argument, "costs must be >= 0");
  for (long cap : capacities)
    require(cap >= 0, Errc::invalid_argument, "capacities must be >= 0");
  if (require_grid || !grid.empty()) grid.validate();
}

bool MarketParams::identical_agents() const {
  for (int i = 1; i < n; ++i)
    if (qualities[i] != qualities[0] || costs[i] != costs[0] || capacities[i] != capacities[0])
      return false;
  return true;
}

std::vector<double> mnl_demand(const std::vector<double>& prices,
                               const std::vector<bool>& active, const MarketParams& params) {
  require(static_cast<int>(prices.size()) == params.n &&
              static_cast<int>(active.size()) == params.n,
          Errc::shape_mismatch, "mnl_demand: price/active size mismatch");
  const double mu = params.differentiation;
  double denom = std::exp(params.outside_quality / mu);
  std::vector<double> weight(params.n, 0.0);
  for (int j = 0; j < params.n; ++j) {
    if (!active[j]) continue;
    weight[j] = std::exp((params.qualities[j] - prices[j]) / mu);
    denom += weight[j];
  }
  std::vector<double> d(params.n, 0.0);
  for (int j = 0; j < params.n; ++j)
    if (active[j]) d[j] = weight[j] / denom;
  return d;
}

StepOutcome step(const MarketState& state, const std::vector<int>& actions,
                 const MarketParams& params) {
  require(state.t <= params.horizon, Errc::invalid_argument,
          "episode-finished: step past horizon");
  require(static_cast<int>(actions.size()) == params.n, Errc::shape_mismatch,
          "step: one action per agent required");
  const int k = params.grid.size();
  std::vector<double> prices(params.n);
  std::vector<bool> active(params.n);
  for (int i = 0; i < params.n; ++i) {
    require(actions[i] >= 0 && actions[i] < k, Errc::invalid_argument,
            "step: action index out of range");
    prices[i] = params.grid.prices[actions[i]];
    active[i] = state.inventories[i] > 0;
  }

  StepOutcome out;
  out.demands = mnl_demand(prices, active, params);
  out.quantities.resize(params.n);
  out.rewards.resize(params.n);
  out.next_state.last_prices = actions;
  out.next_state.inventories.resize(params.n);
  out.next_state.t = state.t + 1;
  for (int i = 0; i < params.n; ++i) {
    const long demanded =
        static_cast<long>(std::floor(static_cast<double>(params.demand_scale) * out.demands[i]));
    out.quantities[i] = std::min(demanded, state.inventories[i]);
    out.rewards[i] = (prices[i] - params.costs[i]) * static_cast<double>(out.quantities[i]);
    out.next_state.inventories[i] = state.inventories[i] - out.quantities[i];
  }
  return out;
}

MarketState reset(const MarketParams& params, Rng& rng) {
  MarketState s;
  s.t = 1;
  s.inventories = params.capacities;
  s.last_prices.resize(params.n);
  for (int i = 0; i < params.n; ++i)
    s.last_prices[i] = static_cast<int>(rng.uniform_int(params.grid.size()));
  return s;
}

MarketState reset(const MarketParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return reset(params, rng);
}

int observation_size(const MarketParams& params, const ObservationSpec& spec) {
  int size = params.n + 1;  // all prices + own inventory
  if (spec.include_opponent_inventory) size += params.n - 1;
  if (spec.include_time) size += 1;
  return size;
}

std::vector<double> observe(const MarketState& state, int agent, const ObservationSpec& spec,
                            const MarketParams& params) {
  require(agent >= 0 && agent < params.n, Errc::invalid_argument, "observe: bad agent index");
  const double lo = params.grid.low();
  const double range = params.grid.high() - lo;
  auto price_frac = [&](int idx) { return (params.grid.prices[idx] - lo) / range; };
  auto fill_frac = [&](int i) {
    return params.capacities[i] > 0
               ? static_cast<double>(state.inventories[i]) / static_cast<double>(params.capacities[i])
               : 0.0;
  };

  std::vector<double> obs;
  obs.reserve(observation_size(params, spec));
  obs.push_back(price_frac(state.last_prices[agent]));
  for (int j = 0; j < params.n; ++j)
    if (j != agent) obs.push_back(price_frac(state.last_prices[j]));
  obs.push_back(fill_frac(agent));
  if (spec.include_opponent_inventory)
    for (int j = 0; j < params.n; ++j)
      if (j != agent) obs.push_back(fill_frac(j));
  if (spec.include_time)
    obs.push_back(static_cast<double>(state.t) / static_cast<double>(params.horizon));
  return obs;
}

std::pair<double, double> reward_bounds(const MarketParams& params) {
  params.validate(true);
  const int k = params.grid.size();
  MarketState full;
  full.t = 1;
  full.inventories = params.capacities;
  full.last_prices.assign(params.n, 0);

  double r_max = 0.0;
  std::vector<int> joint(params.n, 0);
  for (;;) {
    const StepOutcome out = step(full, joint, params);
    for (int i = 0; i < params.n; ++i) r_max = std::max(r_max, out.rewards[i]);
    int pos = params.n - 1;
    while (pos >= 0 && ++joint[pos] == k) joint[pos--] = 0;
    if (pos < 0) break;
  }
  return {0.0, r_max};
}

}  // namespace pricelab
