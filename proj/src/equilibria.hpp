#pragma once

#include <string>
#include <vector>

#include "market.hpp"

namespace pricelab {

enum class EquilibriumKind { competitive, collusive };

// Constant-price benchmark solution. Demands and profits come from rolling the
// constant profile through the market for one episode, so they are directly
// comparable with realized training rewards.
struct EquilibriumSolution {
  EquilibriumKind kind = EquilibriumKind::competitive;
  std::vector<double> prices;
  std::vector<long> per_period_demand;
  std::vector<double> per_period_profit;
  long capacity_per_period = 0;
  // Competitive: best episodic profit improvement found over the checked
  // deviation family. Collusive: best total-profit improvement found off the
  // returned joint profile. Zero means nothing better was found.
  double certification_gap = 0.0;
};

struct SolverConfig {
  // NaN bounds are derived from the market parameters at solve time.
  double price_search_lo = std::numeric_limits<double>::quiet_NaN();
  double price_search_hi = std::numeric_limits<double>::quiet_NaN();
  double resolution = 1e-4;
  int max_gauss_seidel_iters = 200;
  double convergence_tol = 1e-5;
  int restarts = 8;
  std::uint64_t seed = 1;  // restart starting points
  // Accept an epsilon-equilibrium whose certified gap is at most this fraction
  // of the episodic equilibrium profit. The floor demand makes exact fixed
  // points unattainable in general.
  double epsilon_tolerance = 0.005;
  // Discounted equilibria are out of scope; rejected when set.
  bool discounting = false;

  void validate() const;
};

// Profit-maximizing constant price for one agent against fixed opponent
// prices, subject to the per-period capacity, by exhaustive scan of the fine
// price lattice. Ties resolve to the highest price. joint_prices[agent] is
// ignored. If no lattice point is feasible, returns the lowest price whose
// floor demand fits the capacity.
double best_response(const std::vector<double>& joint_prices, int agent,
                     long capacity_per_period, const MarketParams& params,
                     const SolverConfig& cfg);

EquilibriumSolution solve_nash(const MarketParams& params, long capacity_per_period,
                               const SolverConfig& cfg);

EquilibriumSolution solve_monopoly(const MarketParams& params, long capacity_per_period,
                                   const SolverConfig& cfg);

// Largest episodic profit any single agent gains by deviating from the
// candidate constant profile to (a) any constant lattice price or (b) any
// lattice price in any single period, with infeasible deviations repaired by
// feasibilize() first.
double certify_nash(const EquilibriumSolution& candidate, const MarketParams& params,
                    const SolverConfig& cfg);

// Episodic revenue of one agent in the simultaneous-move game: every opponent
// stays active at its fixed price vector and only the agent's own sales are
// capped by remaining inventory. all_prices[agent] is ignored in favor of
// own_prices.
double smg_rollout_profit(const std::vector<double>& own_prices,
                          const std::vector<std::vector<double>>& all_prices, int agent,
                          const MarketParams& params, long capacity_total);

// Sell-out repair: keeps the input prices up to the sell-out time, prices the
// sell-out period so demand exactly equals the remaining inventory, and prices
// later periods out of the market. The result satisfies the episodic demand
// constraint and earns at least the input's revenue. opponent_prices[agent]
// is ignored.
std::vector<double> feasibilize(const std::vector<double>& price_vector,
                                const std::vector<std::vector<double>>& opponent_prices,
                                int agent, const MarketParams& params);

struct CapacityRow {
  long capacity = 0;
  double nash_price = 0.0;
  double monopoly_price = 0.0;
  long nash_demand = 0;
  long monopoly_demand = 0;
  double nash_profit = 0.0;
  double monopoly_profit = 0.0;
};

std::vector<CapacityRow> capacity_sweep(const MarketParams& params,
                                        const std::vector<long>& capacities,
                                        const SolverConfig& cfg);

void write_capacity_sweep_csv(const std::string& path, const std::vector<CapacityRow>& rows,
                              const std::string& config_hash);

}  // namespace pricelab
