#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "equilibria.hpp"
#include "test_util.hpp"

using namespace pricelab;
using namespace pricelab::testutil;

namespace {

// Independent fine-scan oracle for one agent's constrained best response.
double oracle_best_response(double opponent_price, long cap, const MarketParams& p, double lo,
                            double hi, double res, double* best_profit = nullptr) {
  double best_p = lo, best = -1.0;
  for (double q = lo; q <= hi; q += res) {
    const double d = oracle_demand(q, {opponent_price}, p.qualities[0], p.outside_quality,
                                   p.differentiation);
    const double fd = std::floor(static_cast<double>(p.demand_scale) * d);
    if (fd > static_cast<double>(cap)) continue;
    const double profit = (q - p.costs[0]) * fd;
    if (profit >= best) {
      best = profit;
      best_p = q;
    }
  }
  if (best_profit) *best_profit = best;
  return best_p;
}

std::vector<std::vector<double>> constant_profile(const std::vector<double>& prices, int t) {
  std::vector<std::vector<double>> out;
  for (double p : prices) out.emplace_back(t, p);
  return out;
}

long gnep_total_demand(const std::vector<double>& own, const std::vector<std::vector<double>>& all,
                       int agent, const MarketParams& p) {
  long total = 0;
  for (int t = 0; t < p.horizon; ++t) {
    std::vector<double> others;
    for (int j = 0; j < p.n; ++j)
      if (j != agent) others.push_back(all[j][t]);
    const double d =
        oracle_demand(own[t], others, p.qualities[agent], p.outside_quality, p.differentiation);
    total += static_cast<long>(std::floor(static_cast<double>(p.demand_scale) * d));
  }
  return total;
}

}  // namespace

TEST_CASE("best response to the unconstrained competitive price is a fixed point") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  const double br = best_response({1.471, 1.471}, 0, 100000, p, cfg);
  CHECK(br == doctest::Approx(1.471).epsilon(0.02 / 1.471));
}

TEST_CASE("best response with zero capacity returns the highest lattice price") {
  const MarketParams p = duopoly_params();
  SolverConfig cfg = fast_solver();
  cfg.price_search_lo = 1.0;
  cfg.price_search_hi = 4.0;
  const double br = best_response({1.8, 1.8}, 0, 0, p, cfg);
  CHECK(br == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("best response against 1.693 at capacity 440 sits near the boundary") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  const double br = best_response({1.693, 1.693}, 0, 440, p, cfg);
  CHECK(br >= 1.68);
  CHECK(br <= 1.70);

  double oracle_profit = 0.0;
  oracle_best_response(1.693, 440, p, 1.6, 1.8, 1e-5, &oracle_profit);
  const double d = oracle_demand(br, {1.693}, 2.0, 0.0, 0.25);
  const double br_profit = (br - 1.0) * std::floor(1000.0 * d);
  CHECK(br_profit == doctest::Approx(oracle_profit).epsilon(0.004));
}

TEST_CASE("best response rejects an empty search range") {
  const MarketParams p = duopoly_params();
  SolverConfig cfg = fast_solver();
  cfg.price_search_lo = 2.0;
  cfg.price_search_hi = 1.0;
  CHECK_THROWS_AS(best_response({1.8, 1.8}, 0, 440, p, cfg), Error);
}

TEST_CASE("solver rejects the discounted variant") {
  const MarketParams p = duopoly_params();
  SolverConfig cfg = fast_solver();
  cfg.discounting = true;
  CHECK_THROWS_AS(solve_nash(p, 440, cfg), Error);
  try {
    solve_nash(p, 440, cfg);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_implemented);
  }
}

TEST_CASE("competitive prices at the published capacities") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();

  const EquilibriumSolution incapacitated = solve_nash(p, 480, cfg);
  CHECK(incapacitated.prices[0] == doctest::Approx(1.471).epsilon(0.02 / 1.471));
  CHECK(incapacitated.prices[0] == incapacitated.prices[1]);

  const EquilibriumSolution constrained = solve_nash(p, 440, cfg);
  CHECK(constrained.prices[0] == doctest::Approx(1.693).epsilon(0.02 / 1.693));
  CHECK(constrained.prices[0] == constrained.prices[1]);

  const EquilibriumSolution tight = solve_nash(p, 365, cfg);
  CHECK(tight.prices[0] == doctest::Approx(1.925).epsilon(0.02 / 1.925));

  // feasibility of every returned solution
  for (const auto& sol : {incapacitated, constrained, tight}) {
    const long cap_total = sol.capacity_per_period * p.horizon;
    const auto all = constant_profile(sol.prices, p.horizon);
    for (int i = 0; i < p.n; ++i) CHECK(gnep_total_demand(all[i], all, i, p) <= cap_total);
  }
}

TEST_CASE("collusive price unconstrained and under a tight capacity") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();

  const EquilibriumSolution open = solve_monopoly(p, 1000, cfg);
  CHECK(open.prices[0] == doctest::Approx(1.925).epsilon(0.02 / 1.925));
  CHECK(open.prices[0] == open.prices[1]);
  // off-diagonal floor noise only
  const double episode_total = (open.per_period_profit[0] + open.per_period_profit[1]) * 20;
  CHECK(open.certification_gap <= 1e-4 * episode_total);

  const EquilibriumSolution tight = solve_monopoly(p, 300, cfg);
  CHECK(tight.prices[0] > 1.925);
}

TEST_CASE("a single agent with zero capacity earns nothing at any price") {
  MarketParams p = duopoly_params();
  p.n = 1;
  p.qualities = {2.0};
  p.costs = {1.0};
  p.capacities = {0};
  const SolverConfig cfg = fast_solver();
  const EquilibriumSolution sol = solve_monopoly(p, 0, cfg);
  CHECK(sol.per_period_profit[0] == 0.0);
  CHECK(sol.per_period_demand[0] == 0);
}

TEST_CASE("ordering of prices and profits between the binding capacities") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  const EquilibriumSolution nash = solve_nash(p, 400, cfg);
  const EquilibriumSolution mono = solve_monopoly(p, 400, cfg);
  CHECK(nash.prices[0] < mono.prices[0]);
  CHECK(nash.per_period_profit[0] < mono.per_period_profit[0]);
}

TEST_CASE("the collusive profile is not deviation-proof") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  EquilibriumSolution mono = solve_monopoly(p, 10000, cfg);
  const double gap = certify_nash(mono, p, cfg);
  CHECK(gap > 0.0);
  // undercutting a collusive opponent must pay by a visible margin
  CHECK(gap > 0.01 * mono.per_period_profit[0] * p.horizon);
}

TEST_CASE("the competitive solution certifies within one permille of episode profit") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  const EquilibriumSolution nash = solve_nash(p, 100000, cfg);
  const double episode_profit = nash.per_period_profit[0] * p.horizon;
  CHECK(nash.certification_gap <= 1e-3 * episode_profit);
}

TEST_CASE("certification gap is zero with nothing to sell") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  EquilibriumSolution degenerate;
  degenerate.kind = EquilibriumKind::competitive;
  degenerate.prices = {4.0, 4.0};
  degenerate.per_period_demand = {0, 0};
  degenerate.per_period_profit = {0.0, 0.0};
  degenerate.capacity_per_period = 0;
  CHECK(certify_nash(degenerate, p, cfg) == 0.0);
}

TEST_CASE("feasibilize returns feasible vectors untouched") {
  const MarketParams p = duopoly_with_grid(440);
  const auto all = constant_profile({1.925, 1.925}, p.horizon);  // demand 364 < 440
  const auto repaired = feasibilize(all[0], all, 0, p);
  CHECK(repaired == all[0]);
}

TEST_CASE("feasibilize is the identity when capacity cannot bind") {
  MarketParams p = duopoly_params();
  p.capacities = {p.demand_scale * p.horizon, p.demand_scale * p.horizon};
  const auto all = constant_profile({1.05, 1.2}, p.horizon);
  CHECK(feasibilize(all[0], all, 0, p) == all[0]);
}

TEST_CASE("sell-out repair: constraint holds exactly and revenue never drops") {
  MarketParams p = duopoly_params(200);  // tight capacity: 4000 for 20 periods
  Rng rng(101);
  int repaired_count = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> own(p.horizon), opp(p.horizon);
    for (int t = 0; t < p.horizon; ++t) {
      own[t] = rng.uniform(1.0, 2.4);
      opp[t] = rng.uniform(1.0, 2.4);
    }
    const std::vector<std::vector<double>> all{own, opp};
    if (gnep_total_demand(own, all, 0, p) <= p.capacities[0]) continue;
    ++repaired_count;
    const auto repaired = feasibilize(own, all, 0, p);
    CHECK(gnep_total_demand(repaired, all, 0, p) <= p.capacities[0]);
    const double before = smg_rollout_profit(own, all, 0, p, p.capacities[0]);
    const double after = smg_rollout_profit(repaired, all, 0, p, p.capacities[0]);
    CHECK(after >= before);
  }
  CHECK(repaired_count > 20);  // the capacity is tight enough to matter
}

TEST_CASE("capacity sweep rows are deterministic and ordered") {
  const MarketParams p = duopoly_params();
  const SolverConfig cfg = fast_solver();
  const auto rows = capacity_sweep(p, {365, 365, 440}, cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].nash_price == rows[1].nash_price);
  CHECK(rows[0].monopoly_price == rows[1].monopoly_price);
  CHECK(rows[0].nash_profit == rows[1].nash_profit);
  CHECK(rows[2].nash_price < rows[0].nash_price);
  CHECK_THROWS_AS(capacity_sweep(p, {0}, cfg), Error);
}
