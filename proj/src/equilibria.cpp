#include "equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "csv.hpp"
#include "rng.hpp"

namespace pricelab {

namespace {

// Demand machinery for the simultaneous-move game: all agents stay in the
// choice set regardless of inventory, which is the convention under which the
// episodic constraint sum_t floor(lambda*d) <= I is stated.
double opponent_weight(const std::vector<double>& joint_prices, int agent,
                       const MarketParams& p) {
  double w = std::exp(p.outside_quality / p.differentiation);
  for (int j = 0; j < p.n; ++j)
    if (j != agent)
      w += std::exp((p.qualities[j] - joint_prices[j]) / p.differentiation);
  return w;
}

double raw_demand(double own_price, int agent, double opp_weight, const MarketParams& p) {
  const double w = std::exp((p.qualities[agent] - own_price) / p.differentiation);
  return w / (w + opp_weight);
}

long floor_demand(double own_price, int agent, double opp_weight, const MarketParams& p) {
  return static_cast<long>(
      std::floor(static_cast<double>(p.demand_scale) * raw_demand(own_price, agent, opp_weight, p)));
}

struct Lattice {
  double lo = 0.0;
  double step = 0.0;
  int count = 0;
  double price(int k) const { return lo + step * static_cast<double>(k); }
};

Lattice make_lattice(const MarketParams& params, const SolverConfig& cfg) {
  double lo = cfg.price_search_lo;
  double hi = cfg.price_search_hi;
  if (std::isnan(lo)) lo = *std::min_element(params.costs.begin(), params.costs.end());
  if (std::isnan(hi)) {
    // High enough that floor demand reaches zero against any opponent profile.
    const double max_q = *std::max_element(params.qualities.begin(), params.qualities.end());
    hi = max_q - params.outside_quality +
         params.differentiation * (std::log(static_cast<double>(params.demand_scale)) + 2.0);
    hi = std::max(hi, lo + 1.0);
  }
  require(lo < hi, Errc::invalid_argument, "empty-search-range: price_search_lo >= hi");
  Lattice lat;
  lat.lo = lo;
  lat.step = cfg.resolution;
  lat.count = static_cast<int>(std::floor((hi - lo) / cfg.resolution)) + 1;
  return lat;
}

struct BestResponseResult {
  double price = 0.0;
  double profit = 0.0;  // per period
  bool feasible_found = false;
};

BestResponseResult scan_best_response(const Lattice& lat, const std::vector<double>& joint,
                                      int agent, long cap, const MarketParams& params) {
  const double opp_w = opponent_weight(joint, agent, params);
  const double cost = params.costs[agent];
  BestResponseResult best;
  best.profit = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < lat.count; ++k) {
    const double p = lat.price(k);
    const long d = floor_demand(p, agent, opp_w, params);
    if (d > cap) continue;
    const double profit = (p - cost) * static_cast<double>(d);
    if (profit > best.profit || (profit == best.profit && p > best.price)) {
      best.profit = profit;
      best.price = p;
      best.feasible_found = true;
    }
  }
  if (!best.feasible_found) {
    // Every lattice point over-demands the capacity; walk upward until the
    // floor demand first fits.
    double p = lat.price(lat.count - 1);
    for (int guard = 0; guard < 2000000; ++guard) {
      p += lat.step;
      const long d = floor_demand(p, agent, opp_w, params);
      if (d <= cap) {
        best.price = p;
        best.profit = (p - cost) * static_cast<double>(d);
        best.feasible_found = true;
        break;
      }
    }
    require(best.feasible_found, Errc::no_convergence, "best_response: no feasible price found");
  }
  return best;
}

void check_opponents_in_bounds(const std::vector<double>& joint, int agent, const Lattice& lat) {
  const double hi = lat.price(lat.count - 1);
  for (size_t j = 0; j < joint.size(); ++j) {
    if (static_cast<int>(j) == agent) continue;
    require(joint[j] >= lat.lo - 1e-12 && joint[j] <= hi + 1e-12, Errc::invalid_argument,
            "best_response: opponent price outside search bounds");
  }
}

// Roll the constant profile through the actual market (choice substitution and
// inventory caps included) and report the first-period demand and profit.
// Feasible constant profiles keep both constant across the episode.
void fill_rollout_stats(EquilibriumSolution& sol, const MarketParams& params) {
  MarketParams rollout = params;
  rollout.capacities.assign(params.n,
                            sol.capacity_per_period * static_cast<long>(params.horizon));
  std::vector<long> inv = rollout.capacities;
  std::vector<bool> active(params.n);
  sol.per_period_demand.assign(params.n, 0);
  sol.per_period_profit.assign(params.n, 0.0);
  for (int t = 1; t <= params.horizon; ++t) {
    for (int i = 0; i < params.n; ++i) active[i] = inv[i] > 0;
    const std::vector<double> d = mnl_demand(sol.prices, active, rollout);
    for (int i = 0; i < params.n; ++i) {
      const long want =
          static_cast<long>(std::floor(static_cast<double>(params.demand_scale) * d[i]));
      const long q = std::min(want, inv[i]);
      inv[i] -= q;
      if (t == 1) {
        sol.per_period_demand[i] = q;
        sol.per_period_profit[i] = (sol.prices[i] - params.costs[i]) * static_cast<double>(q);
      }
    }
  }
}

// Per-period profit of one agent at a constant joint profile, GNEP view.
double profile_profit(const std::vector<double>& joint, int agent, long cap,
                      const MarketParams& params, bool* feasible) {
  const double opp_w = opponent_weight(joint, agent, params);
  const long d = floor_demand(joint[agent], agent, opp_w, params);
  if (feasible) *feasible = d <= cap;
  return (joint[agent] - params.costs[agent]) * static_cast<double>(d);
}

}  // namespace

void SolverConfig::validate() const {
  require(resolution > 0.0, Errc::invalid_argument, "solver resolution must be > 0");
  require(max_gauss_seidel_iters >= 1, Errc::invalid_argument, "solver needs >= 1 iteration");
  require(restarts >= 1, Errc::invalid_argument, "solver needs >= 1 restart");
  require(!discounting, Errc::not_implemented,
          "discounted equilibria are not implemented; unset solver.discounting");
  if (!std::isnan(price_search_lo) && !std::isnan(price_search_hi))
    require(price_search_lo < price_search_hi, Errc::invalid_argument,
            "empty-search-range: price_search_lo >= price_search_hi");
}

double best_response(const std::vector<double>& joint_prices, int agent,
                     long capacity_per_period, const MarketParams& params,
                     const SolverConfig& cfg) {
  params.validate(false);
  cfg.validate();
  require(agent >= 0 && agent < params.n, Errc::invalid_argument, "best_response: bad agent");
  const Lattice lat = make_lattice(params, cfg);
  check_opponents_in_bounds(joint_prices, agent, lat);
  return scan_best_response(lat, joint_prices, agent, capacity_per_period, params).price;
}

EquilibriumSolution solve_nash(const MarketParams& params, long capacity_per_period,
                               const SolverConfig& cfg) {
  params.validate(false);
  cfg.validate();
  require(capacity_per_period >= 0, Errc::invalid_argument, "capacity must be >= 0");
  const Lattice lat = make_lattice(params, cfg);
  const double hi = lat.price(lat.count - 1);
  Rng rng(cfg.seed);

  // Gauss-Seidel best-response sweeps from several starting profiles.
  std::vector<std::vector<double>> finals;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> p(params.n);
    for (int i = 0; i < params.n; ++i)
      p[i] = r == 0 ? 0.5 * (lat.lo + hi)
                    : lat.price(static_cast<int>(rng.uniform_int(lat.count)));
    for (int it = 0; it < cfg.max_gauss_seidel_iters; ++it) {
      double max_change = 0.0;
      for (int i = 0; i < params.n; ++i) {
        const BestResponseResult br =
            scan_best_response(lat, p, i, capacity_per_period, params);
        max_change = std::max(max_change, std::abs(br.price - p[i]));
        p[i] = br.price;
      }
      if (max_change < cfg.convergence_tol) break;
    }
    finals.push_back(p);
  }

  EquilibriumSolution sol;
  sol.kind = EquilibriumKind::competitive;
  sol.capacity_per_period = capacity_per_period;

  if (params.identical_agents()) {
    // The floor demand produces profit plateaus, so the sweep may settle into
    // a small cycle of asymmetric plateau tops. Pick the symmetric lattice
    // profile with the smallest one-shot deviation gain near the visited
    // region; this is canonical across capacities that never bind.
    std::set<int> candidates;
    const double window = std::max(0.02, 25.0 * lat.step);
    for (const auto& p : finals) {
      double center = 0.0;
      for (double v : p) center += v;
      center /= static_cast<double>(params.n);
      const int k0 = std::max(0, static_cast<int>(std::floor((center - window - lat.lo) / lat.step)));
      const int k1 = std::min(lat.count - 1,
                              static_cast<int>(std::ceil((center + window - lat.lo) / lat.step)));
      for (int k = k0; k <= k1; ++k) candidates.insert(k);
    }
    double best_gap = std::numeric_limits<double>::infinity();
    double best_price = 0.0;
    bool found = false;
    for (int k : candidates) {
      std::vector<double> joint(params.n, lat.price(k));
      bool feasible = false;
      const double here = profile_profit(joint, 0, capacity_per_period, params, &feasible);
      if (!feasible) continue;
      const BestResponseResult br = scan_best_response(lat, joint, 0, capacity_per_period, params);
      const double gap = br.profit - here;
      if (!found || gap < best_gap - 1e-12 ||
          (std::abs(gap - best_gap) <= 1e-12 && lat.price(k) > best_price)) {
        best_gap = gap;
        best_price = lat.price(k);
        found = true;
      }
    }
    require(found, Errc::no_convergence, "solve_nash: no feasible symmetric profile");
    sol.prices.assign(params.n, best_price);
  } else {
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& p : finals) {
      double gap = 0.0;
      bool all_feasible = true;
      for (int i = 0; i < params.n; ++i) {
        bool feasible = false;
        const double here = profile_profit(p, i, capacity_per_period, params, &feasible);
        all_feasible = all_feasible && feasible;
        const BestResponseResult br = scan_best_response(lat, p, i, capacity_per_period, params);
        gap = std::max(gap, br.profit - here);
      }
      if (all_feasible && gap < best_gap) {
        best_gap = gap;
        sol.prices = p;
      }
    }
    require(!sol.prices.empty(), Errc::no_convergence, "solve_nash: no feasible profile");
  }

  fill_rollout_stats(sol, params);
  sol.certification_gap = certify_nash(sol, params, cfg);

  double max_profit = 0.0;
  for (int i = 0; i < params.n; ++i)
    max_profit = std::max(max_profit, sol.per_period_profit[i] * params.horizon);
  require(sol.certification_gap <= cfg.epsilon_tolerance * max_profit + 1e-9,
          Errc::no_convergence, "solve_nash: certified deviation gap exceeds tolerance");
  return sol;
}

EquilibriumSolution solve_monopoly(const MarketParams& params, long capacity_per_period,
                                   const SolverConfig& cfg) {
  params.validate(false);
  cfg.validate();
  const Lattice lat = make_lattice(params, cfg);

  auto total_profit = [&](const std::vector<double>& joint, bool* feasible) {
    double total = 0.0;
    bool ok = true;
    for (int i = 0; i < params.n; ++i) {
      bool f = false;
      total += profile_profit(joint, i, capacity_per_period, params, &f);
      ok = ok && f;
    }
    if (feasible) *feasible = ok;
    return total;
  };

  EquilibriumSolution sol;
  sol.kind = EquilibriumKind::collusive;
  sol.capacity_per_period = capacity_per_period;

  if (params.identical_agents()) {
    // Diagonal scan; the joint optimum for identical agents is symmetric up to
    // floor noise, which the neighborhood check below quantifies.
    double best_total = -std::numeric_limits<double>::infinity();
    int best_k = -1;
    for (int k = 0; k < lat.count; ++k) {
      std::vector<double> joint(params.n, lat.price(k));
      bool feasible = false;
      const double total = total_profit(joint, &feasible);
      if (!feasible) continue;
      if (total >= best_total) {  // ascending scan, so ties land on the higher price
        best_total = total;
        best_k = k;
      }
    }
    require(best_k >= 0, Errc::no_convergence, "solve_monopoly: no feasible diagonal point");
    sol.prices.assign(params.n, lat.price(best_k));

    if (params.n == 2) {
      // Local off-diagonal neighborhood; any improvement is reported as the
      // certification gap rather than breaking the symmetric profile.
      double best_off = best_total;
      const int w = 60;
      for (int a = std::max(0, best_k - w); a <= std::min(lat.count - 1, best_k + w); ++a) {
        for (int b = std::max(0, best_k - w); b <= std::min(lat.count - 1, best_k + w); ++b) {
          std::vector<double> joint{lat.price(a), lat.price(b)};
          bool feasible = false;
          const double total = total_profit(joint, &feasible);
          if (feasible && total > best_off) best_off = total;
        }
      }
      sol.certification_gap = (best_off - best_total) * static_cast<double>(params.horizon);
    }
  } else {
    // Coordinate ascent on total profit from several starts.
    Rng rng(cfg.seed + 1);
    double best_total = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
      std::vector<double> joint(params.n);
      for (int i = 0; i < params.n; ++i)
        joint[i] = lat.price(static_cast<int>(rng.uniform_int(lat.count)));
      for (int it = 0; it < cfg.max_gauss_seidel_iters; ++it) {
        double max_change = 0.0;
        for (int i = 0; i < params.n; ++i) {
          double best_here = -std::numeric_limits<double>::infinity();
          double best_price = joint[i];
          for (int k = 0; k < lat.count; ++k) {
            std::vector<double> trial = joint;
            trial[i] = lat.price(k);
            bool feasible = false;
            const double total = total_profit(trial, &feasible);
            if (!feasible) continue;
            if (total > best_here || (total == best_here && trial[i] > best_price)) {
              best_here = total;
              best_price = trial[i];
            }
          }
          max_change = std::max(max_change, std::abs(best_price - joint[i]));
          joint[i] = best_price;
        }
        if (max_change < cfg.convergence_tol) break;
      }
      bool feasible = false;
      const double total = total_profit(joint, &feasible);
      if (feasible && total > best_total) {
        best_total = total;
        sol.prices = joint;
      }
    }
    require(!sol.prices.empty(), Errc::no_convergence, "solve_monopoly: no feasible profile");
  }

  fill_rollout_stats(sol, params);
  return sol;
}

double smg_rollout_profit(const std::vector<double>& own_prices,
                          const std::vector<std::vector<double>>& all_prices, int agent,
                          const MarketParams& params, long capacity_total) {
  require(static_cast<int>(own_prices.size()) == params.horizon, Errc::shape_mismatch,
          "smg_rollout_profit: price vector must cover the horizon");
  long inventory = capacity_total;
  double total = 0.0;
  std::vector<double> joint(params.n);
  for (int t = 0; t < params.horizon; ++t) {
    for (int j = 0; j < params.n; ++j)
      joint[j] = j == agent ? own_prices[t] : all_prices[j].at(t);
    const double opp_w = opponent_weight(joint, agent, params);
    const long d = floor_demand(own_prices[t], agent, opp_w, params);
    const long q = std::min(d, inventory);
    total += (own_prices[t] - params.costs[agent]) * static_cast<double>(q);
    inventory -= q;
  }
  return total;
}

namespace {

// Largest price whose floor demand still equals `target` (> 0), by bisection
// on the continuous scaled demand. The returned price satisfies the equality
// exactly.
double supremum_price_with_demand(long target, int agent, double opp_weight,
                                  const MarketParams& params, double start) {
  const double scale = static_cast<double>(params.demand_scale);
  double lo = start;
  require(scale * raw_demand(lo, agent, opp_weight, params) >= static_cast<double>(target),
          Errc::invalid_argument, "feasibilize: demand below target at sell-out price");
  double hi = lo;
  while (scale * raw_demand(hi, agent, opp_weight, params) >= static_cast<double>(target))
    hi += params.differentiation;
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (scale * raw_demand(mid, agent, opp_weight, params) >= static_cast<double>(target))
      lo = mid;
    else
      hi = mid;
  }
  require(floor_demand(lo, agent, opp_weight, params) == target, Errc::no_convergence,
          "feasibilize: sell-out price bisection did not settle on the target demand");
  return lo;
}

double price_with_zero_demand(int agent, double opp_weight, const MarketParams& params,
                              double start) {
  double p = start;
  while (floor_demand(p, agent, opp_weight, params) > 0) p += params.differentiation;
  return p;
}

}  // namespace

std::vector<double> feasibilize(const std::vector<double>& price_vector,
                                const std::vector<std::vector<double>>& opponent_prices,
                                int agent, const MarketParams& params) {
  require(static_cast<int>(price_vector.size()) == params.horizon, Errc::shape_mismatch,
          "feasibilize: price vector must cover the horizon");
  for (int j = 0; j < params.n; ++j)
    if (j != agent)
      require(static_cast<int>(opponent_prices.at(j).size()) == params.horizon,
              Errc::shape_mismatch, "feasibilize: opponent vectors must cover the horizon");
  const long capacity = params.capacities.at(agent);

  std::vector<double> opp_w(params.horizon);
  std::vector<long> raw(params.horizon);
  std::vector<double> joint(params.n);
  long total_raw = 0;
  for (int t = 0; t < params.horizon; ++t) {
    for (int j = 0; j < params.n; ++j)
      joint[j] = j == agent ? price_vector[t] : opponent_prices[j][t];
    opp_w[t] = opponent_weight(joint, agent, params);
    raw[t] = floor_demand(price_vector[t], agent, opp_w[t], params);
    total_raw += raw[t];
  }
  if (total_raw <= capacity) return price_vector;

  // Sell-out time under capped sales: last period entered with stock.
  long inventory = capacity;
  int sell_out = params.horizon - 1;
  for (int t = 0; t < params.horizon; ++t) {
    const long q = std::min(raw[t], inventory);
    inventory -= q;
    if (inventory == 0) {
      sell_out = t;
      break;
    }
  }
  long stock_at_sell_out = capacity;
  for (int t = 0; t < sell_out; ++t) stock_at_sell_out -= raw[t];

  std::vector<double> repaired = price_vector;
  int first_empty = sell_out;
  if (stock_at_sell_out > 0) {
    repaired[sell_out] = supremum_price_with_demand(stock_at_sell_out, agent, opp_w[sell_out],
                                                    params, price_vector[sell_out]);
    first_empty = sell_out + 1;
  }
  for (int t = first_empty; t < params.horizon; ++t)
    repaired[t] = price_with_zero_demand(agent, opp_w[t], params,
                                         std::max(price_vector[t], repaired[sell_out]));
  return repaired;
}

double certify_nash(const EquilibriumSolution& candidate, const MarketParams& params,
                    const SolverConfig& cfg) {
  params.validate(false);
  cfg.validate();
  const Lattice lat = make_lattice(params, cfg);
  const long cap_total =
      candidate.capacity_per_period * static_cast<long>(params.horizon);
  MarketParams gnep = params;
  gnep.capacities.assign(params.n, cap_total);

  std::vector<std::vector<double>> fixed(params.n);
  for (int j = 0; j < params.n; ++j)
    fixed[j].assign(params.horizon, candidate.prices.at(j));

  double worst = 0.0;
  for (int i = 0; i < params.n; ++i) {
    const double baseline = smg_rollout_profit(fixed[i], fixed, i, params, cap_total);
    const double opp_w = opponent_weight(candidate.prices, i, params);
    const long base_demand = floor_demand(candidate.prices[i], i, opp_w, params);

    // (a) constant deviations
    for (int k = 0; k < lat.count; ++k) {
      std::vector<double> dev(params.horizon, lat.price(k));
      const long d = floor_demand(lat.price(k), i, opp_w, params);
      double profit;
      if (static_cast<long>(params.horizon) * d <= cap_total) {
        profit = static_cast<double>(params.horizon) * (lat.price(k) - params.costs[i]) *
                 static_cast<double>(d);
      } else {
        profit = smg_rollout_profit(feasibilize(dev, fixed, i, gnep), fixed, i, params, cap_total);
      }
      worst = std::max(worst, profit - baseline);
    }

    // (b) single-period deviations. Feasible ones have a t-independent gain at
    // a constant baseline; infeasible ones are repaired period by period.
    const long rest = static_cast<long>(params.horizon - 1) * base_demand;
    for (int k = 0; k < lat.count; ++k) {
      const double q = lat.price(k);
      const long d = floor_demand(q, i, opp_w, params);
      if (rest + d <= cap_total) {
        const double gain = (q - params.costs[i]) * static_cast<double>(d) -
                            (candidate.prices[i] - params.costs[i]) * static_cast<double>(base_demand);
        worst = std::max(worst, gain);
      } else {
        for (int t = 0; t < params.horizon; ++t) {
          std::vector<double> dev = fixed[i];
          dev[t] = q;
          const double profit =
              smg_rollout_profit(feasibilize(dev, fixed, i, gnep), fixed, i, params, cap_total);
          worst = std::max(worst, profit - baseline);
        }
      }
    }
  }
  return std::max(0.0, worst);
}

std::vector<CapacityRow> capacity_sweep(const MarketParams& params,
                                        const std::vector<long>& capacities,
                                        const SolverConfig& cfg) {
  for (long c : capacities)
    require(c > 0, Errc::invalid_argument, "capacity_sweep: capacities must be positive");
  std::vector<CapacityRow> rows;
  rows.reserve(capacities.size());
  for (long cap : capacities) {
    const EquilibriumSolution nash = solve_nash(params, cap, cfg);
    const EquilibriumSolution mono = solve_monopoly(params, cap, cfg);
    CapacityRow row;
    row.capacity = cap;
    row.nash_price = nash.prices[0];
    row.monopoly_price = mono.prices[0];
    row.nash_demand = nash.per_period_demand[0];
    row.monopoly_demand = mono.per_period_demand[0];
    row.nash_profit = nash.per_period_profit[0];
    row.monopoly_profit = mono.per_period_profit[0];
    rows.push_back(row);
  }
  return rows;
}

void write_capacity_sweep_csv(const std::string& path, const std::vector<CapacityRow>& rows,
                              const std::string& config_hash) {
  CsvWriter csv(path);
  csv.comment("config_hash", config_hash);
  csv.header({"capacity", "nash_price", "monopoly_price", "nash_demand", "monopoly_demand",
              "nash_profit", "monopoly_profit"});
  for (const CapacityRow& r : rows)
    csv.row({std::to_string(r.capacity), fmt_double(r.nash_price), fmt_double(r.monopoly_price),
             std::to_string(r.nash_demand), std::to_string(r.monopoly_demand),
             fmt_double(r.nash_profit), fmt_double(r.monopoly_profit)});
}

}  // namespace pricelab
