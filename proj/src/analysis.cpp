#include "analysis.hpp"

#include <algorithm>
#include <cmath>

#include "csv.hpp"

namespace pricelab {

namespace {

// One-step profit maximizer against the opponents' previous prices; the
// competitive fallback applies when no action earns anything (e.g. sold out).
int default_deviation_action(const MarketState& state, int agent,
                             const PreparedExperiment& prep) {
  const MarketParams& params = prep.params;
  std::vector<double> prices(params.n);
  std::vector<bool> active(params.n);
  for (int j = 0; j < params.n; ++j) {
    prices[j] = params.grid.prices[state.last_prices[j]];
    active[j] = state.inventories[j] > 0;
  }
  int best = -1;
  double best_profit = 0.0;
  for (int a = 0; a < params.grid.size(); ++a) {
    prices[agent] = params.grid.prices[a];
    const std::vector<double> d = mnl_demand(prices, active, params);
    const long q = std::min(
        static_cast<long>(std::floor(static_cast<double>(params.demand_scale) * d[agent])),
        state.inventories[agent]);
    const double profit = (prices[agent] - params.costs[agent]) * static_cast<double>(q);
    if (profit > best_profit) {
      best_profit = profit;
      best = a;
    }
  }
  return best >= 0 ? best : params.grid.nash_index;
}

Trajectory play_episode(const PreparedExperiment& prep,
                        const std::vector<const GreedyPolicy*>& policies, std::uint64_t seed,
                        const DeviationSpec* deviation, int* applied_action) {
  const MarketParams& params = prep.params;
  Rng env_rng = derive_stream(seed, 0);
  MarketState state = reset(params, env_rng);

  Trajectory traj;
  traj.episode_profit.assign(params.n, 0.0);
  std::vector<int> actions(params.n);
  for (int t = 1; t <= params.horizon; ++t) {
    for (int i = 0; i < params.n; ++i)
      actions[i] = policies[i]->action(observe(state, i, prep.config.obs, params));
    if (deviation && t == deviation->timestep) {
      const int forced = deviation->action >= 0
                             ? deviation->action
                             : default_deviation_action(state, deviation->agent, prep);
      actions[deviation->agent] = forced;
      if (applied_action) *applied_action = forced;
    }
    const StepOutcome out = step(state, actions, params);
    std::vector<double> prices(params.n);
    for (int i = 0; i < params.n; ++i) {
      prices[i] = params.grid.prices[actions[i]];
      traj.episode_profit[i] += out.rewards[i];
    }
    traj.actions.push_back(actions);
    traj.prices.push_back(std::move(prices));
    traj.demands.push_back(out.demands);
    traj.quantities.push_back(out.quantities);
    traj.inventories.push_back(out.next_state.inventories);
    traj.rewards.push_back(out.rewards);
    state = out.next_state;
  }
  return traj;
}

}  // namespace

DeviationReport forced_deviation(const PreparedExperiment& prep,
                                 const std::vector<const GreedyPolicy*>& policies,
                                 const DeviationSpec& spec, std::uint64_t seed) {
  require(spec.agent >= 0 && spec.agent < prep.params.n, Errc::invalid_argument,
          "forced_deviation: bad agent index");
  require(spec.timestep >= 1 && spec.timestep <= prep.params.horizon, Errc::invalid_argument,
          "forced_deviation: timestep outside the episode");
  require(spec.action < prep.params.grid.size(), Errc::invalid_argument,
          "forced_deviation: action index out of range");

  DeviationReport report;
  report.baseline = play_episode(prep, policies, seed, nullptr, nullptr);
  report.deviated = play_episode(prep, policies, seed, &spec, &report.applied_action);

  const int n = prep.params.n;
  report.profit_ratio.resize(n);
  double base_total = 0.0, dev_total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double base = report.baseline.episode_profit[i];
    const double dev = report.deviated.episode_profit[i];
    report.profit_ratio[i] = base != 0.0 ? dev / base : (dev == 0.0 ? 1.0 : 0.0);
    base_total += base;
    dev_total += dev;
  }
  report.overall_ratio = base_total != 0.0 ? dev_total / base_total : 1.0;
  return report;
}

std::vector<SurfaceRow> response_surface(const PreparedExperiment& prep,
                                         const GreedyPolicy& policy, const SurfaceSpec& spec) {
  const MarketParams& params = prep.params;
  require(spec.agent >= 0 && spec.agent < params.n, Errc::invalid_argument,
          "response_surface: bad agent index");
  std::vector<int> timesteps = spec.timesteps;
  if (timesteps.empty()) {
    const int t_max = params.horizon;
    timesteps = {1, std::max(1, (t_max + 2) / 3), std::max(1, 2 * (t_max + 1) / 3), t_max};
    timesteps.erase(std::unique(timesteps.begin(), timesteps.end()), timesteps.end());
  }
  for (int t : timesteps)
    require(t >= 1 && t <= params.horizon, Errc::invalid_argument,
            "response_surface: timestep outside the episode");

  std::vector<SurfaceRow> rows;
  const int k = params.grid.size();
  rows.reserve(timesteps.size() * static_cast<size_t>(k) * k);
  for (int t : timesteps) {
    const double frac =
        1.0 - static_cast<double>(t) / static_cast<double>(params.horizon);
    MarketState state;
    state.t = t;
    state.inventories.resize(params.n);
    state.last_prices.assign(params.n, 0);
    for (int i = 0; i < params.n; ++i)
      state.inventories[i] =
          static_cast<long>(std::llround(frac * static_cast<double>(params.capacities[i])));
    for (int own = 0; own < k; ++own)
      for (int opp = 0; opp < k; ++opp) {
        for (int j = 0; j < params.n; ++j) state.last_prices[j] = opp;
        state.last_prices[spec.agent] = own;
        SurfaceRow row;
        row.t = t;
        row.inventory_frac = frac;
        row.own_prev = own;
        row.opp_prev = opp;
        row.greedy_action = policy.action(observe(state, spec.agent, prep.config.obs, params));
        rows.push_back(row);
      }
  }
  return rows;
}

std::vector<LearningCurvePoint> export_learning_curves(const std::vector<RunLog>& logs) {
  require(!logs.empty(), Errc::invalid_argument, "export_learning_curves: no logs");
  const size_t rows = logs[0].rows.size();
  for (const RunLog& log : logs) {
    require(log.rows.size() == rows, Errc::invalid_argument,
            "mismatched-grids: logs record different episode grids");
    for (size_t r = 0; r < rows; ++r)
      require(log.rows[r].episode == logs[0].rows[r].episode, Errc::invalid_argument,
              "mismatched-grids: logs record different episode grids");
  }

  const size_t n_agents = logs[0].rows.empty() ? 0 : logs[0].rows[0].mean_action.size();
  const double runs = static_cast<double>(logs.size());
  std::vector<LearningCurvePoint> points;
  points.reserve(rows);
  for (size_t r = 0; r < rows; ++r) {
    LearningCurvePoint pt;
    pt.episode = logs[0].rows[r].episode;
    pt.mean_action_mean.assign(n_agents, 0.0);
    pt.mean_action_std.assign(n_agents, 0.0);
    for (const RunLog& log : logs) {
      for (size_t i = 0; i < n_agents; ++i)
        pt.mean_action_mean[i] += log.rows[r].mean_action[i] / runs;
      pt.collusion_mean += log.rows[r].collusion_index / runs;
    }
    for (const RunLog& log : logs) {
      for (size_t i = 0; i < n_agents; ++i) {
        const double d = log.rows[r].mean_action[i] - pt.mean_action_mean[i];
        pt.mean_action_std[i] += d * d / runs;
      }
      const double d = log.rows[r].collusion_index - pt.collusion_mean;
      pt.collusion_std += d * d / runs;
    }
    for (size_t i = 0; i < n_agents; ++i)
      pt.mean_action_std[i] = std::sqrt(pt.mean_action_std[i]);
    pt.collusion_std = std::sqrt(pt.collusion_std);
    points.push_back(std::move(pt));
  }
  return points;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_hash, std::uint64_t seed) {
  CsvWriter csv(path);
  csv.comment("config_hash", config_hash);
  csv.comment("seed", std::to_string(seed));
  csv.header({"t", "agent", "action", "price", "demand", "quantity", "inventory", "reward"});
  for (size_t t = 0; t < traj.actions.size(); ++t)
    for (size_t i = 0; i < traj.actions[t].size(); ++i)
      csv.row({std::to_string(t + 1), std::to_string(i), std::to_string(traj.actions[t][i]),
               fmt_double(traj.prices[t][i]), fmt_double(traj.demands[t][i]),
               std::to_string(traj.quantities[t][i]), std::to_string(traj.inventories[t][i]),
               fmt_double(traj.rewards[t][i])});
}

void write_deviation_csv(const std::string& path, const DeviationReport& report,
                         const DeviationSpec& spec, const std::string& config_hash,
                         std::uint64_t seed) {
  CsvWriter csv(path);
  csv.comment("config_hash", config_hash);
  csv.comment("seed", std::to_string(seed));
  csv.comment("deviating_agent", std::to_string(spec.agent));
  csv.comment("deviation_timestep", std::to_string(spec.timestep));
  csv.comment("applied_action", std::to_string(report.applied_action));
  for (size_t i = 0; i < report.profit_ratio.size(); ++i)
    csv.comment("profit_ratio_agent" + std::to_string(i), fmt_double(report.profit_ratio[i]));
  csv.comment("profit_ratio_overall", fmt_double(report.overall_ratio));
  csv.header({"t", "agent", "baseline_action", "baseline_price", "baseline_reward",
              "deviated_action", "deviated_price", "deviated_reward"});
  for (size_t t = 0; t < report.baseline.actions.size(); ++t)
    for (size_t i = 0; i < report.baseline.actions[t].size(); ++i)
      csv.row({std::to_string(t + 1), std::to_string(i),
               std::to_string(report.baseline.actions[t][i]),
               fmt_double(report.baseline.prices[t][i]),
               fmt_double(report.baseline.rewards[t][i]),
               std::to_string(report.deviated.actions[t][i]),
               fmt_double(report.deviated.prices[t][i]),
               fmt_double(report.deviated.rewards[t][i])});
}

void write_surface_csv(const std::string& path, const std::vector<SurfaceRow>& rows,
                       const std::string& config_hash) {
  CsvWriter csv(path);
  csv.comment("config_hash", config_hash);
  csv.header({"t", "inventory_frac", "own_prev_idx", "opp_prev_idx", "greedy_action"});
  for (const SurfaceRow& r : rows)
    csv.row({std::to_string(r.t), fmt_double(r.inventory_frac), std::to_string(r.own_prev),
             std::to_string(r.opp_prev), std::to_string(r.greedy_action)});
}

void write_learning_curves_csv(const std::string& path,
                               const std::vector<LearningCurvePoint>& points,
                               const std::string& config_hash) {
  CsvWriter csv(path);
  csv.comment("config_hash", config_hash);
  csv.header({"episode", "agent", "mean_action_mean", "mean_action_std", "collusion_index_mean",
              "collusion_index_std"});
  for (const LearningCurvePoint& pt : points)
    for (size_t i = 0; i < pt.mean_action_mean.size(); ++i)
      csv.row({std::to_string(pt.episode), std::to_string(i),
               fmt_double(pt.mean_action_mean[i]), fmt_double(pt.mean_action_std[i]),
               fmt_double(pt.collusion_mean), fmt_double(pt.collusion_std)});
}

}  // namespace pricelab
