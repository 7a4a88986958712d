#include "harness.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "csv.hpp"

namespace pricelab {

namespace {

// Stream ids for the per-run RNG split: environment resets, each agent's
// action sampling, each agent's buffer/minibatch draws, network init.
constexpr std::uint64_t kStreamEnv = 0;
std::uint64_t stream_action(int agent) { return 10 + static_cast<std::uint64_t>(agent); }
std::uint64_t stream_train(int agent) { return 100 + static_cast<std::uint64_t>(agent); }
constexpr std::uint64_t kStreamNetInit = 200;

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

struct EpisodeStats {
  std::vector<double> mean_action;
  std::vector<double> mean_price;
  std::vector<double> profit;
  double collusion = 0.0;
  std::vector<std::vector<double>> prices;  // [t][agent]
};

class EpisodeRecorder {
 public:
  EpisodeRecorder(const PreparedExperiment& prep) : prep_(prep) {}

  void begin() {
    const int n = prep_.params.n;
    action_sum_.assign(n, 0.0);
    price_sum_.assign(n, 0.0);
    rewards_.assign(n, {});
    prices_.clear();
  }

  void record(const std::vector<int>& actions, const StepOutcome& out) {
    const int n = prep_.params.n;
    std::vector<double> prices_t(n);
    for (int i = 0; i < n; ++i) {
      prices_t[i] = prep_.params.grid.prices[actions[i]];
      action_sum_[i] += actions[i];
      price_sum_[i] += prices_t[i];
      rewards_[i].push_back(out.rewards[i]);
    }
    prices_.push_back(std::move(prices_t));
  }

  EpisodeStats finish() const {
    const int n = prep_.params.n;
    const double steps = static_cast<double>(prices_.size());
    EpisodeStats s;
    s.mean_action.resize(n);
    s.mean_price.resize(n);
    s.profit.resize(n);
    ProfitGainInputs inputs;
    inputs.realized = rewards_;
    inputs.nash.resize(n);
    inputs.monopoly.resize(n);
    for (int i = 0; i < n; ++i) {
      s.mean_action[i] = action_sum_[i] / steps;
      s.mean_price[i] = price_sum_[i] / steps;
      s.profit[i] = std::accumulate(rewards_[i].begin(), rewards_[i].end(), 0.0);
      inputs.nash[i].assign(rewards_[i].size(), prep_.nash.per_period_profit[i]);
      inputs.monopoly[i].assign(rewards_[i].size(), prep_.monopoly.per_period_profit[i]);
    }
    s.collusion = make_collusion_report(inputs).index;
    s.prices = prices_;
    return s;
  }

 private:
  const PreparedExperiment& prep_;
  std::vector<double> action_sum_;
  std::vector<double> price_sum_;
  std::vector<std::vector<double>> rewards_;  // [agent][t]
  std::vector<std::vector<double>> prices_;   // [t][agent]
};

}  // namespace

int TrainedAgent::action(const std::vector<double>& obs) const {
  return greedy_argmax(primary.forward(obs));
}

void TrainedAgent::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io, "cannot write checkpoint: " + path);
  out << "pricelab-agent v1\n";
  out << "algorithm " << algorithm << "\n";
  out << "config_hash " << config_hash << "\n";
  out << "episodes " << episodes << "\n";
  out << "nets " << (value.has_value() ? 2 : 1) << "\n";
  save_network(out, primary);
  if (value) save_network(out, *value);
  require(static_cast<bool>(out), Errc::io, "checkpoint write failed: " + path);
}

TrainedAgent TrainedAgent::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot read checkpoint: " + path);
  std::string tag, version, word;
  in >> tag >> version;
  require(tag == "pricelab-agent" && version == "v1", Errc::io,
          "unrecognized agent checkpoint header: " + path);
  TrainedAgent agent;
  int nets = 0;
  in >> word >> agent.algorithm;
  require(word == "algorithm", Errc::io, "bad checkpoint field order");
  in >> word >> agent.config_hash;
  require(word == "config_hash", Errc::io, "bad checkpoint field order");
  in >> word >> agent.episodes;
  require(word == "episodes", Errc::io, "bad checkpoint field order");
  in >> word >> nets;
  require(word == "nets" && (nets == 1 || nets == 2), Errc::io, "bad checkpoint net count");
  agent.primary = load_network(in);
  if (nets == 2) agent.value = load_network(in);
  return agent;
}

double PreparedExperiment::nash_price() const { return mean_of(nash.prices); }
double PreparedExperiment::monopoly_price() const { return mean_of(monopoly.prices); }

PreparedExperiment prepare_experiment(const Config& cfg) {
  cfg.validate();
  PreparedExperiment prep;
  prep.config = cfg;
  prep.hash = config_hash_hex(cfg);

  MarketParams params = market_params_from(cfg.market);
  params.validate(false);
  prep.nash = solve_nash(params, cfg.market.capacity_per_period, cfg.solver);
  prep.monopoly = solve_monopoly(params, cfg.market.capacity_per_period, cfg.solver);

  double anchor_lo, anchor_hi;
  if (cfg.market.price_grid_mode == PriceGridMode::unconstrained) {
    // Grid spans the unconstrained equilibria; the environment itself stays
    // capacity-constrained.
    const EquilibriumSolution nash_u = solve_nash(params, params.demand_scale, cfg.solver);
    const EquilibriumSolution mono_u = solve_monopoly(params, params.demand_scale, cfg.solver);
    anchor_lo = mean_of(nash_u.prices);
    anchor_hi = mean_of(mono_u.prices);
  } else {
    anchor_lo = mean_of(prep.nash.prices);
    anchor_hi = mean_of(prep.monopoly.prices);
  }
  require(anchor_lo < anchor_hi, Errc::config,
          "benchmark prices coincide at this capacity; no price interval to span");
  params.grid = build_price_grid(anchor_lo, anchor_hi, cfg.market.xi, cfg.market.grid_size);
  params.validate(true);
  prep.params = params;

  const auto bounds = reward_bounds(params);
  require(bounds.second > 0.0, Errc::degenerate_bounds,
          "degenerate-bounds: maximum one-step reward is zero");
  prep.reward_max = bounds.second;
  return prep;
}

Trajectory evaluate(const PreparedExperiment& prep,
                    const std::vector<const GreedyPolicy*>& policies, std::uint64_t seed) {
  const MarketParams& params = prep.params;
  require(static_cast<int>(policies.size()) == params.n, Errc::invalid_argument,
          "evaluate: one policy per agent required");
  Rng env_rng = derive_stream(seed, kStreamEnv);
  MarketState state = reset(params, env_rng);

  Trajectory traj;
  traj.episode_profit.assign(params.n, 0.0);
  std::vector<int> actions(params.n);
  for (int t = 1; t <= params.horizon; ++t) {
    for (int i = 0; i < params.n; ++i)
      actions[i] = policies[i]->action(observe(state, i, prep.config.obs, params));
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

CollusionReport trajectory_collusion(const Trajectory& traj, const PreparedExperiment& prep) {
  const int n = prep.params.n;
  ProfitGainInputs inputs;
  inputs.realized.assign(n, {});
  inputs.nash.assign(n, {});
  inputs.monopoly.assign(n, {});
  for (const auto& step_rewards : traj.rewards)
    for (int i = 0; i < n; ++i) {
      inputs.realized[i].push_back(step_rewards[i]);
      inputs.nash[i].push_back(prep.nash.per_period_profit[i]);
      inputs.monopoly[i].push_back(prep.monopoly.per_period_profit[i]);
    }
  return make_collusion_report(inputs);
}

long effective_log_interval(const Config& cfg) {
  if (cfg.run.log_interval > 0) return cfg.run.log_interval;
  return cfg.run.algorithm == Algorithm::dqn ? 50 : 1;
}

namespace {

struct MetricsCollector {
  explicit MetricsCollector(const PreparedExperiment& prep, long total_episodes)
      : prep_(prep),
        total_(total_episodes),
        window_start_(final_window_start(total_episodes)) {}

  // For PPO the window history holds per-env episodes; start one update early
  // so the final-10% episode window is always covered.
  void note_episode(long index, const EpisodeStats& stats, bool in_window) {
    if (in_window) {
      collusion_sum_ += stats.collusion;
      ++collusion_count_;
    }
    window_prices_.push_back(stats.prices);
    (void)index;
  }

  void finalize(RunLog& log, long history_total) {
    log.collusion_index_last10 = collusion_count_ ? collusion_sum_ / collusion_count_ : 0.0;
    const ConvergenceResult conv = convergence_metric(
        window_prices_, history_total, prep_.nash_price(), prep_.monopoly_price());
    log.convergence_metric = conv.value;
    log.converged = conv.converged;
  }

  long window_start() const { return window_start_; }

 private:
  const PreparedExperiment& prep_;
  long total_;
  long window_start_;
  double collusion_sum_ = 0.0;
  long collusion_count_ = 0;
  std::vector<std::vector<std::vector<double>>> window_prices_;
};

TrainResult dqn_training(const PreparedExperiment& prep, std::uint64_t seed) {
  const Config& cfg = prep.config;
  const MarketParams& params = prep.params;
  const DqnConfig& dc = cfg.dqn;
  const int n = params.n;
  const int obs_dim = observation_size(params, cfg.obs);
  const long total = dc.training_episodes;
  const long log_every = effective_log_interval(cfg);

  Rng env_rng = derive_stream(seed, kStreamEnv);
  Rng net_seeder = derive_stream(seed, kStreamNetInit);
  std::vector<DqnAgent> agents;
  std::vector<Rng> act_rng, train_rng;
  for (int i = 0; i < n; ++i) {
    agents.push_back(DqnAgent::init(obs_dim, params.grid.size(), dc, net_seeder.next_u64()));
    act_rng.push_back(derive_stream(seed, stream_action(i)));
    train_rng.push_back(derive_stream(seed, stream_train(i)));
  }

  RunLog log;
  log.episodes = total;
  MetricsCollector metrics(prep, total);
  EpisodeRecorder recorder(prep);
  std::vector<std::vector<double>> obs(n), next_obs(n);
  std::vector<int> actions(n);

  for (long e = 0; e < total; ++e) {
    const double eps = epsilon_at(e, dc);
    MarketState state = reset(params, env_rng);
    recorder.begin();
    for (int i = 0; i < n; ++i) obs[i] = observe(state, i, cfg.obs, params);

    for (int t = 1; t <= params.horizon; ++t) {
      for (int i = 0; i < n; ++i) actions[i] = agents[i].act(obs[i], eps, act_rng[i]);
      const StepOutcome out = step(state, actions, params);
      const bool terminal = t == params.horizon;
      for (int i = 0; i < n; ++i) {
        next_obs[i] = observe(out.next_state, i, cfg.obs, params);
        agents[i].buffer.push(obs[i], actions[i], out.rewards[i] / prep.reward_max, next_obs[i],
                              terminal);
      }
      recorder.record(actions, out);
      obs.swap(next_obs);
      state = out.next_state;
    }

    if (e >= dc.warmup_episodes) {
      const long since = e - dc.warmup_episodes;
      if (since % dc.target_update_interval_episodes == 0)
        for (auto& a : agents) a.sync_target();
      if (since % dc.train_interval_episodes == 0)
        for (int i = 0; i < n; ++i) agents[i].train(train_rng[i]);
    }

    const bool in_window = e >= metrics.window_start();
    if (in_window || e % log_every == 0) {
      const EpisodeStats stats = recorder.finish();
      if (in_window) metrics.note_episode(e, stats, true);
      if (e % log_every == 0) {
        RunLogRow row;
        row.episode = e;
        row.mean_action = stats.mean_action;
        row.mean_price = stats.mean_price;
        row.episode_profit = stats.profit;
        row.collusion_index = stats.collusion;
        row.exploration_value = eps;
        log.rows.push_back(std::move(row));
      }
    }
  }

  metrics.finalize(log, total);

  TrainResult result;
  result.log = std::move(log);
  for (int i = 0; i < n; ++i) {
    TrainedAgent t;
    t.algorithm = "dqn";
    t.primary = std::move(agents[i].online);
    t.config_hash = prep.hash;
    t.episodes = total;
    result.agents.push_back(std::move(t));
  }
  return result;
}

TrainResult ppo_training(const PreparedExperiment& prep, std::uint64_t seed) {
  const Config& cfg = prep.config;
  const MarketParams& params = prep.params;
  const PpoConfig& pc = cfg.ppo;
  const int n = params.n;
  const int obs_dim = observation_size(params, cfg.obs);
  const long total = pc.training_updates;
  const long log_every = effective_log_interval(cfg);
  const long rollout_len = static_cast<long>(pc.num_envs) * params.horizon;

  Rng env_rng = derive_stream(seed, kStreamEnv);
  Rng net_seeder = derive_stream(seed, kStreamNetInit);
  std::vector<PpoAgent> agents;
  std::vector<Rng> act_rng, train_rng;
  for (int i = 0; i < n; ++i) {
    agents.push_back(PpoAgent::init(obs_dim, params.grid.size(), pc, net_seeder.next_u64()));
    act_rng.push_back(derive_stream(seed, stream_action(i)));
    train_rng.push_back(derive_stream(seed, stream_train(i)));
  }

  RunLog log;
  log.episodes = total;
  // The convergence window is counted in env episodes; see MetricsCollector.
  MetricsCollector metrics(prep, total);
  EpisodeRecorder recorder(prep);
  std::vector<std::vector<double>> obs(n);
  std::vector<int> actions(n);
  std::vector<PpoAction> chosen(n);

  std::vector<RolloutBatch> rollouts(n);
  for (int i = 0; i < n; ++i) {
    rollouts[i].obs.resize(rollout_len, obs_dim);
    rollouts[i].actions.resize(rollout_len);
    rollouts[i].log_probs.resize(rollout_len);
    rollouts[i].values.resize(rollout_len);
    rollouts[i].rewards.resize(rollout_len);
    rollouts[i].terminal.resize(rollout_len);
  }

  for (long u = 0; u < total; ++u) {
    const bool in_window = u >= metrics.window_start();
    const bool log_now = u % log_every == 0;
    std::vector<double> mean_action(n, 0.0), mean_price(n, 0.0), mean_profit(n, 0.0);
    double mean_collusion = 0.0;

    for (int env = 0; env < pc.num_envs; ++env) {
      MarketState state = reset(params, env_rng);
      recorder.begin();
      for (int i = 0; i < n; ++i) obs[i] = observe(state, i, cfg.obs, params);
      for (int t = 1; t <= params.horizon; ++t) {
        const long row = static_cast<long>(env) * params.horizon + (t - 1);
        for (int i = 0; i < n; ++i) {
          chosen[i] = agents[i].act(obs[i], act_rng[i]);
          actions[i] = chosen[i].action;
        }
        const StepOutcome out = step(state, actions, params);
        for (int i = 0; i < n; ++i) {
          rollouts[i].obs.row(row) =
              Eigen::Map<const Eigen::RowVectorXd>(obs[i].data(), obs_dim);
          rollouts[i].actions[row] = actions[i];
          rollouts[i].log_probs(row) = chosen[i].log_prob;
          rollouts[i].values(row) = chosen[i].value;
          rollouts[i].rewards(row) = out.rewards[i] / prep.reward_max;
          rollouts[i].terminal[row] = t == params.horizon;
          obs[i] = observe(out.next_state, i, cfg.obs, params);
        }
        recorder.record(actions, out);
        state = out.next_state;
      }
      const EpisodeStats stats = recorder.finish();
      // Window coverage starts one update early to keep the episode-level
      // final-10% window fully recorded (see MetricsCollector).
      if (u + 1 >= metrics.window_start()) metrics.note_episode(u, stats, in_window);
      for (int i = 0; i < n; ++i) {
        mean_action[i] += stats.mean_action[i] / pc.num_envs;
        mean_price[i] += stats.mean_price[i] / pc.num_envs;
        mean_profit[i] += stats.profit[i] / pc.num_envs;
      }
      mean_collusion += stats.collusion / pc.num_envs;
    }

    for (int i = 0; i < n; ++i) {
      compute_gae(rollouts[i], pc);
      agents[i].update(rollouts[i], u, train_rng[i]);
    }

    if (log_now) {
      RunLogRow row;
      row.episode = u;
      row.mean_action = mean_action;
      row.mean_price = mean_price;
      row.episode_profit = mean_profit;
      row.collusion_index = mean_collusion;
      row.exploration_value = entropy_coef_at(u, pc);
      log.rows.push_back(std::move(row));
    }
  }

  metrics.finalize(log, total * pc.num_envs);

  TrainResult result;
  result.log = std::move(log);
  for (int i = 0; i < n; ++i) {
    TrainedAgent t;
    t.algorithm = "ppo";
    t.primary = std::move(agents[i].policy);
    t.value = std::move(agents[i].value);
    t.config_hash = prep.hash;
    t.episodes = total;
    result.agents.push_back(std::move(t));
  }
  return result;
}

}  // namespace

TrainResult run_training(const PreparedExperiment& prep, std::uint64_t seed) {
  return prep.config.run.algorithm == Algorithm::dqn ? dqn_training(prep, seed)
                                                     : ppo_training(prep, seed);
}

void write_runlog_csv(const std::string& path, const RunLog& log,
                      const PreparedExperiment& prep, std::uint64_t seed) {
  CsvWriter csv(path);
  csv.comment("config_hash", prep.hash);
  csv.comment("seed", std::to_string(seed));
  csv.comment("algorithm", prep.config.run.algorithm == Algorithm::dqn ? "dqn" : "ppo");
  csv.comment("convergence_metric", fmt_double(log.convergence_metric));
  csv.comment("converged", log.converged ? "true" : "false");
  csv.comment("collusion_index_last10pct", fmt_double(log.collusion_index_last10));
  csv.header({"episode", "agent", "mean_action", "mean_price", "episode_profit",
              "collusion_index", "exploration_value"});
  for (const RunLogRow& row : log.rows)
    for (size_t i = 0; i < row.mean_action.size(); ++i)
      csv.row({std::to_string(row.episode), std::to_string(i), fmt_double(row.mean_action[i]),
               fmt_double(row.mean_price[i]), fmt_double(row.episode_profit[i]),
               fmt_double(row.collusion_index), fmt_double(row.exploration_value)});
}

std::vector<SweepCell> run_sweep(const Config& base, const std::string& parameter,
                                 const std::vector<std::string>& values, int seeds_per_value,
                                 int parallel) {
  require(is_config_key(parameter), Errc::config,
          "sweep parameter is not a config key: " + parameter);
  require(!values.empty(), Errc::config, "sweep needs at least one value");
  require(seeds_per_value >= 1, Errc::config, "sweep needs at least one seed per value");

  struct ValuePrep {
    std::optional<PreparedExperiment> prep;
    std::string error;
  };
  std::vector<ValuePrep> preps(values.size());
  for (size_t v = 0; v < values.size(); ++v) {
    try {
      Config cfg = base;
      apply_override(cfg, parameter, values[v]);
      preps[v].prep = prepare_experiment(cfg);
    } catch (const std::exception& e) {
      preps[v].error = e.what();
    }
  }

  std::vector<SweepCell> cells(values.size() * static_cast<size_t>(seeds_per_value));
  for (size_t v = 0; v < values.size(); ++v)
    for (int s = 0; s < seeds_per_value; ++s) {
      SweepCell& cell = cells[v * seeds_per_value + s];
      cell.parameter = parameter;
      cell.value = values[v];
      cell.seed = static_cast<std::uint64_t>(s + 1);
    }

  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const size_t idx = cursor.fetch_add(1);
      if (idx >= cells.size()) return;
      SweepCell& cell = cells[idx];
      const ValuePrep& vp = preps[idx / seeds_per_value];
      if (!vp.prep) {
        cell.error = vp.error;
        continue;
      }
      try {
        const TrainResult result = run_training(*vp.prep, cell.seed);
        cell.convergence_metric = result.log.convergence_metric;
        cell.collusion_index_last10 = result.log.collusion_index_last10;
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };

  const int threads = std::max(1, parallel);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells,
                     const std::string& config_hash) {
  CsvWriter csv(path);
  csv.comment("config_hash", config_hash);
  csv.header({"parameter", "value", "seed", "convergence_metric", "collusion_index_last10pct"});
  for (const SweepCell& cell : cells) {
    if (!cell.ok) continue;
    csv.row({cell.parameter, cell.value, std::to_string(cell.seed),
             fmt_double(cell.convergence_metric), fmt_double(cell.collusion_index_last10)});
  }
}

}  // namespace pricelab
