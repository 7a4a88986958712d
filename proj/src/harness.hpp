#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "dqn.hpp"
#include "equilibria.hpp"
#include "market.hpp"
#include "metrics.hpp"
#include "ppo.hpp"

namespace pricelab {

// Evaluation-time view of an agent: deterministic greedy action per observation.
struct GreedyPolicy {
  virtual ~GreedyPolicy() = default;
  virtual int action(const std::vector<double>& obs) const = 0;
};

struct ConstantPolicy final : GreedyPolicy {
  explicit ConstantPolicy(int index) : index_(index) {}
  int action(const std::vector<double>&) const override { return index_; }

 private:
  int index_;
};

// Checkpointable trained agent. DQN keeps its online Q network; PPO keeps the
// policy and value heads.
struct TrainedAgent final : GreedyPolicy {
  std::string algorithm;
  Mlp primary;
  std::optional<Mlp> value;
  std::string config_hash;
  long episodes = 0;

  int action(const std::vector<double>& obs) const override;
  void save(const std::string& path) const;
  static TrainedAgent load(const std::string& path);
};

// Config resolved into a runnable experiment: benchmarks solved, the price
// grid anchored to them, and the reward normalization bound computed.
struct PreparedExperiment {
  Config config;
  MarketParams params;
  EquilibriumSolution nash;      // at the configured capacity
  EquilibriumSolution monopoly;  // at the configured capacity
  double reward_max = 0.0;
  std::string hash;

  double nash_price() const;
  double monopoly_price() const;
};

PreparedExperiment prepare_experiment(const Config& cfg);

struct Trajectory {
  std::vector<std::vector<int>> actions;       // [t][agent]
  std::vector<std::vector<double>> prices;     // [t][agent]
  std::vector<std::vector<double>> demands;    // [t][agent]
  std::vector<std::vector<long>> quantities;   // [t][agent]
  std::vector<std::vector<long>> inventories;  // [t][agent], after the step
  std::vector<std::vector<double>> rewards;    // [t][agent]
  std::vector<double> episode_profit;          // [agent]
};

// One greedy episode from a seeded reset.
Trajectory evaluate(const PreparedExperiment& prep,
                    const std::vector<const GreedyPolicy*>& policies, std::uint64_t seed);

CollusionReport trajectory_collusion(const Trajectory& traj, const PreparedExperiment& prep);

struct RunLogRow {
  long episode = 0;
  std::vector<double> mean_action;
  std::vector<double> mean_price;
  std::vector<double> episode_profit;
  double collusion_index = 0.0;
  double exploration_value = 0.0;  // epsilon (dqn) or entropy coefficient (ppo)
};

struct RunLog {
  std::vector<RunLogRow> rows;
  long episodes = 0;  // dqn: training episodes; ppo: training updates
  double convergence_metric = 0.0;
  bool converged = false;
  double collusion_index_last10 = 0.0;
};

struct TrainResult {
  RunLog log;
  std::vector<TrainedAgent> agents;
};

// The full training loop: per-episode interaction, normalized rewards to the
// learners, cadenced updates, per-episode metrics against the prepared
// benchmarks. Deterministic per (config, seed).
TrainResult run_training(const PreparedExperiment& prep, std::uint64_t seed);

long effective_log_interval(const Config& cfg);

void write_runlog_csv(const std::string& path, const RunLog& log,
                      const PreparedExperiment& prep, std::uint64_t seed);

struct SweepCell {
  std::string parameter;
  std::string value;
  std::uint64_t seed = 0;
  double convergence_metric = 0.0;
  double collusion_index_last10 = 0.0;
  bool ok = false;
  std::string error;
};

// One training run per (value, seed); failed cells carry their error and do
// not stop the rest. Runs execute on `parallel` threads; results are ordered
// by (value, seed) regardless of scheduling.
std::vector<SweepCell> run_sweep(const Config& base, const std::string& parameter,
                                 const std::vector<std::string>& values, int seeds_per_value,
                                 int parallel);

void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells,
                     const std::string& config_hash);

}  // namespace pricelab
