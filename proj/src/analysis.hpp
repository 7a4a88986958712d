#pragma once

#include <string>
#include <vector>

#include "harness.hpp"

namespace pricelab {

struct DeviationSpec {
  int agent = 0;
  int timestep = 1;  // 1-based
  // Grid index forced at the deviation step; -1 picks the action maximizing
  // the deviator's one-step profit against the opponents' previous prices,
  // falling back to the grid's Nash anchor when nothing earns a profit.
  int action = -1;
};

struct DeviationReport {
  Trajectory baseline;
  Trajectory deviated;
  int applied_action = -1;
  std::vector<double> profit_ratio;  // deviated / baseline, per agent
  double overall_ratio = 0.0;        // total deviated / total baseline
};

// Two greedy episodes from the same seed, one with the deviator's action
// overridden at the chosen timestep. Opponents observe the deviation through
// the state, so their learned reaction shows up from timestep+1 on.
DeviationReport forced_deviation(const PreparedExperiment& prep,
                                 const std::vector<const GreedyPolicy*>& policies,
                                 const DeviationSpec& spec, std::uint64_t seed);

struct SurfaceSpec {
  int agent = 0;
  std::vector<int> timesteps;  // empty = 4 evenly spaced samples across the episode
};

struct SurfaceRow {
  int t = 0;
  double inventory_frac = 0.0;
  int own_prev = 0;
  int opp_prev = 0;
  int greedy_action = 0;
};

// Greedy action of one agent over all (own previous price, opponent previous
// price) grid cells at sampled timesteps, with both inventories on the linear
// full-to-empty schedule x(t) = I * (1 - t/T).
std::vector<SurfaceRow> response_surface(const PreparedExperiment& prep,
                                         const GreedyPolicy& policy, const SurfaceSpec& spec);

struct LearningCurvePoint {
  long episode = 0;
  std::vector<double> mean_action_mean;  // per agent, across runs
  std::vector<double> mean_action_std;
  double collusion_mean = 0.0;
  double collusion_std = 0.0;
};

// Cross-seed aggregation of run logs sharing one episode grid.
std::vector<LearningCurvePoint> export_learning_curves(const std::vector<RunLog>& logs);

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_hash, std::uint64_t seed);
void write_deviation_csv(const std::string& path, const DeviationReport& report,
                         const DeviationSpec& spec, const std::string& config_hash,
                         std::uint64_t seed);
void write_surface_csv(const std::string& path, const std::vector<SurfaceRow>& rows,
                       const std::string& config_hash);
void write_learning_curves_csv(const std::string& path,
                               const std::vector<LearningCurvePoint>& points,
                               const std::string& config_hash);

}  // namespace pricelab
