#pragma once

#include <vector>

#include "common.hpp"

namespace pricelab {

// Profit streams indexed [agent][timestep]. Benchmark streams come from
// rolling the constant equilibrium prices through the same market, so all
// three are in realized-reward units.
struct ProfitGainInputs {
  std::vector<std::vector<double>> realized;
  std::vector<std::vector<double>> nash;
  std::vector<std::vector<double>> monopoly;
};

// Episodic profit gain: mean over timesteps of the realized profit's position
// between the competitive (0) and collusive (1) benchmarks. May fall below 0
// or exceed 1.
double profit_gain(const ProfitGainInputs& inputs, int agent);

// Sign-preserving power mean: m = mean(sgn(v)*|v|^gamma), result
// sgn(m)*|m|^(1/gamma). Equals the arithmetic mean at gamma = 1.
double generalized_mean(const std::vector<double>& values, double gamma);

double collusion_index(const std::vector<double>& per_agent_gains, double gamma = 0.5);

struct CollusionReport {
  std::vector<double> per_agent_gain;
  double index = 0.0;
  double gamma = 0.5;
};

CollusionReport make_collusion_report(const ProfitGainInputs& inputs, double gamma = 0.5);

struct ConvergenceResult {
  double value = 0.0;
  bool converged = false;  // value < 0.2
};

// Mean inter-agent price gap over the final 10% of training episodes,
// normalized by the Nash-monopoly interval. price_history is [episode][t][agent]
// with its last entry aligned to episode total_episodes - 1; it may hold the
// full run or just the final window. For more than two agents the gap averages
// over unordered pairs.
ConvergenceResult convergence_metric(
    const std::vector<std::vector<std::vector<double>>>& price_history, long total_episodes,
    double nash_price, double monopoly_price);

// First episode (zero-based) inside the final-10% window [ceil(0.9E), E).
long final_window_start(long total_episodes);

}  // namespace pricelab
