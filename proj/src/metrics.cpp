#include "metrics.hpp"

#include <cmath>

namespace pricelab {

double profit_gain(const ProfitGainInputs& inputs, int agent) {
  const auto& realized = inputs.realized.at(agent);
  const auto& nash = inputs.nash.at(agent);
  const auto& monopoly = inputs.monopoly.at(agent);
  require(realized.size() == nash.size() && nash.size() == monopoly.size() && !realized.empty(),
          Errc::shape_mismatch, "profit_gain: reward streams must share a length");
  double sum = 0.0;
  for (size_t t = 0; t < realized.size(); ++t) {
    const double span = monopoly[t] - nash[t];
    require(span != 0.0, Errc::invalid_argument,
            "degenerate-benchmarks: monopoly and Nash profits coincide");
    sum += (realized[t] - nash[t]) / span;
  }
  return sum / static_cast<double>(realized.size());
}

double generalized_mean(const std::vector<double>& values, double gamma) {
  require(gamma > 0.0 && gamma <= 1.0, Errc::invalid_argument,
          "invalid-gamma: exponent must lie in (0, 1]");
  require(!values.empty(), Errc::invalid_argument, "generalized_mean: empty input");
  double m = 0.0;
  for (double v : values) m += std::copysign(std::pow(std::abs(v), gamma), v);
  m /= static_cast<double>(values.size());
  return std::copysign(std::pow(std::abs(m), 1.0 / gamma), m);
}

double collusion_index(const std::vector<double>& per_agent_gains, double gamma) {
  return generalized_mean(per_agent_gains, gamma);
}

CollusionReport make_collusion_report(const ProfitGainInputs& inputs, double gamma) {
  CollusionReport report;
  report.gamma = gamma;
  report.per_agent_gain.reserve(inputs.realized.size());
  for (size_t i = 0; i < inputs.realized.size(); ++i)
    report.per_agent_gain.push_back(profit_gain(inputs, static_cast<int>(i)));
  report.index = collusion_index(report.per_agent_gain, gamma);
  return report;
}

long final_window_start(long total_episodes) {
  return static_cast<long>(std::ceil(0.9 * static_cast<double>(total_episodes)));
}

ConvergenceResult convergence_metric(
    const std::vector<std::vector<std::vector<double>>>& price_history, long total_episodes,
    double nash_price, double monopoly_price) {
  require(total_episodes >= 10, Errc::invalid_argument,
          "convergence_metric: needs at least 10 episodes");
  require(monopoly_price > nash_price, Errc::invalid_argument,
          "convergence_metric: monopoly price must exceed Nash price");
  const long window = total_episodes - final_window_start(total_episodes);
  require(static_cast<long>(price_history.size()) >= window, Errc::insufficient_history,
          "insufficient-history: fewer episodes recorded than the final 10% window");

  const double span = monopoly_price - nash_price;
  const size_t first = price_history.size() - static_cast<size_t>(window);
  double sum = 0.0;
  for (size_t e = first; e < price_history.size(); ++e) {
    const auto& episode = price_history[e];
    require(!episode.empty(), Errc::invalid_argument, "convergence_metric: empty episode");
    double episode_gap = 0.0;
    for (const auto& step : episode) {
      const size_t n = step.size();
      require(n >= 2, Errc::invalid_argument, "convergence_metric: needs >= 2 agents");
      double pair_gap = 0.0;
      long pairs = 0;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
          pair_gap += std::abs(step[i] - step[j]);
          ++pairs;
        }
      episode_gap += pair_gap / static_cast<double>(pairs) / span;
    }
    sum += episode_gap / static_cast<double>(episode.size());
  }
  ConvergenceResult out;
  out.value = sum / static_cast<double>(window);
  out.converged = out.value < 0.2;
  return out;
}

}  // namespace pricelab
