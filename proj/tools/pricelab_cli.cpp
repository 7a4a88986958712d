// Command-line front end for the pricelab shared library. Everything goes
// through the public C API; exit codes are 0 (ok), 1 (config/usage error),
// 2 (solver non-convergence).

#include <cstdint>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pricelab/pricelab.h"

namespace {

struct SessionDeleter {
  void operator()(plab_session* s) const { plab_session_free(s); }
};
using SessionPtr = std::unique_ptr<plab_session, SessionDeleter>;

int exit_code(plab_status status) {
  switch (status) {
    case PLAB_OK:
      return 0;
    case PLAB_ERR_NO_CONVERGENCE:
      return 2;
    default:
      return 1;
  }
}

int report(plab_session* session, plab_status status) {
  if (status == PLAB_OK) return 0;
  std::fprintf(stderr, "error: %s\n", plab_session_last_error(session));
  return exit_code(status);
}

SessionPtr open_session(const std::string& config_path,
                        const std::vector<std::string>& overrides, plab_status* status) {
  SessionPtr session(plab_session_new());
  std::vector<const char*> raw;
  for (const std::string& o : overrides) raw.push_back(o.c_str());
  *status = plab_session_load(session.get(), config_path.empty() ? nullptr : config_path.c_str(),
                              raw.data(), static_cast<int>(raw.size()));
  return session;
}

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stol(item));
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pricelab: pricing-agent collusion laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd, bool with_seed) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--set", overrides, "config override key=value (repeatable)");
    cmd->add_option("--out", out_dir, "output directory");
    if (with_seed)
      cmd->add_option("--seed", seed, "run seed")->each([&](const std::string&) {
        seed_given = true;
      });
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the competitive and collusive benchmarks");
  std::string capacities_arg;
  add_common(solve, false);
  solve->add_option("--capacities", capacities_arg,
                    "comma list of per-period capacities for a capacity sweep");

  CLI::App* bounds = app.add_subcommand("bounds", "print the reward normalization bounds");
  add_common(bounds, false);

  CLI::App* train = app.add_subcommand("train", "train one seed (or all run.seeds)");
  add_common(train, true);

  std::string checkpoint_dir;
  CLI::App* eval = app.add_subcommand("eval", "greedy evaluation episode from checkpoints");
  add_common(eval, true);
  eval->add_option("--checkpoint-dir", checkpoint_dir, "directory holding agent<k>.ckpt");

  CLI::App* deviate = app.add_subcommand("deviate", "forced-deviation probe");
  int dev_agent = 0, dev_tau = 1, dev_action = -1;
  add_common(deviate, true);
  deviate->add_option("--checkpoint-dir", checkpoint_dir, "directory holding agent<k>.ckpt");
  deviate->add_option("--agent", dev_agent, "deviating agent index");
  deviate->add_option("--tau", dev_tau, "deviation timestep (1-based)");
  deviate->add_option("--action", dev_action, "forced grid action (-1 = one-step best response)");

  CLI::App* surface = app.add_subcommand("surface", "greedy best-response surface");
  int surf_agent = 0;
  std::string timesteps_arg;
  add_common(surface, false);
  surface->add_option("--checkpoint-dir", checkpoint_dir, "directory holding agent<k>.ckpt");
  surface->add_option("--agent", surf_agent, "probed agent index");
  surface->add_option("--timesteps", timesteps_arg, "comma list of timesteps to sample");

  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter sweep over one config key");
  std::string sweep_param, sweep_values;
  int sweep_seeds = 40, sweep_parallel = 1;
  add_common(sweep, false);
  sweep->add_option("--param", sweep_param, "config key to vary")->required();
  sweep->add_option("--values", sweep_values, "comma list of values")->required();
  sweep->add_option("--sweep-seeds", sweep_seeds, "seeds per value");
  sweep->add_option("--parallel", sweep_parallel, "max concurrent runs");

  CLI11_PARSE(app, argc, argv);

  plab_status status = PLAB_OK;
  SessionPtr session = open_session(config_path, overrides, &status);
  if (status != PLAB_OK) return report(session.get(), status);
  if (checkpoint_dir.empty()) checkpoint_dir = out_dir;

  if (solve->parsed()) {
    if (!capacities_arg.empty()) {
      const std::vector<long> caps = parse_long_list(capacities_arg);
      status = plab_capacity_sweep(session.get(), caps.data(), static_cast<int>(caps.size()),
                                   out_dir.c_str());
      if (status != PLAB_OK) return report(session.get(), status);
      std::printf("capacity sweep over %zu capacities written to %s\n", caps.size(),
                  out_dir.c_str());
      return 0;
    }
    plab_equilibrium nash{}, monopoly{};
    status = plab_solve(session.get(), out_dir.c_str(), &nash, &monopoly);
    if (status != PLAB_OK) return report(session.get(), status);
    std::printf(
        "nash_price=%.4f monopoly_price=%.4f nash_demand=%ld monopoly_demand=%ld "
        "nash_profit=%.2f monopoly_profit=%.2f certification_gap=%.4g\n",
        nash.price[0], monopoly.price[0], nash.per_period_demand[0],
        monopoly.per_period_demand[0], nash.per_period_profit[0], monopoly.per_period_profit[0],
        nash.certification_gap);
    return 0;
  }

  if (bounds->parsed()) {
    double r_min = 0.0, r_max = 0.0;
    status = plab_reward_bounds(session.get(), &r_min, &r_max);
    if (status != PLAB_OK) return report(session.get(), status);
    std::printf("reward_min=%.6g reward_max=%.6g\n", r_min, r_max);
    return 0;
  }

  if (train->parsed()) {
    std::vector<std::uint64_t> seeds;
    if (seed_given) {
      seeds.push_back(seed);
    } else {
      int count = 0;
      std::vector<std::uint64_t> buf(4096);
      status = plab_run_seeds(session.get(), buf.data(), static_cast<int>(buf.size()), &count);
      if (status != PLAB_OK) return report(session.get(), status);
      seeds.assign(buf.begin(), buf.begin() + count);
    }
    for (std::uint64_t s : seeds) {
      plab_train_result result{};
      status = plab_train(session.get(), s, out_dir.c_str(), &result);
      if (status != PLAB_OK) return report(session.get(), status);
      std::printf("seed=%llu convergence_metric=%.4f converged=%s collusion_last10=%.4f\n",
                  static_cast<unsigned long long>(s), result.convergence_metric,
                  result.converged ? "true" : "false", result.collusion_index_last10);
    }
    return 0;
  }

  if (eval->parsed()) {
    double index = 0.0;
    status = plab_eval(session.get(), checkpoint_dir.c_str(), seed, out_dir.c_str(), &index);
    if (status != PLAB_OK) return report(session.get(), status);
    std::printf("seed=%llu collusion_index=%.4f\n", static_cast<unsigned long long>(seed), index);
    return 0;
  }

  if (deviate->parsed()) {
    double ratio = 0.0;
    status = plab_deviate(session.get(), checkpoint_dir.c_str(), dev_agent, dev_tau, dev_action,
                          seed, out_dir.c_str(), &ratio);
    if (status != PLAB_OK) return report(session.get(), status);
    std::printf("seed=%llu tau=%d overall_profit_ratio=%.4f\n",
                static_cast<unsigned long long>(seed), dev_tau, ratio);
    return 0;
  }

  if (surface->parsed()) {
    std::vector<int> timesteps;
    for (long t : parse_long_list(timesteps_arg)) timesteps.push_back(static_cast<int>(t));
    status = plab_surface(session.get(), checkpoint_dir.c_str(), surf_agent,
                          timesteps.empty() ? nullptr : timesteps.data(),
                          static_cast<int>(timesteps.size()), out_dir.c_str());
    if (status != PLAB_OK) return report(session.get(), status);
    std::printf("surface for agent %d written to %s\n", surf_agent, out_dir.c_str());
    return 0;
  }

  if (sweep->parsed()) {
    const std::vector<std::string> values = split_list(sweep_values);
    std::vector<const char*> raw;
    for (const std::string& v : values) raw.push_back(v.c_str());
    status = plab_sweep(session.get(), sweep_param.c_str(), raw.data(),
                        static_cast<int>(raw.size()), sweep_seeds, sweep_parallel,
                        out_dir.c_str());
    if (status != PLAB_OK) return report(session.get(), status);
    const char* warnings = plab_session_last_error(session.get());
    if (warnings && warnings[0]) std::fprintf(stderr, "%s", warnings);
    std::printf("sweep over %s (%zu values x %d seeds) written to %s\n", sweep_param.c_str(),
                values.size(), sweep_seeds, out_dir.c_str());
    return 0;
  }

  return 1;
}
