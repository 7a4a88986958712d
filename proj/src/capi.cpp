#include "pricelab/pricelab.h"

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "equilibria.hpp"
#include "harness.hpp"

using namespace pricelab;

struct plab_session {
  Config config;
  bool loaded = false;
  std::string last_error;
  // Benchmarks are solved once per effective config and reused by every
  // subsequent operation on the session.
  std::optional<PreparedExperiment> prep;
};

namespace {

plab_status status_of(const Error& e) {
  switch (e.code()) {
    case Errc::config:
    case Errc::not_implemented:
      return PLAB_ERR_CONFIG;
    case Errc::no_convergence:
      return PLAB_ERR_NO_CONVERGENCE;
    case Errc::io:
      return PLAB_ERR_IO;
    case Errc::invalid_argument:
    case Errc::shape_mismatch:
    case Errc::insufficient_history:
      return PLAB_ERR_INVALID;
    case Errc::degenerate_bounds:
      return PLAB_ERR_RUNTIME;
  }
  return PLAB_ERR_RUNTIME;
}

template <typename F>
plab_status guarded(plab_session* s, F&& body) {
  if (!s) return PLAB_ERR_INVALID;
  s->last_error.clear();
  try {
    return body();
  } catch (const Error& e) {
    s->last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return PLAB_ERR_RUNTIME;
  }
}

const PreparedExperiment& prepared(plab_session* s) {
  require(s->loaded, Errc::invalid_argument, "session has no config loaded");
  if (!s->prep) s->prep = prepare_experiment(s->config);
  return *s->prep;
}

plab_status copy_string(const std::string& text, char* buf, size_t cap) {
  if (!buf || cap == 0) return PLAB_ERR_INVALID;
  if (text.size() + 1 > cap) return PLAB_ERR_INVALID;
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return PLAB_OK;
}

void fill_equilibrium(const EquilibriumSolution& sol, plab_equilibrium* out) {
  if (!out) return;
  out->n_agents = static_cast<int>(sol.prices.size());
  for (size_t i = 0; i < sol.prices.size() && i < PLAB_MAX_AGENTS; ++i) {
    out->price[i] = sol.prices[i];
    out->per_period_demand[i] = sol.per_period_demand[i];
    out->per_period_profit[i] = sol.per_period_profit[i];
  }
  out->capacity_per_period = sol.capacity_per_period;
  out->certification_gap = sol.certification_gap;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void write_benchmarks_csv(const PreparedExperiment& prep, const std::string& out_dir) {
  CapacityRow row;
  row.capacity = prep.config.market.capacity_per_period;
  row.nash_price = prep.nash.prices[0];
  row.monopoly_price = prep.monopoly.prices[0];
  row.nash_demand = prep.nash.per_period_demand[0];
  row.monopoly_demand = prep.monopoly.per_period_demand[0];
  row.nash_profit = prep.nash.per_period_profit[0];
  row.monopoly_profit = prep.monopoly.per_period_profit[0];
  write_capacity_sweep_csv(join_path(out_dir, "benchmarks_" + prep.hash + ".csv"), {row},
                           prep.hash);
}

std::vector<TrainedAgent> load_agents(const PreparedExperiment& prep,
                                      const std::string& checkpoint_dir) {
  std::vector<TrainedAgent> agents;
  for (int i = 0; i < prep.params.n; ++i)
    agents.push_back(
        TrainedAgent::load(join_path(checkpoint_dir, "agent" + std::to_string(i) + ".ckpt")));
  return agents;
}

std::vector<const GreedyPolicy*> as_policies(const std::vector<TrainedAgent>& agents) {
  std::vector<const GreedyPolicy*> out;
  for (const TrainedAgent& a : agents) out.push_back(&a);
  return out;
}

}  // namespace

plab_session* plab_session_new(void) { return new plab_session(); }

void plab_session_free(plab_session* session) { delete session; }

const char* plab_session_last_error(const plab_session* session) {
  return session ? session->last_error.c_str() : "null session";
}

plab_status plab_session_load(plab_session* session, const char* config_path,
                              const char* const* overrides, int n_overrides) {
  return guarded(session, [&]() {
    Config cfg = config_path ? parse_config_file(config_path) : Config{};
    for (int i = 0; i < n_overrides; ++i) {
      const std::string entry = overrides[i] ? overrides[i] : "";
      const auto eq = entry.find('=');
      require(eq != std::string::npos, Errc::config, "override must be key=value: " + entry);
      apply_override(cfg, entry.substr(0, eq), entry.substr(eq + 1));
    }
    cfg.validate();
    require(cfg.market.n <= PLAB_MAX_AGENTS, Errc::config, "market.n exceeds PLAB_MAX_AGENTS");
    session->config = cfg;
    session->loaded = true;
    session->prep.reset();
    return PLAB_OK;
  });
}

plab_status plab_config_hash(plab_session* session, char* buf, size_t cap) {
  return guarded(session, [&]() {
    require(session->loaded, Errc::invalid_argument, "session has no config loaded");
    return copy_string(config_hash_hex(session->config), buf, cap);
  });
}

plab_status plab_config_dump(plab_session* session, char* buf, size_t cap) {
  return guarded(session, [&]() {
    require(session->loaded, Errc::invalid_argument, "session has no config loaded");
    return copy_string(dump_config(session->config), buf, cap);
  });
}

plab_status plab_run_seeds(plab_session* session, uint64_t* buf, int cap, int* count) {
  return guarded(session, [&]() {
    require(session->loaded, Errc::invalid_argument, "session has no config loaded");
    const auto& seeds = session->config.run.seeds;
    if (count) *count = static_cast<int>(seeds.size());
    for (int i = 0; i < cap && i < static_cast<int>(seeds.size()); ++i) buf[i] = seeds[i];
    return PLAB_OK;
  });
}

plab_status plab_solve(plab_session* session, const char* out_dir, plab_equilibrium* nash,
                       plab_equilibrium* monopoly) {
  return guarded(session, [&]() {
    const PreparedExperiment& prep = prepared(session);
    fill_equilibrium(prep.nash, nash);
    fill_equilibrium(prep.monopoly, monopoly);
    if (out_dir) {
      ensure_directory(out_dir);
      write_benchmarks_csv(prep, out_dir);
    }
    return PLAB_OK;
  });
}

plab_status plab_capacity_sweep(plab_session* session, const long* capacities, int count,
                                const char* out_dir) {
  return guarded(session, [&]() {
    require(session->loaded, Errc::invalid_argument, "session has no config loaded");
    require(capacities && count >= 1, Errc::invalid_argument, "no capacities given");
    MarketParams params = market_params_from(session->config.market);
    const std::vector<long> caps(capacities, capacities + count);
    const std::vector<CapacityRow> rows = capacity_sweep(params, caps, session->config.solver);
    require(out_dir != nullptr, Errc::invalid_argument, "capacity sweep needs an output dir");
    ensure_directory(out_dir);
    write_capacity_sweep_csv(
        join_path(out_dir, "capacity_sweep_" + config_hash_hex(session->config) + ".csv"), rows,
        config_hash_hex(session->config));
    return PLAB_OK;
  });
}

plab_status plab_reward_bounds(plab_session* session, double* r_min, double* r_max) {
  return guarded(session, [&]() {
    const PreparedExperiment& prep = prepared(session);
    const auto bounds = reward_bounds(prep.params);
    if (r_min) *r_min = bounds.first;
    if (r_max) *r_max = bounds.second;
    return PLAB_OK;
  });
}

plab_status plab_train(plab_session* session, uint64_t seed, const char* out_dir,
                       plab_train_result* result) {
  return guarded(session, [&]() {
    const PreparedExperiment& prep = prepared(session);
    require(out_dir != nullptr, Errc::invalid_argument, "train needs an output dir");
    ensure_directory(out_dir);
    const TrainResult train = run_training(prep, seed);
    write_benchmarks_csv(prep, out_dir);
    write_runlog_csv(
        join_path(out_dir, "runlog_" + prep.hash + "_seed" + std::to_string(seed) + ".csv"),
        train.log, prep, seed);
    for (size_t i = 0; i < train.agents.size(); ++i)
      train.agents[i].save(join_path(out_dir, "agent" + std::to_string(i) + ".ckpt"));
    if (result) {
      result->convergence_metric = train.log.convergence_metric;
      result->converged = train.log.converged ? 1 : 0;
      result->collusion_index_last10 = train.log.collusion_index_last10;
    }
    return PLAB_OK;
  });
}

plab_status plab_eval(plab_session* session, const char* checkpoint_dir, uint64_t seed,
                      const char* out_dir, double* collusion_index) {
  return guarded(session, [&]() {
    const PreparedExperiment& prep = prepared(session);
    require(checkpoint_dir != nullptr, Errc::invalid_argument, "eval needs a checkpoint dir");
    const std::vector<TrainedAgent> agents = load_agents(prep, checkpoint_dir);
    const Trajectory traj = evaluate(prep, as_policies(agents), seed);
    if (out_dir) {
      ensure_directory(out_dir);
      write_trajectory_csv(
          join_path(out_dir, "trajectory_" + prep.hash + "_seed" + std::to_string(seed) + ".csv"),
          traj, prep.hash, seed);
    }
    if (collusion_index) *collusion_index = trajectory_collusion(traj, prep).index;
    return PLAB_OK;
  });
}

plab_status plab_deviate(plab_session* session, const char* checkpoint_dir, int agent,
                         int timestep, int action, uint64_t seed, const char* out_dir,
                         double* overall_profit_ratio) {
  return guarded(session, [&]() {
    const PreparedExperiment& prep = prepared(session);
    require(checkpoint_dir != nullptr, Errc::invalid_argument, "deviate needs a checkpoint dir");
    const std::vector<TrainedAgent> agents = load_agents(prep, checkpoint_dir);
    DeviationSpec spec;
    spec.agent = agent;
    spec.timestep = timestep;
    spec.action = action;
    const DeviationReport report = forced_deviation(prep, as_policies(agents), spec, seed);
    if (out_dir) {
      ensure_directory(out_dir);
      write_deviation_csv(
          join_path(out_dir, "deviation_" + prep.hash + "_seed" + std::to_string(seed) + "_t" +
                                 std::to_string(timestep) + ".csv"),
          report, spec, prep.hash, seed);
    }
    if (overall_profit_ratio) *overall_profit_ratio = report.overall_ratio;
    return PLAB_OK;
  });
}

plab_status plab_surface(plab_session* session, const char* checkpoint_dir, int agent,
                         const int* timesteps, int n_timesteps, const char* out_dir) {
  return guarded(session, [&]() {
    const PreparedExperiment& prep = prepared(session);
    require(checkpoint_dir != nullptr, Errc::invalid_argument, "surface needs a checkpoint dir");
    const std::vector<TrainedAgent> agents = load_agents(prep, checkpoint_dir);
    SurfaceSpec spec;
    spec.agent = agent;
    if (timesteps && n_timesteps > 0) spec.timesteps.assign(timesteps, timesteps + n_timesteps);
    require(agent >= 0 && agent < static_cast<int>(agents.size()), Errc::invalid_argument,
            "surface: bad agent index");
    const std::vector<SurfaceRow> rows = response_surface(prep, agents[agent], spec);
    require(out_dir != nullptr, Errc::invalid_argument, "surface needs an output dir");
    ensure_directory(out_dir);
    write_surface_csv(
        join_path(out_dir, "surface_" + prep.hash + "_agent" + std::to_string(agent) + ".csv"),
        rows, prep.hash);
    return PLAB_OK;
  });
}

plab_status plab_sweep(plab_session* session, const char* parameter, const char* const* values,
                       int n_values, int seeds_per_value, int parallel, const char* out_dir) {
  return guarded(session, [&]() {
    require(session->loaded, Errc::invalid_argument, "session has no config loaded");
    require(parameter && values && n_values >= 1, Errc::invalid_argument, "bad sweep spec");
    std::vector<std::string> value_list;
    for (int i = 0; i < n_values; ++i) value_list.emplace_back(values[i] ? values[i] : "");
    const std::vector<SweepCell> cells =
        run_sweep(session->config, parameter, value_list, seeds_per_value, parallel);
    require(out_dir != nullptr, Errc::invalid_argument, "sweep needs an output dir");
    ensure_directory(out_dir);
    write_sweep_csv(join_path(out_dir, "sweep_" + config_hash_hex(session->config) + ".csv"),
                    cells, config_hash_hex(session->config));
    for (const SweepCell& cell : cells)
      if (!cell.ok)
        session->last_error += "cell " + cell.parameter + "=" + cell.value + " seed " +
                               std::to_string(cell.seed) + ": " + cell.error + "\n";
    return PLAB_OK;
  });
}
