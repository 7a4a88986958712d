#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqn.hpp"
#include "equilibria.hpp"
#include "market.hpp"
#include "ppo.hpp"

namespace pricelab {

enum class Algorithm { dqn, ppo };
enum class PriceGridMode { constrained, unconstrained };

struct MarketSection {
  int n = 2;
  double quality = 2.0;
  double outside_quality = 0.0;
  double differentiation = 0.25;
  double cost = 1.0;
  long demand_scale = 1000;
  int horizon = 20;
  long capacity_per_period = 440;
  int grid_size = 15;
  double xi = 0.2;
  PriceGridMode price_grid_mode = PriceGridMode::constrained;
};

struct RunSection {
  Algorithm algorithm = Algorithm::ppo;
  std::vector<std::uint64_t> seeds = {1};
  long log_interval = 0;  // 0 = per-algorithm default (ppo 1, dqn 50)
  std::string output_dir = "out";
};

// Effective experiment configuration: file defaults, then file values, then
// --set overrides, in that order.
struct Config {
  MarketSection market;
  ObservationSpec obs;
  RunSection run;
  SolverConfig solver;
  DqnConfig dqn;
  PpoConfig ppo;

  void validate() const;
};

Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text, const std::string& origin = "<inline>");

// key must be a recognized dotted config key, e.g. "market.capacity_per_period".
void apply_override(Config& cfg, const std::string& key, const std::string& value);
bool is_config_key(const std::string& key);

// Canonical key = value dump; parsing it back reproduces the config exactly.
std::string dump_config(const Config& cfg);
std::uint64_t config_hash(const Config& cfg);
std::string config_hash_hex(const Config& cfg);

// Scalar market sections expand to symmetric per-agent parameter vectors.
// The grid stays empty here; the harness anchors it to solved benchmarks.
MarketParams market_params_from(const MarketSection& m);

}  // namespace pricelab
