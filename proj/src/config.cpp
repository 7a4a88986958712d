#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "csv.hpp"

namespace pricelab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const long out = std::stol(v, &pos);
    require(pos == v.size(), Errc::config, "bad integer for " + key + ": " + v);
    return out;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(Errc::config, "bad integer for " + key + ": " + v);
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    require(pos == v.size(), Errc::config, "bad number for " + key + ": " + v);
    return out;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(Errc::config, "bad number for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(Errc::config, "bad boolean for " + key + ": " + v);
}

// "1..40" or "3,7,11" or "5"
std::vector<std::uint64_t> parse_seed_list(const std::string& v, const std::string& key) {
  std::vector<std::uint64_t> seeds;
  const auto dots = v.find("..");
  if (dots != std::string::npos) {
    const long lo = parse_long(trim(v.substr(0, dots)), key);
    const long hi = parse_long(trim(v.substr(dots + 2)), key);
    require(lo >= 0 && hi >= lo, Errc::config, "bad seed range for " + key + ": " + v);
    for (long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
  }
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) seeds.push_back(static_cast<std::uint64_t>(parse_long(item, key)));
  }
  require(!seeds.empty(), Errc::config, "empty seed list for " + key);
  return seeds;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(parse_long(item, key)));
  }
  require(!out.empty(), Errc::config, "empty list for " + key);
  return out;
}

std::string format_seed_list(const std::vector<std::uint64_t>& seeds) {
  // Contiguous ranges dump as lo..hi so files stay readable.
  bool contiguous = seeds.size() > 1;
  for (size_t i = 1; i < seeds.size() && contiguous; ++i)
    contiguous = seeds[i] == seeds[i - 1] + 1;
  std::string out;
  if (contiguous)
    return std::to_string(seeds.front()) + ".." + std::to_string(seeds.back());
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string format_int_list(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

std::string dump_double(double v) {
  if (std::isnan(v)) return "auto";
  return fmt_double_exact(v);
}

double parse_double_or_auto(const std::string& v, const std::string& key) {
  if (v == "auto") return std::numeric_limits<double>::quiet_NaN();
  return parse_double(v, key);
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    auto add_long = [&f](const char* key, auto member) {
      f.push_back({key,
                   [key, member](Config& c, const std::string& v) { c.*member = parse_long(v, key); },
                   [member](const Config& c) { return std::to_string(c.*member); }});
    };
    (void)add_long;

#define FIELD_NUM(KEY, REF, PARSE, DUMP)                                            \
  f.push_back({KEY, [](Config& c, const std::string& v) { c.REF = PARSE(v, KEY); }, \
               [](const Config& c) { return DUMP(c.REF); }})
#define FIELD_LONG(KEY, REF) FIELD_NUM(KEY, REF, parse_long, std::to_string)
#define FIELD_INT(KEY, REF)                                                      \
  f.push_back({KEY,                                                              \
               [](Config& c, const std::string& v) {                             \
                 c.REF = static_cast<int>(parse_long(v, KEY));                   \
               },                                                                \
               [](const Config& c) { return std::to_string(c.REF); }})
#define FIELD_DOUBLE(KEY, REF) FIELD_NUM(KEY, REF, parse_double, fmt_double_exact)
#define FIELD_AUTO_DOUBLE(KEY, REF) FIELD_NUM(KEY, REF, parse_double_or_auto, dump_double)
#define FIELD_BOOL(KEY, REF)                                                            \
  f.push_back({KEY, [](Config& c, const std::string& v) { c.REF = parse_bool(v, KEY); }, \
               [](const Config& c) { return c.REF ? std::string("true") : std::string("false"); }})

    FIELD_INT("market.n", market.n);
    FIELD_DOUBLE("market.quality", market.quality);
    FIELD_DOUBLE("market.outside_quality", market.outside_quality);
    FIELD_DOUBLE("market.differentiation", market.differentiation);
    FIELD_DOUBLE("market.cost", market.cost);
    FIELD_LONG("market.demand_scale", market.demand_scale);
    FIELD_INT("market.horizon", market.horizon);
    FIELD_LONG("market.capacity_per_period", market.capacity_per_period);
    FIELD_INT("market.grid_size", market.grid_size);
    FIELD_DOUBLE("market.xi", market.xi);
    f.push_back({"market.price_grid_mode",
                 [](Config& c, const std::string& v) {
                   if (v == "constrained")
                     c.market.price_grid_mode = PriceGridMode::constrained;
                   else if (v == "unconstrained")
                     c.market.price_grid_mode = PriceGridMode::unconstrained;
                   else
                     fail(Errc::config, "market.price_grid_mode must be constrained|unconstrained");
                 },
                 [](const Config& c) {
                   return std::string(c.market.price_grid_mode == PriceGridMode::constrained
                                          ? "constrained"
                                          : "unconstrained");
                 }});

    FIELD_BOOL("obs.opponent_inventory", obs.include_opponent_inventory);
    FIELD_BOOL("obs.time", obs.include_time);

    f.push_back({"run.algorithm",
                 [](Config& c, const std::string& v) {
                   if (v == "dqn")
                     c.run.algorithm = Algorithm::dqn;
                   else if (v == "ppo")
                     c.run.algorithm = Algorithm::ppo;
                   else
                     fail(Errc::config, "run.algorithm must be dqn|ppo");
                 },
                 [](const Config& c) {
                   return std::string(c.run.algorithm == Algorithm::dqn ? "dqn" : "ppo");
                 }});
    f.push_back({"run.seeds",
                 [](Config& c, const std::string& v) {
                   c.run.seeds = parse_seed_list(v, "run.seeds");
                 },
                 [](const Config& c) { return format_seed_list(c.run.seeds); }});
    FIELD_LONG("run.log_interval", run.log_interval);
    f.push_back({"run.output_dir",
                 [](Config& c, const std::string& v) { c.run.output_dir = v; },
                 [](const Config& c) { return c.run.output_dir; }});

    FIELD_AUTO_DOUBLE("solver.price_lo", solver.price_search_lo);
    FIELD_AUTO_DOUBLE("solver.price_hi", solver.price_search_hi);
    FIELD_DOUBLE("solver.resolution", solver.resolution);
    FIELD_INT("solver.max_iters", solver.max_gauss_seidel_iters);
    FIELD_DOUBLE("solver.tol", solver.convergence_tol);
    FIELD_INT("solver.restarts", solver.restarts);
    FIELD_NUM("solver.seed", solver.seed, parse_long, std::to_string);
    FIELD_DOUBLE("solver.epsilon_tolerance", solver.epsilon_tolerance);
    FIELD_BOOL("solver.discounting", solver.discounting);

    FIELD_LONG("agent.dqn.episodes", dqn.training_episodes);
    FIELD_DOUBLE("agent.dqn.learning_rate", dqn.learning_rate);
    FIELD_DOUBLE("agent.dqn.adam_epsilon", dqn.adam_epsilon);
    FIELD_DOUBLE("agent.dqn.epsilon_min", dqn.epsilon_min);
    FIELD_DOUBLE("agent.dqn.epsilon_max", dqn.epsilon_max);
    FIELD_LONG("agent.dqn.buffer_capacity", dqn.buffer_capacity);
    FIELD_INT("agent.dqn.batch_size", dqn.batch_size);
    FIELD_DOUBLE("agent.dqn.grad_clip", dqn.grad_clip);
    FIELD_LONG("agent.dqn.warmup_episodes", dqn.warmup_episodes);
    FIELD_LONG("agent.dqn.train_interval", dqn.train_interval_episodes);
    FIELD_LONG("agent.dqn.target_update_interval", dqn.target_update_interval_episodes);
    FIELD_INT("agent.dqn.train_steps_per_event", dqn.train_steps_per_event);
    FIELD_DOUBLE("agent.dqn.discount", dqn.discount);
    f.push_back({"agent.dqn.hidden",
                 [](Config& c, const std::string& v) {
                   c.dqn.hidden = parse_int_list(v, "agent.dqn.hidden");
                 },
                 [](const Config& c) { return format_int_list(c.dqn.hidden); }});

    FIELD_LONG("agent.ppo.updates", ppo.training_updates);
    FIELD_DOUBLE("agent.ppo.learning_rate", ppo.learning_rate);
    FIELD_DOUBLE("agent.ppo.adam_epsilon", ppo.adam_epsilon);
    FIELD_INT("agent.ppo.num_minibatches", ppo.num_minibatches);
    FIELD_INT("agent.ppo.epochs", ppo.epochs);
    FIELD_DOUBLE("agent.ppo.gae_lambda", ppo.gae_lambda);
    FIELD_DOUBLE("agent.ppo.value_coef", ppo.value_coef);
    FIELD_DOUBLE("agent.ppo.grad_clip", ppo.grad_clip);
    FIELD_DOUBLE("agent.ppo.clip_coef", ppo.clip_coef);
    FIELD_DOUBLE("agent.ppo.entropy_max", ppo.entropy_max);
    FIELD_DOUBLE("agent.ppo.entropy_min", ppo.entropy_min);
    FIELD_DOUBLE("agent.ppo.entropy_anneal_fraction", ppo.entropy_anneal_fraction);
    FIELD_INT("agent.ppo.num_envs", ppo.num_envs);
    FIELD_DOUBLE("agent.ppo.discount", ppo.discount);
    FIELD_BOOL("agent.ppo.normalize_advantages", ppo.normalize_advantages);
    f.push_back({"agent.ppo.hidden",
                 [](Config& c, const std::string& v) {
                   c.ppo.hidden = parse_int_list(v, "agent.ppo.hidden");
                 },
                 [](const Config& c) { return format_int_list(c.ppo.hidden); }});

#undef FIELD_NUM
#undef FIELD_LONG
#undef FIELD_INT
#undef FIELD_DOUBLE
#undef FIELD_AUTO_DOUBLE
#undef FIELD_BOOL
    return f;
  }();
  return fields;
}

const Field* find_field(const std::string& key) {
  for (const Field& f : schema())
    if (key == f.key) return &f;
  return nullptr;
}

}  // namespace

void Config::validate() const {
  require(market.n >= 2, Errc::config, "market.n must be >= 2 for experiments");
  require(market.differentiation > 0.0, Errc::config, "market.differentiation must be > 0");
  require(market.demand_scale >= 1, Errc::config, "market.demand_scale must be >= 1");
  require(market.horizon >= 1, Errc::config, "market.horizon must be >= 1");
  require(market.capacity_per_period >= 0, Errc::config,
          "market.capacity_per_period must be >= 0");
  require(market.grid_size >= 2, Errc::config, "market.grid_size must be >= 2");
  require(market.xi >= 0.0 && market.xi < 0.5, Errc::config, "market.xi must be in [0, 0.5)");
  require(!run.seeds.empty(), Errc::config, "run.seeds must list at least one seed");
  require(run.log_interval >= 0, Errc::config, "run.log_interval must be >= 0");
  try {
    if (run.algorithm == Algorithm::dqn)
      dqn.validate();
    else
      ppo.validate();
    solver.validate();
  } catch (const Error& e) {
    if (e.code() == Errc::not_implemented) throw;
    fail(Errc::config, e.what());
  }
}

Config parse_config_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, Errc::config,
            origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_override(cfg, key, value);
  }
  return cfg;
}

Config parse_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path), path);
}

void apply_override(Config& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  require(f != nullptr, Errc::config, "unknown config key: " + key);
  f->set(cfg, value);
}

bool is_config_key(const std::string& key) { return find_field(key) != nullptr; }

std::string dump_config(const Config& cfg) {
  std::string out;
  for (const Field& f : schema()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

std::uint64_t config_hash(const Config& cfg) {
  const std::string dump = dump_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const Config& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

MarketParams market_params_from(const MarketSection& m) {
  MarketParams p;
  p.n = m.n;
  p.qualities.assign(m.n, m.quality);
  p.outside_quality = m.outside_quality;
  p.differentiation = m.differentiation;
  p.costs.assign(m.n, m.cost);
  p.demand_scale = m.demand_scale;
  p.horizon = m.horizon;
  p.capacities.assign(m.n, m.capacity_per_period * static_cast<long>(m.horizon));
  return p;
}

}  // namespace pricelab
